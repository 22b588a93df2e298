fn main() {
    std::process::exit(phimoment::cli::main_with_args(std::env::args_os()));
}
