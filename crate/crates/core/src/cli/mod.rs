//! Command-line front door: `run`, `selftest`, `calibrate`, `export-suites`.

mod output;
mod selftest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::verifier::{
    bundled_baselines, bundled_suite, calibrate, run_scenario, to_canonical_json, Baselines, Config, RatioReport,
    Resolved, VerifyError, BUNDLED_SUITES, CALIBRATION_MARGIN,
};

pub use output::{summary_csv, SUMMARY_HEADER};
pub use selftest::{run_selftest, SelftestOptions};

/// Seed used by `calibrate` unless overridden; distinct from the suites' own seeds.
pub const DEFAULT_CALIBRATION_SEED: u64 = 7777;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "phimoment", version, about = "Verify two-sided Φ-moment inequalities numerically")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run scenarios and write reports, summary.csv and plot data.
    Run(RunArgs),
    /// Fast invariant checks; exits 1 naming the first failing property.
    Selftest {
        /// Breakpoint merge tolerance used by the rearrangement checks.
        #[arg(long, hide = true, default_value_t = crate::rearrange::MERGE_TOL)]
        merge_tol: f64,
    },
    /// Re-derive pass bands from a pilot run and write baselines.json.
    Calibrate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CALIBRATION_SEED)]
        seed: u64,
        #[arg(long, default_value = "baselines.json")]
        out: PathBuf,
        #[arg(long, env = "PHIMOMENT_WORKERS", default_value_t = 0)]
        workers: usize,
    },
    /// Write the bundled scenario suites and baselines to a directory.
    ExportSuites {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Debug, clap::Args)]
pub struct RunArgs {
    /// Scenario config file.
    #[arg(long, required_unless_present = "suite")]
    pub config: Option<PathBuf>,
    /// Bundled suite name, or `all`; may be repeated.
    #[arg(long)]
    pub suite: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Base seed; every scenario seed is derived from it and the scenario id.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "PHIMOMENT_WORKERS", default_value_t = 0)]
    pub workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Only run scenarios whose id matches this glob.
    #[arg(long)]
    pub filter: Option<String>,
    /// Baselines file; defaults to the bundled one.
    #[arg(long)]
    pub baselines: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: parse error at line {line}, column {column}: {msg}")]
    Parse { path: String, line: usize, column: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{failed} of {total} scenarios failed their checks")]
    Failed { failed: usize, total: usize },
    #[error("selftest failed: {0}")]
    Selftest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Verify(VerifyError::Invalid { .. }) => 3,
            CliError::Verify(VerifyError::Numeric { .. }) => 4,
            CliError::Io { .. } => 4,
            CliError::Failed { .. } | CliError::Selftest(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_json(&text, &path.display().to_string())
}

/// Resolved scenarios from the config file and the named bundled suites.
fn collect_scenarios(
    config: Option<&Path>,
    suites: &[String],
    seed: Option<u64>,
) -> Result<(Vec<Resolved>, Vec<String>), CliError> {
    let mut sources = Vec::new();
    let mut configs = Vec::new();
    if let Some(path) = config {
        configs.push(load_config(path)?);
        sources.push(path.display().to_string());
    }
    for name in suites {
        let names: Vec<&str> = if name == "all" {
            BUNDLED_SUITES.iter().map(|(n, _)| *n).collect()
        } else {
            vec![name.as_str()]
        };
        for n in names {
            let c = bundled_suite(n).ok_or_else(|| CliError::Usage(format!("unknown bundled suite {n:?}")))?;
            configs.push(c);
            sources.push(format!("bundled:{n}"));
        }
    }
    let mut resolved = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for c in &configs {
        for r in c.resolve_all(seed)? {
            if !seen.insert(r.id.clone()) {
                return Err(VerifyError::Invalid { id: r.id, msg: "duplicate scenario id".into() }.into());
            }
            resolved.push(r);
        }
    }
    Ok((resolved, sources))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))
}

/// Runs every scenario in id order, logging one line each to stderr.
fn execute(scenarios: &[Resolved], baselines: Option<&Baselines>) -> Result<Vec<RatioReport>, CliError> {
    let mut order: Vec<&Resolved> = scenarios.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let mut reports = Vec::with_capacity(order.len());
    for s in order {
        let start = Instant::now();
        let r = run_scenario(s, baselines)?;
        eprintln!(
            "{:<32} ratio {:>10.5} ± {:<9.2e} {} ({:.1?})",
            r.id,
            r.ratio,
            r.ratio_se,
            if r.pass { "pass" } else { "FAIL" },
            start.elapsed()
        );
        reports.push(r);
    }
    Ok(reports)
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config_path: Option<String>,
    sources: &'a [String],
    output_dir: String,
    seed_override: Option<u64>,
    workers: usize,
    format: Format,
    filter: Option<&'a str>,
    baselines: String,
    scenarios: usize,
}

/// Runs and writes all outputs; failing checks are left in the reports.
pub fn run_reports(args: &RunArgs) -> Result<Vec<RatioReport>, CliError> {
    let (mut scenarios, sources) = collect_scenarios(args.config.as_deref(), &args.suite, args.seed)?;
    if let Some(f) = &args.filter {
        let pat = glob::Pattern::new(f).map_err(|e| CliError::Usage(format!("bad --filter glob: {e}")))?;
        scenarios.retain(|s| pat.matches(&s.id));
    }
    let (baselines, baselines_src) = match &args.baselines {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err(p))?;
            (parse_json::<Baselines>(&text, &p.display().to_string())?, p.display().to_string())
        }
        None => (bundled_baselines(), "bundled".to_string()),
    };

    let reports = thread_pool(args.workers)?.install(|| execute(&scenarios, Some(&baselines)))?;

    let manifest = RunManifest {
        config_path: args.config.as_ref().map(|p| p.display().to_string()),
        sources: &sources,
        output_dir: args.out.display().to_string(),
        seed_override: args.seed,
        workers: args.workers,
        format: args.format,
        filter: args.filter.as_deref(),
        baselines: baselines_src,
        scenarios: reports.len(),
    };
    output::write_outputs(&args.out, args.format, &reports, &to_canonical_json(&manifest))?;
    Ok(reports)
}

/// [`run_reports`], failing with exit code 1 when any scenario misses its checks.
pub fn run(args: &RunArgs) -> Result<Vec<RatioReport>, CliError> {
    let reports = run_reports(args)?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(CliError::Failed { failed, total: reports.len() });
    }
    Ok(reports)
}

fn calibrate_cmd(config: Option<&Path>, seed: u64, out: &Path, workers: usize) -> Result<(), CliError> {
    let suites = if config.is_none() { vec!["all".to_string()] } else { Vec::new() };
    let (scenarios, _) = collect_scenarios(config, &suites, Some(seed))?;
    let reports = thread_pool(workers)?.install(|| execute(&scenarios, None))?;
    let baselines = calibrate(&reports, seed, CALIBRATION_MARGIN);
    std::fs::write(out, to_canonical_json(&baselines)).map_err(io_err(out))
}

fn export_suites(out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    for (name, text) in BUNDLED_SUITES {
        let p = out.join(format!("{name}.json"));
        std::fs::write(&p, text).map_err(io_err(&p))?;
    }
    let p = out.join("baselines.json");
    std::fs::write(&p, to_canonical_json(&bundled_baselines())).map_err(io_err(&p))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(args) => run(args).map(|_| ()),
        Command::Selftest { merge_tol } => {
            let opts = SelftestOptions { merge_tol: *merge_tol };
            run_selftest(&opts, &mut std::io::stdout()).map_err(CliError::Selftest)
        }
        Command::Calibrate { config, seed, out, workers } => calibrate_cmd(config.as_deref(), *seed, out, *workers),
        Command::ExportSuites { out } => export_suites(out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
