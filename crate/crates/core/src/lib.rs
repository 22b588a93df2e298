pub mod orlicz;
pub mod rearrange;
pub mod rng;
pub mod stats;
pub mod kruglov;
pub mod free;
pub mod verifier;
pub mod cli;
