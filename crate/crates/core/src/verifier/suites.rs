//! Versioned scenario suites and their calibrated baselines, compiled in.

use super::{Baselines, Config};

/// `(name, json)` for every bundled suite.
pub const BUNDLED_SUITES: &[(&str, &str)] = &[
    ("classical_positive_sum", include_str!("../../suites/classical_positive_sum.json")),
    ("classical_symmetric_sum", include_str!("../../suites/classical_symmetric_sum.json")),
    ("classical_max", include_str!("../../suites/classical_max.json")),
    ("free_sum", include_str!("../../suites/free_sum.json")),
    ("free_maximal_witness", include_str!("../../suites/free_maximal_witness.json")),
    ("sharpness", include_str!("../../suites/sharpness.json")),
];

const BASELINES: &str = include_str!("../../suites/baselines.json");

pub fn bundled_suite(name: &str) -> Option<Config> {
    BUNDLED_SUITES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| serde_json::from_str(s).expect("bundled suites parse"))
}

pub fn bundled_suites() -> Vec<(&'static str, Config)> {
    BUNDLED_SUITES.iter().map(|(n, s)| (*n, serde_json::from_str(s).expect("bundled suites parse"))).collect()
}

pub fn bundled_baselines() -> Baselines {
    serde_json::from_str(BASELINES).expect("bundled baselines parse")
}
