//! Pilot-calibrated pass bands, one per family.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Family, RatioReport};

/// Multiplicative widening applied to the observed pilot range.
pub const CALIBRATION_MARGIN: f64 = 1.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyBaseline {
    /// `[min, max]` ratio observed in the pilot run.
    pub observed: [f64; 2],
    pub band: [f64; 2],
    /// Single constant with `band ⊆ [1/c, c]`; for the maximal witness the
    /// band is `[1/c, 64 c]`.
    pub c: f64,
    pub scenarios: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub calibration_seed: u64,
    pub margin: f64,
    pub families: BTreeMap<Family, FamilyBaseline>,
}

impl Baselines {
    pub fn band(&self, family: Family) -> Option<[f64; 2]> {
        self.families.get(&family).map(|b| b.band)
    }

    pub fn constant(&self, family: Family) -> Option<f64> {
        self.families.get(&family).map(|b| b.c)
    }
}

/// Builds bands from pilot reports. Sharpness sweeps and non-Δ₂ Φ are skipped.
pub fn calibrate(reports: &[RatioReport], calibration_seed: u64, margin: f64) -> Baselines {
    let mut ranges: BTreeMap<Family, ([f64; 2], usize)> = BTreeMap::new();
    for r in reports.iter().filter(|r| r.delta2_ok && r.sweep.is_none()) {
        let e = ranges.entry(r.family).or_insert(([f64::INFINITY, f64::NEG_INFINITY], 0));
        e.0[0] = e.0[0].min(r.ratio);
        e.0[1] = e.0[1].max(r.ratio);
        e.1 += 1;
    }
    let families = ranges
        .into_iter()
        .map(|(family, ([lo, hi], scenarios))| {
            let (band, c) = if family == Family::FreeMaximalWitness {
                let c = (margin / lo).max(margin * hi / 64.0).max(1.0);
                ([1.0 / c, 64.0 * c], c)
            } else {
                let band = [lo / margin, hi * margin];
                (band, (1.0 / band[0]).max(band[1]))
            };
            (family, FamilyBaseline { observed: [lo, hi], band, c, scenarios })
        })
        .collect();
    Baselines { calibration_seed, margin, families }
}
