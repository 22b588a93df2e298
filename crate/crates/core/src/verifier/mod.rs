//! Scenario families: both sides of each two-sided Φ-moment equivalence,
//! their ratio with Monte Carlo error bars, and the sharpness sweeps.

mod baselines;
mod json;
mod scenario;
mod suites;

use serde::Serialize;
use thiserror::Error;

use crate::free::{free_sum_spectrum, part_diagonal, rotated_sum_spectrum, FreeError, MatrixModel, SpectralSample};
use crate::kruglov::{max_law, sum_law, EmpiricalLaw, KruglovError, McConfig};
use crate::orlicz::{phi_moment, OrliczFn};
use crate::rearrange::{
    composite_norm, disjoint_sum, head_tail_split, threshold, CompositeNorm, DistSpec, StepFn,
};
use crate::stats::{mean_se, ratio_se};

pub use baselines::{calibrate, Baselines, FamilyBaseline, CALIBRATION_MARGIN};
pub use json::{to_canonical_json, to_canonical_value};
pub use scenario::{
    derive_seed, Config, Defaults, Family, MatrixParams, Mode, PartSpec, Resolved, Scenario, Statistic, SweepSpec,
};
pub use suites::{bundled_baselines, bundled_suite, bundled_suites, BUNDLED_SUITES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("scenario {id}: {msg}")]
    Invalid { id: String, msg: String },
    #[error("scenario {id}: numeric failure: {msg}")]
    Numeric { id: String, msg: String },
}

/// Allowed relative shortfall when checking `lhs >= Φ(|mean|)`.
const JENSEN_REL_TOL: f64 = 1e-9;
/// Number of standard errors allowed when testing bands and floors.
pub const SIGMA_SLACK: f64 = 3.0;
/// Largest `max / min` over an `a` sweep still called bounded.
pub const BOUNDED_SPREAD: f64 = 1.25;
/// Smallest `last / first` over an `a` sweep that counts as blow-up.
pub const BLOW_UP_GROWTH: f64 = 10.0;
/// Largest relative change between sweep rows at different `n`.
pub const N_STABILITY: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub a: f64,
    pub n: usize,
    pub ratio: f64,
    pub ratio_se: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepExpectation {
    /// Φ satisfies Δ₂: ratios stay within a constant factor.
    Bounded,
    /// Φ fails Δ₂: ratios must increase strictly and grow by a large factor.
    BlowUp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub expectation: SweepExpectation,
    pub rows: Vec<SweepRow>,
    /// Per `n`: `max / min` of the ratio over `a`.
    pub spread: Vec<f64>,
    /// Per `n`: `last / first` of the ratio over `a`.
    pub growth: Vec<f64>,
    /// Per `n`: whether the ratio increases strictly in `a`.
    pub strictly_increasing: Vec<bool>,
    /// Largest relative difference to the first `n` at equal `a`.
    pub n_stability: f64,
    pub ok: bool,
}

impl SweepReport {
    fn new(expectation: SweepExpectation, n_values: &[usize], rows: Vec<SweepRow>) -> Self {
        let by_n: Vec<Vec<&SweepRow>> =
            n_values.iter().map(|&n| rows.iter().filter(|r| r.n == n).collect()).collect();
        let spread: Vec<f64> = by_n
            .iter()
            .map(|rs| {
                let hi = rs.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
                let lo = rs.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
                hi / lo
            })
            .collect();
        let growth: Vec<f64> = by_n.iter().map(|rs| rs[rs.len() - 1].ratio / rs[0].ratio).collect();
        let strictly_increasing: Vec<bool> =
            by_n.iter().map(|rs| rs.windows(2).all(|w| w[1].ratio > w[0].ratio)).collect();
        let n_stability = by_n
            .iter()
            .skip(1)
            .flat_map(|rs| rs.iter().zip(&by_n[0]).map(|(r, r0)| ((r.ratio - r0.ratio) / r0.ratio).abs()))
            .fold(0.0, f64::max);
        let ok = match expectation {
            SweepExpectation::Bounded => {
                spread.iter().all(|&s| s < BOUNDED_SPREAD) && n_stability <= N_STABILITY
            }
            SweepExpectation::BlowUp => {
                strictly_increasing.iter().all(|&b| b) && growth.iter().all(|&g| g >= BLOW_UP_GROWTH)
            }
        };
        SweepReport { expectation, rows, spread, growth, strictly_increasing, n_stability, ok }
    }
}

/// One verification record.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub id: String,
    pub family: Family,
    pub mode: Mode,
    pub statistic: Statistic,
    pub n_parts: usize,
    pub phi: OrliczFn,
    pub seed: u64,
    pub scenario_hash: String,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs_head: f64,
    pub rhs_norm_term: f64,
    pub rhs_total: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    /// Mean of the statistic itself, used by the Jensen guard.
    pub statistic_mean: f64,
    pub jensen_ok: bool,
    /// False when Φ fails the Δ₂ probe; the equivalence is then not
    /// guaranteed and the report is informational.
    pub delta2_ok: bool,
    pub lower_floor: Option<f64>,
    pub floor_ok: bool,
    pub band: Option<[f64; 2]>,
    pub band_ok: Option<bool>,
    pub sweep: Option<SweepReport>,
    pub pass: bool,
}

struct Sides {
    lhs: f64,
    lhs_se: f64,
    rhs_head: f64,
    rhs_norm_term: f64,
    statistic_mean: f64,
    sweep: Option<SweepReport>,
}

fn numeric(id: &str) -> impl Fn(String) -> VerifyError + '_ {
    move |msg| VerifyError::Numeric { id: id.to_string(), msg }
}

fn disjoint_rearrangement(parts: &[DistSpec]) -> StepFn {
    let mus: Vec<StepFn> = parts.iter().map(DistSpec::rearrangement).collect();
    disjoint_sum(&mus)
}

fn head_moment(phi: &OrliczFn, x: &StepFn) -> f64 {
    phi_moment(phi, &head_tail_split(x).0)
}

fn classical_sides(law: &EmpiricalLaw, phi: &OrliczFn) -> (f64, f64, f64) {
    let (lhs, lhs_se) = law.phi_mean(phi);
    (lhs, lhs_se, law.mean_se().0)
}

fn mc_err(id: &str) -> impl Fn(KruglovError) -> VerifyError + '_ {
    move |e| VerifyError::Numeric { id: id.to_string(), msg: e.to_string() }
}

fn free_err(id: &str) -> impl Fn(FreeError) -> VerifyError + '_ {
    move |e| VerifyError::Numeric { id: id.to_string(), msg: e.to_string() }
}

pub fn verify_classical_positive(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let x = disjoint_rearrangement(&s.parts);
    let law = sum_law(&s.parts, &s.mc).map_err(mc_err(&s.id))?;
    let (lhs, lhs_se, mean) = classical_sides(&law, &s.phi);
    let sides = Sides {
        lhs,
        lhs_se,
        rhs_head: head_moment(&s.phi, &x),
        rhs_norm_term: s.phi.eval_abs(composite_norm(&x, CompositeNorm::L1)),
        statistic_mean: mean,
        sweep: None,
    };
    finish(s, sides, None)
}

pub fn verify_classical_symmetric(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let x = disjoint_rearrangement(&s.parts);
    let law = sum_law(&s.parts, &s.mc).map_err(mc_err(&s.id))?;
    let (lhs, lhs_se, mean) = classical_sides(&law, &s.phi);
    let sides = Sides {
        lhs,
        lhs_se,
        rhs_head: head_moment(&s.phi, &x),
        rhs_norm_term: s.phi.eval_abs(composite_norm(&x, CompositeNorm::L1plusL2Holmstedt)),
        statistic_mean: mean,
        sweep: None,
    };
    finish(s, sides, None)
}

pub fn verify_classical_max(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let x = disjoint_rearrangement(&s.parts);
    let law = max_law(&s.parts, &s.mc).map_err(mc_err(&s.id))?;
    let (lhs, lhs_se, mean) = classical_sides(&law, &s.phi);
    let sides = Sides {
        lhs,
        lhs_se,
        rhs_head: head_moment(&s.phi, &x),
        rhs_norm_term: 0.0,
        statistic_mean: mean,
        sweep: None,
    };
    finish(s, sides, None)
}

fn matrix_model(s: &Resolved, parts: Vec<DistSpec>) -> MatrixModel {
    MatrixModel { n_dim: s.matrix.n_dim, trials: s.matrix.trials, seed: s.seed, parts }
}

fn spectral_sides(spec: &SpectralSample, phi: &OrliczFn) -> (f64, f64, f64) {
    let (lhs, lhs_se) = spec.phi_mean(phi);
    (lhs, lhs_se, spec.trace_mean(|v| v).0)
}

/// Free sums, positive or symmetric according to the resolved family.
pub fn verify_free(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let x = disjoint_rearrangement(&s.parts);
    let norm = match s.family {
        Family::FreeSymmetricSum => CompositeNorm::L1plusL2Holmstedt,
        _ => CompositeNorm::L1,
    };
    let spec = if s.parts.is_empty() {
        SpectralSample::from_trials(vec![vec![0.0; s.matrix.n_dim]])
    } else {
        free_sum_spectrum(&matrix_model(s, s.parts.clone())).map_err(free_err(&s.id))?
    };
    let (lhs, lhs_se, mean) = spectral_sides(&spec, &s.phi);
    let sides = Sides {
        lhs,
        lhs_se,
        rhs_head: head_moment(&s.phi, &x),
        rhs_norm_term: s.phi.eval_abs(composite_norm(&x, norm)),
        statistic_mean: mean,
        sweep: None,
    };
    finish(s, sides, None)
}

/// The explicit witness `Σ_k x_k e_(θ,∞)(x_k) + θ` with `θ = μ(1, X)`,
/// compared against the head Φ-moment of `X`.
pub fn verify_free_maximal(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let x = disjoint_rearrangement(&s.parts);
    let theta = threshold(&x);
    let n = s.matrix.n_dim;
    let diagonals: Vec<Vec<f64>> = s
        .parts
        .iter()
        .map(|d| part_diagonal(d, n).into_iter().map(|v| if v > theta { v } else { 0.0 }).collect())
        .collect();
    let spec = if diagonals.is_empty() {
        SpectralSample::from_trials(vec![vec![0.0; n]])
    } else {
        rotated_sum_spectrum(&diagonals, s.matrix.trials, s.seed).map_err(free_err(&s.id))?
    }
    .shifted(theta);
    let (lhs, lhs_se, mean) = spectral_sides(&spec, &s.phi);
    let sides = Sides {
        lhs,
        lhs_se,
        rhs_head: head_moment(&s.phi, &x),
        rhs_norm_term: 0.0,
        statistic_mean: mean,
        sweep: None,
    };
    finish(s, sides, None)
}

/// `E Φ(a S_n) / Φ(a)` with `S_n` the sum of `n` parts `χ_(0,1/n)`.
///
/// Sums are homogeneous in `a`, so each `n` is simulated once and rescaled.
pub fn sharpness_sweep(
    phi: &OrliczFn,
    a_values: &[f64],
    n_values: &[usize],
    mode: Mode,
    mc: &McConfig,
    matrix: &MatrixParams,
) -> Result<Vec<SweepRow>, String> {
    let mut rows = Vec::with_capacity(a_values.len() * n_values.len());
    for &n in n_values {
        let parts = vec![DistSpec::scaled_indicator(1.0, 1.0 / n as f64); n];
        let samples: Vec<Vec<f64>> = match mode {
            Mode::Classical => {
                let law = sum_law(&parts, mc).map_err(|e| e.to_string())?;
                law.samples().iter().map(|&v| vec![v]).collect()
            }
            Mode::Free => {
                let model = MatrixModel { n_dim: matrix.n_dim, trials: matrix.trials, seed: mc.seed, parts };
                free_sum_spectrum(&model).map_err(|e| e.to_string())?.per_trial().to_vec()
            }
        };
        for &a in a_values {
            let per: Vec<f64> = samples
                .iter()
                .map(|t| t.iter().map(|&v| phi.eval_abs(a * v)).sum::<f64>() / t.len() as f64)
                .collect();
            let (m, se) = mean_se(&per);
            let denom = phi.eval_abs(a);
            let (ratio, ratio_se) = (m / denom, se / denom);
            if !ratio.is_finite() {
                return Err(format!("non-finite sweep ratio at a = {a}, n = {n}"));
            }
            rows.push(SweepRow { a, n, ratio, ratio_se });
        }
    }
    Ok(rows)
}

fn verify_sharpness(s: &Resolved) -> Result<RatioReport, VerifyError> {
    let sweep = s.sweep.as_ref().expect("validated");
    let rows = sharpness_sweep(&s.phi, &sweep.a_values, &sweep.n_values, s.mode, &s.mc, &s.matrix)
        .map_err(numeric(&s.id))?;
    let expectation =
        if s.phi.satisfies_delta2() { SweepExpectation::Bounded } else { SweepExpectation::BlowUp };
    let report = SweepReport::new(expectation, &sweep.n_values, rows);
    // headline numbers: largest a at the first n
    let last = report.rows.iter().rfind(|r| r.n == sweep.n_values[0]).expect("nonempty sweep");
    let denom = s.phi.eval_abs(last.a);
    let sides = Sides {
        lhs: last.ratio * denom,
        lhs_se: last.ratio_se * denom,
        rhs_head: denom,
        rhs_norm_term: 0.0,
        statistic_mean: last.a,
        sweep: Some(report),
    };
    finish(s, sides, None)
}

fn finish(s: &Resolved, sides: Sides, band: Option<[f64; 2]>) -> Result<RatioReport, VerifyError> {
    let rhs_total = sides.rhs_head + sides.rhs_norm_term;
    let (ratio, ratio_se) = if rhs_total == 0.0 && sides.lhs == 0.0 {
        (1.0, 0.0)
    } else {
        (sides.lhs / rhs_total, ratio_se(sides.lhs, sides.lhs_se, rhs_total, 0.0))
    };
    for (name, v) in [("lhs", sides.lhs), ("rhs", rhs_total), ("ratio", ratio), ("ratio_se", ratio_se)] {
        if !v.is_finite() {
            return Err(VerifyError::Numeric { id: s.id.clone(), msg: format!("{name} is not finite ({v})") });
        }
    }
    // Jensen: E Φ(|S|) >= Φ(|E S|); the sharpness headline has no mean to test.
    let jensen_ok = sides.sweep.is_some()
        || sides.lhs >= s.phi.eval_abs(sides.statistic_mean) * (1.0 - JENSEN_REL_TOL);
    let lower_floor = s.family.lower_floor();
    let floor_ok = lower_floor.is_none_or(|f| ratio + SIGMA_SLACK * ratio_se >= f);
    let mut report = RatioReport {
        id: s.id.clone(),
        family: s.family,
        mode: s.mode,
        statistic: s.statistic,
        n_parts: s.parts.len(),
        phi: s.phi.clone(),
        seed: s.seed,
        scenario_hash: s.hash(),
        lhs: sides.lhs,
        lhs_se: sides.lhs_se,
        rhs_head: sides.rhs_head,
        rhs_norm_term: sides.rhs_norm_term,
        rhs_total,
        ratio,
        ratio_se,
        statistic_mean: sides.statistic_mean,
        jensen_ok,
        delta2_ok: s.phi.satisfies_delta2(),
        lower_floor,
        floor_ok,
        band: None,
        band_ok: None,
        sweep: sides.sweep,
        pass: false,
    };
    report.apply_band(band);
    Ok(report)
}

impl RatioReport {
    /// Attaches a pass band and recomputes `pass`. Bands only bind for Δ₂ Φ.
    pub fn apply_band(&mut self, band: Option<[f64; 2]>) {
        let band = band.filter(|_| self.delta2_ok);
        self.band = band;
        self.band_ok = band.map(|[lo, hi]| {
            let slack = SIGMA_SLACK * self.ratio_se;
            self.ratio + slack >= lo && self.ratio - slack <= hi
        });
        self.pass = self.jensen_ok
            && self.floor_ok
            && self.band_ok.unwrap_or(true)
            && self.sweep.as_ref().is_none_or(|s| s.ok);
    }
}

/// Runs one resolved scenario and applies the family band from `baselines`.
pub fn run_scenario(s: &Resolved, baselines: Option<&Baselines>) -> Result<RatioReport, VerifyError> {
    let mut report = match s.family {
        Family::ClassicalPositiveSum => verify_classical_positive(s),
        Family::ClassicalSymmetricSum => verify_classical_symmetric(s),
        Family::ClassicalMax => verify_classical_max(s),
        Family::FreePositiveSum | Family::FreeSymmetricSum => verify_free(s),
        Family::FreeMaximalWitness => verify_free_maximal(s),
        Family::ClassicalSharpness | Family::FreeSharpness => verify_sharpness(s),
    }?;
    report.apply_band(baselines.and_then(|b| b.band(s.family)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(json: &str) -> Resolved {
        let c: Config = serde_json::from_str(json).unwrap();
        c.resolve_all(None).unwrap().remove(0)
    }

    #[test]
    fn single_part_max_is_exact_up_to_mc() {
        let s = resolve(
            r#"{"scenarios":[{"id":"m","mode":"classical","statistic":"max",
               "parts":[{"kind":"atoms","atoms":[[3.0,0.2],[1.0,0.5]]}],
               "phi":{"kind":"power","p":2.0},"mc":{"trials":20000}}]}"#,
        );
        let r = run_scenario(&s, None).unwrap();
        assert_eq!(r.rhs_head, 9.0 * 0.2 + 0.5);
        assert!((r.ratio - 1.0).abs() < 4.0 * r.ratio_se, "{r:?}");
        assert!(r.pass);
    }

    #[test]
    fn all_zero_parts_give_ratio_one() {
        let s = resolve(
            r#"{"scenarios":[{"id":"z","mode":"classical","statistic":"sum",
               "parts":[{"kind":"atoms","atoms":[[0.0,1.0]],"repeat":3}],
               "phi":{"kind":"power","p":2.0},"mc":{"trials":100}}]}"#,
        );
        let r = run_scenario(&s, None).unwrap();
        assert_eq!((r.lhs, r.rhs_total, r.ratio), (0.0, 0.0, 1.0));
    }

    #[test]
    fn rhs_is_seed_independent() {
        let json = r#"{"scenarios":[{"id":"r","mode":"classical","statistic":"sum",
               "parts":[{"kind":"scaled_indicator","a":1.0,"u":0.1,"repeat":10}],
               "phi":{"kind":"power","p":3.0},"mc":{"trials":2000}}]}"#;
        let c: Config = serde_json::from_str(json).unwrap();
        let a = run_scenario(&c.resolve_all(Some(1)).unwrap()[0], None).unwrap();
        let b = run_scenario(&c.resolve_all(Some(2)).unwrap()[0], None).unwrap();
        assert_eq!(a.rhs_total, b.rhs_total);
        assert_ne!(a.lhs, b.lhs);
    }

    #[test]
    fn sweep_verdicts() {
        let rows = |v: &[f64]| {
            v.iter().enumerate().map(|(i, &r)| SweepRow { a: i as f64 + 1.0, n: 4, ratio: r, ratio_se: 0.0 }).collect()
        };
        assert!(SweepReport::new(SweepExpectation::BlowUp, &[4], rows(&[1.0, 3.0, 20.0])).ok);
        assert!(!SweepReport::new(SweepExpectation::BlowUp, &[4], rows(&[1.0, 30.0, 20.0])).ok);
        assert!(SweepReport::new(SweepExpectation::Bounded, &[4], rows(&[1.0, 1.1, 1.2])).ok);
        assert!(!SweepReport::new(SweepExpectation::Bounded, &[4], rows(&[1.0, 1.3])).ok);
    }
}
