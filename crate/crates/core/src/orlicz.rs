//! Orlicz functions: evaluation, a numerical Δ₂ probe, Φ-moments of step
//! functions and Luxemburg norms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rearrange::StepFn;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrliczError {
    #[error("Phi evaluated at negative or non-finite argument {0}")]
    Domain(f64),
    #[error("Phi vanishes at t = {0} > 0; ratio probe is undefined")]
    Degenerate(f64),
    #[error("probe grid rejected: {0}")]
    Grid(String),
    #[error("invalid Orlicz function: {0}")]
    Invalid(String),
    #[error("Luxemburg norm outside the search range [1e-12, 1e12]")]
    OutOfRange,
}

/// An even convex `Φ` with `Φ(0) = 0`, described on `[0, ∞)`.
///
/// `Power` with `p < 1` is accepted for quasi-norm sweeps but is not convex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrliczFn {
    /// `t^p`.
    Power { p: f64 },
    /// `t^p log(1 + t)`.
    PowerLog { p: f64 },
    /// `exp(t / scale) - 1`.
    ExpMinusOne { scale: f64 },
    /// Piecewise linear through `(t, Φ(t))`, extended by the last slope.
    /// A leading `(0, 0)` is implied when absent.
    Tabulated { breakpoints: Vec<(f64, f64)> },
}

/// Outcome of [`delta2_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Delta2Probe {
    pub satisfied: bool,
    /// `max Φ(2t)/Φ(t)` over the grid; `+∞` once the ratio overflows.
    pub sup_ratio: f64,
}

pub const DELTA2_CAP: f64 = 1e6;

impl OrliczFn {
    pub fn power(p: f64) -> Self {
        OrliczFn::Power { p }
    }

    pub fn power_log(p: f64) -> Self {
        OrliczFn::PowerLog { p }
    }

    pub fn exp_minus_one(scale: f64) -> Self {
        OrliczFn::ExpMinusOne { scale }
    }

    pub fn validate(&self) -> Result<(), OrliczError> {
        match self {
            OrliczFn::Power { p } if !(p.is_finite() && *p > 0.0) => {
                Err(OrliczError::Invalid(format!("power exponent {p} must be positive")))
            }
            OrliczFn::PowerLog { p } if !(p.is_finite() && *p >= 1.0) => {
                Err(OrliczError::Invalid(format!("power_log exponent {p} must be at least 1")))
            }
            OrliczFn::ExpMinusOne { scale } if !(scale.is_finite() && *scale > 0.0) => {
                Err(OrliczError::Invalid(format!("exp_minus_one scale {scale} must be positive")))
            }
            OrliczFn::Tabulated { breakpoints } => validate_table(breakpoints),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, OrliczError> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(OrliczError::Domain(t));
        }
        Ok(self.eval_unchecked(t))
    }

    /// `Φ(|t|)`, the even extension.
    pub fn eval_abs(&self, t: f64) -> f64 {
        self.eval_unchecked(t.abs())
    }

    fn eval_unchecked(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            OrliczFn::Power { p } => t.powf(*p),
            OrliczFn::PowerLog { p } => t.powf(*p) * t.ln_1p(),
            OrliczFn::ExpMinusOne { scale } => (t / scale).exp_m1(),
            OrliczFn::Tabulated { breakpoints } => eval_table(breakpoints, t),
        }
    }

    /// Known answer to the Δ₂ question for the analytic kinds.
    pub fn delta2_exact(&self) -> Option<bool> {
        match self {
            OrliczFn::Power { .. } | OrliczFn::PowerLog { .. } => Some(true),
            OrliczFn::ExpMinusOne { .. } => Some(false),
            OrliczFn::Tabulated { .. } => None,
        }
    }

    /// The exact flag when there is one, otherwise the probe on the default grid.
    pub fn satisfies_delta2(&self) -> bool {
        self.delta2_exact().unwrap_or_else(|| {
            delta2_probe(self, &default_delta2_grid()).is_ok_and(|r| r.satisfied)
        })
    }
}

fn table_with_origin(breakpoints: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let origin = match breakpoints.first() {
        Some(&(t, _)) if t == 0.0 => None,
        _ => Some((0.0, 0.0)),
    };
    origin.into_iter().chain(breakpoints.iter().copied())
}

fn validate_table(breakpoints: &[(f64, f64)]) -> Result<(), OrliczError> {
    if breakpoints.is_empty() {
        return Err(OrliczError::Invalid("tabulated Phi needs at least one breakpoint".into()));
    }
    let pts: Vec<(f64, f64)> = table_with_origin(breakpoints).collect();
    if pts[0].1 != 0.0 {
        return Err(OrliczError::Invalid("tabulated Phi must vanish at 0".into()));
    }
    let mut prev_slope: f64 = 0.0;
    for (i, w) in pts.windows(2).enumerate() {
        let ((t0, y0), (t1, y1)) = (w[0], w[1]);
        if !(t1.is_finite() && y1.is_finite()) || t1 <= t0 || y1 < 0.0 {
            return Err(OrliczError::Invalid(format!("breakpoint {i} breaks ordering or positivity")));
        }
        let slope = (y1 - y0) / (t1 - t0);
        if slope < -1e-12 * y1.abs().max(1.0) {
            return Err(OrliczError::Invalid(format!("Phi decreases before breakpoint {i}")));
        }
        if slope < prev_slope - 1e-12 * prev_slope.abs().max(1.0) {
            return Err(OrliczError::Invalid(format!("slopes decrease at breakpoint {i}; not convex")));
        }
        prev_slope = slope;
    }
    Ok(())
}

fn eval_table(breakpoints: &[(f64, f64)], t: f64) -> f64 {
    let pts: Vec<(f64, f64)> = table_with_origin(breakpoints).collect();
    let idx = pts.partition_point(|&(x, _)| x < t);
    let (a, b) = if idx == 0 {
        return 0.0;
    } else if idx < pts.len() {
        (pts[idx - 1], pts[idx])
    } else if pts.len() >= 2 {
        (pts[pts.len() - 2], pts[pts.len() - 1])
    } else {
        return 0.0;
    };
    let slope = (b.1 - a.1) / (b.0 - a.0);
    a.1 + slope * (t - a.0)
}

/// 30 points per decade over `[1e-4, 1e4]`.
pub fn default_delta2_grid() -> Vec<f64> {
    log_grid(1e-4, 1e4, 241)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `sup Φ(2t)/Φ(t)` over `grid` and a boundedness verdict.
///
/// The verdict needs the supremum below [`DELTA2_CAP`] and a flat tail: the
/// largest ratio in the top decade may not exceed twice the largest ratio in
/// the decade around the geometric centre of the grid.
pub fn delta2_probe(phi: &OrliczFn, grid: &[f64]) -> Result<Delta2Probe, OrliczError> {
    if grid.len() < 200 {
        return Err(OrliczError::Grid(format!("{} points, need at least 200", grid.len())));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(OrliczError::Grid("points must be positive and finite".into()));
    }
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(0.0, f64::max);
    if (hi / lo).log10() < 8.0 - 1e-9 {
        return Err(OrliczError::Grid(format!("spans {:.2} decades, need 8", (hi / lo).log10())));
    }
    let mid = (lo * hi).sqrt();
    let (mut sup, mut last_max, mut mid_max) = (0.0f64, 0.0f64, 0.0f64);
    for &t in grid {
        let base = phi.eval(t)?;
        if base == 0.0 {
            return Err(OrliczError::Degenerate(t));
        }
        let mut r = phi.eval_abs(2.0 * t) / base;
        if !r.is_finite() {
            r = f64::INFINITY;
        }
        sup = sup.max(r);
        if t >= hi / 10.0 {
            last_max = last_max.max(r);
        }
        if t >= mid / 10f64.sqrt() && t <= mid * 10f64.sqrt() {
            mid_max = mid_max.max(r);
        }
    }
    let satisfied = sup < DELTA2_CAP && last_max <= 2.0 * mid_max;
    Ok(Delta2Probe { satisfied, sup_ratio: sup })
}

/// `γ̂ = max Φ(u+v) / (Φ(u) + Φ(v))` over pairs from `grid`.
pub fn delta2_gamma(phi: &OrliczFn, grid: &[f64]) -> f64 {
    let vals: Vec<f64> = grid.iter().map(|&t| phi.eval_abs(t)).collect();
    let mut best = 0.0f64;
    for (i, &u) in grid.iter().enumerate() {
        for (j, &v) in grid.iter().enumerate().skip(i) {
            let den = vals[i] + vals[j];
            if den > 0.0 {
                best = best.max(phi.eval_abs(u + v) / den);
            }
        }
    }
    best
}

/// `∫_0^∞ Φ(μ(t)) dt`, exact for step functions.
pub fn phi_moment(phi: &OrliczFn, mu: &StepFn) -> f64 {
    mu.integrate(|v| phi.eval_abs(v))
}

/// `inf{λ > 0 : ∫ Φ(μ/λ) <= 1}` by bisection in `log λ`.
pub fn luxemburg_norm(phi: &OrliczFn, mu: &StepFn) -> Result<f64, OrliczError> {
    if mu.is_zero() {
        return Ok(0.0);
    }
    let modular = |lambda: f64| mu.integrate(|v| phi.eval_abs(v / lambda));
    let (mut lo, mut hi) = (1e-12f64, 1e12f64);
    if modular(hi) > 1.0 {
        return Err(OrliczError::OutOfRange);
    }
    if modular(lo) <= 1.0 {
        return Err(OrliczError::OutOfRange);
    }
    while hi / lo - 1.0 > 1e-13 {
        let mid = (lo * hi).sqrt();
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn eval_examples() {
        assert_eq!(OrliczFn::power(2.0).eval(3.0).unwrap(), 9.0);
        for p in [0.5, 1.0, 2.0, 7.5] {
            assert_eq!(OrliczFn::power(p).eval(0.0).unwrap(), 0.0);
        }
        assert!((OrliczFn::exp_minus_one(1.0).eval(1.0).unwrap() - (E - 1.0)).abs() < 1e-15);
        assert!(matches!(OrliczFn::power(2.0).eval(-1.0), Err(OrliczError::Domain(_))));
        assert_eq!(OrliczFn::power(2.0).eval_abs(-3.0), 9.0);
    }

    #[test]
    fn json_shape() {
        let phi: OrliczFn = serde_json::from_str(r#"{"kind":"power","p":2.0}"#).unwrap();
        assert_eq!(phi, OrliczFn::power(2.0));
        let phi: OrliczFn = serde_json::from_str(r#"{"kind":"exp_minus_one","scale":1.0}"#).unwrap();
        assert_eq!(phi, OrliczFn::exp_minus_one(1.0));
        assert!(serde_json::from_str::<OrliczFn>(r#"{"kind":"cosh","p":2.0}"#).is_err());
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates() {
        let phi = OrliczFn::Tabulated { breakpoints: vec![(1.0, 1.0), (2.0, 3.0)] };
        phi.validate().unwrap();
        assert_eq!(phi.eval(0.5).unwrap(), 0.5);
        assert_eq!(phi.eval(1.5).unwrap(), 2.0);
        assert_eq!(phi.eval(4.0).unwrap(), 7.0);
        let bad = OrliczFn::Tabulated { breakpoints: vec![(1.0, 2.0), (2.0, 3.0)] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn probe_examples() {
        let grid = default_delta2_grid();
        let r = delta2_probe(&OrliczFn::power(3.0), &grid).unwrap();
        assert!(r.satisfied);
        assert!((r.sup_ratio - 8.0).abs() < 1e-9);

        let r = delta2_probe(&OrliczFn::power_log(2.0), &grid).unwrap();
        assert!(r.satisfied);
        assert!(r.sup_ratio <= 8.0 + 1e-12);

        let r = delta2_probe(&OrliczFn::exp_minus_one(1.0), &grid).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn probe_rejects_short_grids() {
        let phi = OrliczFn::power(2.0);
        assert!(matches!(delta2_probe(&phi, &log_grid(1e-2, 1e2, 300)), Err(OrliczError::Grid(_))));
        assert!(matches!(delta2_probe(&phi, &log_grid(1e-4, 1e4, 50)), Err(OrliczError::Grid(_))));
        let flat = OrliczFn::Tabulated { breakpoints: vec![(1.0, 0.0), (2.0, 1.0)] };
        assert!(matches!(delta2_probe(&flat, &default_delta2_grid()), Err(OrliczError::Degenerate(_))));
    }

    #[test]
    fn moment_examples() {
        let mu = StepFn::indicator(2.0, 0.5);
        assert_eq!(phi_moment(&OrliczFn::power(2.0), &mu), 2.0);
        let mu = StepFn::new(vec![(0.25, 3.0), (1.0, 1.0)]).unwrap();
        assert_eq!(phi_moment(&OrliczFn::power(1.0), &mu), mu.integral());
        let one = StepFn::indicator(1.0, 1.0);
        assert!((phi_moment(&OrliczFn::exp_minus_one(1.0), &one) - (E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn luxemburg_examples() {
        let mu = StepFn::new(vec![(0.25, 3.0), (1.5, 1.0)]).unwrap();
        for p in [1.0, 2.0, 3.5] {
            let lp = mu.integrate(|v| v.powf(p)).powf(1.0 / p);
            let lux = luxemburg_norm(&OrliczFn::power(p), &mu).unwrap();
            assert!((lux / lp - 1.0).abs() < 1e-10, "p={p}: {lux} vs {lp}");
        }
        let c = StepFn::indicator(2.5, 1.0);
        assert!((luxemburg_norm(&OrliczFn::power(2.0), &c).unwrap() - 2.5).abs() < 1e-10);
        let one = StepFn::indicator(1.0, 1.0);
        let lux = luxemburg_norm(&OrliczFn::exp_minus_one(1.0), &one).unwrap();
        assert!((lux - 1.0 / 2f64.ln()).abs() < 1e-10);
        assert_eq!(luxemburg_norm(&OrliczFn::power(2.0), &StepFn::zero()).unwrap(), 0.0);
    }
}
