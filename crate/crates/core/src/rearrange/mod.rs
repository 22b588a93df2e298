//! Distribution functions, decreasing rearrangements, disjoint sums,
//! dilations, (sub)majorization and the composite norms built on them.
//!
//! Everything here is exact step-function calculus; no sampling.

mod dist;
mod majorize;
mod stepfn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dist::{DistKind, DistSpec, Sign};
pub use majorize::{permutation_decomposition, Permutation, WeightedPermutation};
pub use stepfn::{StepFn, MERGE_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RearrangeError {
    #[error("invalid step function: {0}")]
    InvalidStep(String),
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("majorization fails at partial sum {index}: {y_sum} > {x_sum}")]
    NotMajorized { index: usize, y_sum: f64, x_sum: f64 },
    #[error("total masses differ: {y_total} vs {x_total}")]
    MassMismatch { y_total: f64, x_total: f64 },
}

/// Decreasing rearrangement of `|X|` for the law `d`.
pub fn rearrangement(d: &DistSpec) -> StepFn {
    d.rearrangement()
}

/// `λ(s) = |{μ > s}|`.
pub fn distribution_fn(mu: &StepFn, s: f64) -> f64 {
    mu.distribution(s)
}

/// Rearrangement of `⊕ f_k`: the distribution functions add.
pub fn disjoint_sum(mus: &[StepFn]) -> StepFn {
    StepFn::from_pieces(mus.iter().flat_map(|m| m.pieces())).unwrap_or_default()
}

/// `σ_s μ`.
pub fn dilate(mu: &StepFn, s: f64) -> StepFn {
    mu.dilate(s)
}

/// `g ≺≺ f`: `∫_0^t g <= ∫_0^t f + tol` for all `t`.
///
/// Both partial integrals are piecewise linear with kinks only at the
/// breakpoints, so checking the merged breakpoint set is exact.
pub fn submajorizes(f: &StepFn, g: &StepFn, tol: f64) -> bool {
    f.merged_breaks(g)
        .into_iter()
        .all(|t| g.integral_to(t) <= f.integral_to(t) + tol)
}

/// `g ≺ f`: submajorized with equal total mass.
pub fn majorizes(f: &StepFn, g: &StepFn, tol: f64) -> bool {
    submajorizes(f, g, tol) && (f.integral() - g.integral()).abs() <= tol
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositeNorm {
    L1,
    L2,
    /// `max(‖μ‖₁, ‖μ‖∞)`.
    L1capLinf,
    /// `max(‖μ‖₂, ‖μ‖∞)`.
    L2capLinf,
    /// `∫_0^1 μ + (∫_1^∞ μ²)^{1/2}`, equivalent to the `L₁+L₂` norm.
    L1plusL2Holmstedt,
}

pub fn composite_norm(mu: &StepFn, which: CompositeNorm) -> f64 {
    match which {
        CompositeNorm::L1 => mu.integral(),
        CompositeNorm::L2 => mu.integrate(|v| v * v).sqrt(),
        CompositeNorm::L1capLinf => mu.integral().max(mu.sup()),
        CompositeNorm::L2capLinf => mu.integrate(|v| v * v).sqrt().max(mu.sup()),
        CompositeNorm::L1plusL2Holmstedt => {
            let tail = mu.window(1.0, f64::INFINITY);
            mu.integral_to(1.0) + tail.integrate(|v| v * v).sqrt()
        }
    }
}

/// `min_c ‖(μ - c)₊‖₁ + ‖min(μ, c)‖₂` over the given truncation levels.
///
/// Each level gives an admissible `L₁ + L₂` decomposition, so this is an
/// upper bound for the `L₁+L₂` norm that approaches it as the grid refines.
pub fn l1_plus_l2_truncation(mu: &StepFn, levels: &[f64]) -> f64 {
    levels
        .iter()
        .map(|&c| {
            let l1: f64 = mu.integrate(|v| (v - c).max(0.0));
            let l2: f64 = mu.integrate(|v| v.min(c).powi(2)).sqrt();
            l1 + l2
        })
        .fold(f64::INFINITY, f64::min)
}

/// Head `μ χ_(0,1]` and tail `μ χ_(1,∞)` (shifted to the origin).
///
/// A step straddling `t = 1` is split so the head has measure exactly
/// `min(1, support)`.
pub fn head_tail_split(x: &StepFn) -> (StepFn, StepFn) {
    (x.window(0.0, 1.0), x.window(1.0, f64::INFINITY))
}

/// `μ(1, X)`, the head/tail threshold.
pub fn threshold(x: &StepFn) -> f64 {
    x.value_at(1.0)
}

/// Exact rearrangement of `max_k f_k` for independent positive `f_k`,
/// from `P(max <= s) = Π_k P(f_k <= s)`.
pub fn max_rearrangement(parts: &[StepFn]) -> StepFn {
    let mut values: Vec<f64> = parts.iter().flat_map(|p| p.breaks().iter().map(|b| b.1)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values.dedup();
    // measure of {f >= v}
    let at_least = |p: &StepFn, v: f64| {
        let idx = p.breaks().partition_point(|&(_, pv)| pv >= v);
        if idx == 0 {
            0.0
        } else {
            p.breaks()[idx - 1].0
        }
    };
    let mut prev = 0.0;
    let pieces: Vec<(f64, f64)> = values
        .into_iter()
        .map(|v| {
            let none: f64 = parts.iter().map(|p| 1.0 - at_least(p, v).min(1.0)).product();
            let mass = 1.0 - none;
            let piece = (v, (mass - prev).max(0.0));
            prev = mass;
            piece
        })
        .collect();
    StepFn::from_pieces(pieces).unwrap_or_default()
}
