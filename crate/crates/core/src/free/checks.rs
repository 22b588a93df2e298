//! Comparisons of matrix-model spectra with their free-probability targets.

use serde::{Deserialize, Serialize};

use super::cumulants::{cumulants_to_moments, empirical_moments, moments_to_cumulants, CumulantSeq};
use super::matrix::{
    free_kruglov_spectrum, free_sum_spectrum, part_diagonal, rotated_sum_spectrum, MatrixModel, SpectralSample,
};
use super::poisson::{free_poisson_atom, free_poisson_cdf, free_poisson_quantiles};
use super::FreeError;
use crate::rearrange::{disjoint_sum, majorizes, DistSpec, StepFn, MERGE_TOL};
use crate::stats::ks_against_cdf;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: usize,
    pub empirical: f64,
    pub se: f64,
    /// Free-cumulant prediction from the finite-N part diagonals.
    pub predicted: f64,
    /// Prediction for the limiting laws.
    pub ideal: f64,
}

impl MomentCheck {
    /// `|empirical - predicted|` in units of the standard error.
    pub fn z(&self) -> f64 {
        let d = (self.empirical - self.predicted).abs();
        // traces that are deterministic up to rounding
        if d <= 1e-9 * self.predicted.abs().max(1.0) {
            0.0
        } else {
            d / self.se
        }
    }
}

fn moment_checks(sample: &SpectralSample, predicted: &[f64], ideal: &[f64]) -> Vec<MomentCheck> {
    (1..=predicted.len())
        .map(|j| {
            let (empirical, se) = sample.trace_mean(|x| x.powi(j as i32));
            MomentCheck { order: j, empirical, se, predicted: predicted[j - 1], ideal: ideal[j - 1] }
        })
        .collect()
}

/// Free cumulants of a finite diagonal, i.e. of its spectral law.
fn diagonal_cumulants(diag: &[f64], order: usize) -> CumulantSeq {
    moments_to_cumulants(&empirical_moments(diag, order)).expect("order within cap")
}

fn predicted_moments(diags: &[Vec<f64>], order: usize) -> Vec<f64> {
    let total = diags
        .iter()
        .map(|d| diagonal_cumulants(d, order))
        .reduce(|a, b| a.add(&b))
        .unwrap_or(CumulantSeq(vec![0.0; order]));
    cumulants_to_moments(&total).expect("order within cap").0
}

fn snap_tol(sample: &SpectralSample) -> f64 {
    1e-7 * sample.max_abs().max(1.0)
}

fn ks_free_poisson(sample: &SpectralSample, u: f64) -> f64 {
    let atom = free_poisson_atom(u);
    let atoms: Vec<(f64, f64)> = if atom > 0.0 { vec![(0.0, atom)] } else { vec![] };
    ks_against_cdf(&sample.sorted(), |x| free_poisson_cdf(u, x), &atoms, snap_tol(sample))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeConvolutionReport {
    pub u1: f64,
    pub u2: f64,
    pub ks: f64,
    pub moments: Vec<MomentCheck>,
    pub n_dim: usize,
    pub trials: u64,
}

/// `X₁ + Q X₂ Qᵀ` for free Poisson quantile diagonals, against free Poisson(u₁ + u₂).
pub fn free_convolution_check(u1: f64, u2: f64, n_dim: usize, trials: u64, seed: u64) -> Result<FreeConvolutionReport, FreeError> {
    if !(u1 > 0.0 && u2 > 0.0) {
        return Err(FreeError::Parameter("free Poisson parameters must be positive".into()));
    }
    let mut diags = vec![free_poisson_quantiles(u1, n_dim), free_poisson_quantiles(u2, n_dim)];
    for d in &mut diags {
        d.reverse();
    }
    let sample = rotated_sum_spectrum(&diags, trials, seed)?;
    let u = u1 + u2;
    let ideal = cumulants_to_moments(&CumulantSeq(vec![u; 4]))?.0;
    Ok(FreeConvolutionReport {
        u1,
        u2,
        ks: ks_free_poisson(&sample, u),
        moments: moment_checks(&sample, &predicted_moments(&diags, 4), &ideal),
        n_dim,
        trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KruglovFitReport {
    pub u: f64,
    pub ks: f64,
    pub moments: Vec<MomentCheck>,
    pub min_eigenvalue: f64,
}

/// Exact `E τ(wxw)` and `E τ((wxw)²)` for the GOE `w` at dimension `n` and
/// a diagonal `x` with normalized traces `τ(x) = t1`, `τ(x²) = t2`, from
/// Wick pairings of `E[w_pq w_rs] = (δ_pr δ_qs + δ_ps δ_qr) / n`.
pub fn goe_kruglov_moments(t1: f64, t2: f64, n: usize) -> [f64; 2] {
    let nf = n as f64;
    [t1 * (1.0 + 1.0 / nf), t2 * (nf * nf + 3.0 * nf + 5.0) / (nf * nf) + t1 * t1 * (nf + 2.0) / nf]
}

/// `w χ_(0,u) w` against free Poisson(u): KS distance, and the first two
/// moments against their exact finite-`N` values.
pub fn free_kruglov_check(u: f64, n_dim: usize, trials: u64, seed: u64) -> Result<KruglovFitReport, FreeError> {
    let d = DistSpec::scaled_indicator(1.0, u);
    let sample = free_kruglov_spectrum(&d, n_dim, trials, seed)?;
    let ideal = cumulants_to_moments(&CumulantSeq(vec![u; 2]))?.0;
    let diag = part_diagonal(&d, n_dim);
    let m = empirical_moments(&diag, 2).0;
    let predicted = goe_kruglov_moments(m[0], m[1], n_dim);
    Ok(KruglovFitReport {
        u,
        ks: ks_free_poisson(&sample, u),
        moments: moment_checks(&sample, &predicted, &ideal),
        min_eigenvalue: sample.min(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `max_t (lower(t) - μ̂(t))` over the grid; positive means the lower bound is crossed.
    pub lower_excess: f64,
    /// `max_t (μ̂(t) - upper(t))`.
    pub upper_excess: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Checks `(2/5) σ_{1/20} μ(x) <= μ(wxw) <= 4 μ(x)` on the midpoints of a
/// uniform grid of `(0, 1]`, allowing `slack_frac · ‖x‖_∞` either way.
pub fn kruglov_sandwich_check(
    d: &DistSpec,
    n_dim: usize,
    trials: u64,
    seed: u64,
    slack_frac: f64,
) -> Result<SandwichReport, FreeError> {
    let sample = free_kruglov_spectrum(d, n_dim, trials, seed)?;
    let emp = sample.rearrangement();
    let mu = d.rearrangement();
    let slack = slack_frac * mu.sup();
    let grid = 1000;
    let (mut lower_excess, mut upper_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..grid {
        let t = (i as f64 + 0.5) / grid as f64;
        let e = emp.value_at(t);
        lower_excess = lower_excess.max(0.4 * mu.value_at(20.0 * t) - e);
        upper_excess = upper_excess.max(e - 4.0 * mu.value_at(t));
    }
    Ok(SandwichReport { lower_excess, upper_excess, slack, pass: lower_excess <= slack && upper_excess <= slack })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizationReport {
    /// `max_t ∫_0^t (μ̂(Σy) - μ̂(Σx))`.
    pub max_partial_excess: f64,
    /// `|‖Σy‖₁ - ‖Σx‖₁|`.
    pub mass_gap: f64,
}

/// For positive parts with `y_k ≺ x_k`, compares the free sums of both
/// families built with the same rotations.
pub fn free_majorization_check(
    xs: &[DistSpec],
    ys: &[DistSpec],
    n_dim: usize,
    trials: u64,
    seed: u64,
) -> Result<MajorizationReport, FreeError> {
    if xs.len() != ys.len() {
        return Err(FreeError::Parameter(format!("{} x-parts but {} y-parts", xs.len(), ys.len())));
    }
    for (k, (x, y)) in xs.iter().zip(ys).enumerate() {
        if !x.is_positive() || !y.is_positive() {
            return Err(FreeError::Part(k, "majorization check needs positive parts".into()));
        }
        if !majorizes(&x.rearrangement(), &y.rearrangement(), 1e-10) {
            return Err(FreeError::NotMajorized { index: k });
        }
    }
    let sx = free_sum_spectrum(&MatrixModel { n_dim, trials, seed, parts: xs.to_vec() })?;
    let sy = free_sum_spectrum(&MatrixModel { n_dim, trials, seed, parts: ys.to_vec() })?;
    let (mx, my) = (sx.rearrangement(), sy.rearrangement());
    let excess = mx
        .merged_breaks(&my)
        .into_iter()
        .map(|t| my.integral_to(t) - mx.integral_to(t))
        .fold(0.0, f64::max);
    Ok(MajorizationReport { max_partial_excess: excess, mass_gap: (my.integral() - mx.integral()).abs() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub p: f64,
    /// `‖μ(X) χ_(1,∞)‖₁` with `X = ⊕ μ(x_k)`, exact.
    pub tail_l1: f64,
    /// `‖Σ x_k‖_p` from the matrix model.
    pub sum_p_norm: f64,
    pub constant: f64,
}

/// Measured constant in `‖μ(X) χ_(1,∞)‖₁ <= c_p ‖Σ x_k‖_p`.
pub fn tail_constant(model: &MatrixModel, p: f64) -> Result<TailReport, FreeError> {
    let mus: Vec<StepFn> = model.parts.iter().map(DistSpec::rearrangement).collect();
    let x = disjoint_sum(&mus);
    let tail_l1 = x.window(1.0, f64::INFINITY).integral();
    let sum_p_norm = free_sum_spectrum(model)?.p_norm(p);
    let constant = if tail_l1 <= MERGE_TOL { 0.0 } else { tail_l1 / sum_p_norm };
    Ok(TailReport { p, tail_l1, sum_p_norm, constant })
}

/// `κ̂_j(Σ) - Σ_k κ_j(part k)` for `j = 1..=order`, with the part cumulants
/// taken from the finite-N diagonals.
pub fn cumulant_additivity(model: &MatrixModel, order: usize) -> Result<Vec<f64>, FreeError> {
    let sample = free_sum_spectrum(model)?;
    let diags: Vec<Vec<f64>> = model.parts.iter().map(|d| part_diagonal(d, model.n_dim)).collect();
    let emp = moments_to_cumulants(&empirical_moments(&sample.sorted(), order))?;
    let pred = moments_to_cumulants(&super::cumulants::MomentSeq(predicted_moments(&diags, order)))?;
    Ok(emp.0.iter().zip(&pred.0).map(|(a, b)| a - b).collect())
}
