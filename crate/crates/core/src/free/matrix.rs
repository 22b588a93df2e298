//! Finite-N matrix models for free independence.
//!
//! Each part becomes a diagonal of block-averaged quantiles, conjugated by an
//! independent Haar orthogonal matrix. Only the columns of the rotation that
//! meet nonzero diagonal entries are drawn, so a sum of low-rank parts costs
//! an `R × R` eigenproblem with `R` the total rank.

use faer::{Mat, Side};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FreeError;
use crate::orlicz::OrliczFn;
use crate::rearrange::{DistSpec, Sign, StepFn};
use crate::rng::Streams;
use crate::stats::mean_se;

const MAX_RETRIES: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixModel {
    pub n_dim: usize,
    pub trials: u64,
    pub seed: u64,
    pub parts: Vec<DistSpec>,
}

/// Eigenvalues of every trial, each sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSample {
    per_trial: Vec<Vec<f64>>,
}

impl SpectralSample {
    pub fn from_trials(per_trial: Vec<Vec<f64>>) -> Self {
        SpectralSample { per_trial }
    }

    pub fn per_trial(&self) -> &[Vec<f64>] {
        &self.per_trial
    }

    pub fn count(&self) -> usize {
        self.per_trial.iter().map(Vec::len).sum()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.per_trial.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn min(&self) -> f64 {
        self.per_trial.iter().filter_map(|t| t.first().copied()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.per_trial.iter().flatten().fold(0.0, |a: f64, &b| a.max(b.abs()))
    }

    /// Rearrangement of `|λ|` under the normalized trace: each eigenvalue
    /// carries mass `1 / (N · trials)`.
    pub fn rearrangement(&self) -> StepFn {
        let w = 1.0 / self.count().max(1) as f64;
        StepFn::from_pieces_with_tol(self.per_trial.iter().flatten().map(|x| (x.abs(), w)), 0.0).unwrap_or_default()
    }

    /// Mean of `f(λ)` over the normalized trace, with the standard error
    /// across trials.
    pub fn trace_mean<F: Fn(f64) -> f64>(&self, f: F) -> (f64, f64) {
        let per: Vec<f64> =
            self.per_trial.iter().map(|t| t.iter().map(|&x| f(x)).sum::<f64>() / t.len().max(1) as f64).collect();
        mean_se(&per)
    }

    /// `τ(Φ(|A|))` with its standard error.
    pub fn phi_mean(&self, phi: &OrliczFn) -> (f64, f64) {
        self.trace_mean(|x| phi.eval_abs(x))
    }

    /// `‖A‖_p = τ(|A|^p)^{1/p}`.
    pub fn p_norm(&self, p: f64) -> f64 {
        self.trace_mean(|x| x.abs().powf(p)).0.powf(1.0 / p)
    }

    pub fn shifted(mut self, c: f64) -> Self {
        for t in &mut self.per_trial {
            for x in t.iter_mut() {
                *x += c;
            }
        }
        self
    }
}

/// Block averages of `μ` over `((i-1)/n, i/n]`, descending. The diagonal has
/// the same trace as `μ` and is majorized by it; it equals `μ` exactly when
/// every breakpoint is a multiple of `1/n`.
pub fn quantile_diagonal(mu: &StepFn, n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|i| (mu.integral_to((i + 1) as f64 / nf) - mu.integral_to(i as f64 / nf)) * nf)
        .collect()
}

/// Diagonal for a part: quantiles, or `±v` pairs of half-resolution
/// quantiles for a symmetrized law.
pub fn part_diagonal(d: &DistSpec, n: usize) -> Vec<f64> {
    let mu = d.rearrangement();
    match d.sign {
        Sign::Positive => quantile_diagonal(&mu, n),
        Sign::Symmetrized => {
            let half = quantile_diagonal(&mu, n / 2);
            let mut out: Vec<f64> = half.iter().flat_map(|&v| [v, -v]).collect();
            out.resize(n, 0.0);
            out
        }
    }
}

/// First `r` columns of a Haar-distributed orthogonal `n × n` matrix.
pub fn haar_frame(n: usize, r: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let g = Mat::<f64>::from_fn(n, r, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.compute_thin_Q();
    let rr = qr.thin_R();
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Eigenvalues of `W diag(s) Wᵀ` (`W` is `n × R`), ascending.
fn low_rank_spectrum(w: &Mat<f64>, s: &[f64]) -> Result<Vec<f64>, ()> {
    let (n, r) = (w.nrows(), w.ncols());
    if r == 0 {
        return Ok(vec![0.0; n]);
    }
    let mut ev = if r < n && s.iter().all(|&x| x >= 0.0) {
        let root: Vec<f64> = s.iter().map(|x| x.sqrt()).collect();
        let ws = Mat::<f64>::from_fn(n, r, |i, j| w[(i, j)] * root[j]);
        let gram = ws.transpose() * &ws;
        let mut ev = gram.self_adjoint_eigenvalues(Side::Lower).map_err(|_| ())?;
        ev.resize(n, 0.0);
        ev
    } else {
        let ws = Mat::<f64>::from_fn(n, r, |i, j| w[(i, j)] * s[j]);
        let a = &ws * w.transpose();
        a.self_adjoint_eigenvalues(Side::Lower).map_err(|_| ())?
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// One trial of `D_1 + Σ_{k>1} Q_k D_k Q_kᵀ`: the first diagonal stays in
/// place (conjugation invariance), the others are rotated independently.
fn rotated_sum_trial(diagonals: &[Vec<f64>], n: usize, streams: &Streams, slot: u64) -> Result<Vec<f64>, ()> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut s: Vec<f64> = Vec::new();
    for (k, diag) in diagonals.iter().enumerate() {
        let nz: Vec<usize> = (0..n).filter(|&i| diag[i] != 0.0).collect();
        if nz.is_empty() {
            continue;
        }
        if k == 0 {
            for &i in &nz {
                let mut c = vec![0.0; n];
                c[i] = 1.0;
                cols.push(c);
                s.push(diag[i]);
            }
        } else {
            let q = haar_frame(n, nz.len(), &mut streams.get(slot, k as u64));
            for (j, &i) in nz.iter().enumerate() {
                cols.push((0..n).map(|row| q[(row, j)]).collect());
                s.push(diag[i]);
            }
        }
    }
    let w = Mat::<f64>::from_fn(n, cols.len(), |i, j| cols[j][i]);
    low_rank_spectrum(&w, &s)
}

fn retrying<F>(trial: u64, f: F) -> Result<Vec<f64>, FreeError>
where
    F: Fn(u64) -> Result<Vec<f64>, ()>,
{
    (0..=MAX_RETRIES)
        .find_map(|attempt| f(trial | (attempt << 48)).ok())
        .ok_or(FreeError::Eigen { trial })
}

/// Spectra of `Σ_k Q_k diag(d_k) Q_kᵀ` for explicit diagonals.
pub fn rotated_sum_spectrum(diagonals: &[Vec<f64>], trials: u64, seed: u64) -> Result<SpectralSample, FreeError> {
    let n = diagonals.first().map_or(0, Vec::len);
    if diagonals.iter().any(|d| d.len() != n) {
        return Err(FreeError::Parameter("diagonals differ in length".into()));
    }
    if diagonals.len() == 1 {
        let mut d = diagonals[0].clone();
        d.sort_by(f64::total_cmp);
        return Ok(SpectralSample::from_trials(vec![d; trials as usize]));
    }
    let streams = Streams::new(seed);
    let per_trial = (0..trials as usize)
        .into_par_iter()
        .map(|t| retrying(t as u64, |slot| rotated_sum_trial(diagonals, n, &streams, slot)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralSample::from_trials(per_trial))
}

fn check_model(n_dim: usize, parts: &[DistSpec]) -> Result<(), FreeError> {
    if n_dim < 64 {
        return Err(FreeError::Parameter(format!("matrix dimension {n_dim} below 64")));
    }
    for (k, d) in parts.iter().enumerate() {
        d.validate().map_err(|e| FreeError::Part(k, e.to_string()))?;
    }
    Ok(())
}

/// Empirical law of `Σ x_k` for freely independent `x_k`.
pub fn free_sum_spectrum(model: &MatrixModel) -> Result<SpectralSample, FreeError> {
    check_model(model.n_dim, &model.parts)?;
    if model.parts.is_empty() {
        return Ok(SpectralSample::from_trials(vec![vec![0.0; model.n_dim]; model.trials as usize]));
    }
    let diags: Vec<Vec<f64>> = model.parts.iter().map(|d| part_diagonal(d, model.n_dim)).collect();
    rotated_sum_spectrum(&diags, model.trials, model.seed)
}

/// GOE matrix: `N(0, 1/N)` off the diagonal, `N(0, 2/N)` on it.
pub fn goe(n: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    let mut w = Mat::<f64>::zeros(n, n);
    let off = (1.0 / n as f64).sqrt();
    let diag = (2.0 / n as f64).sqrt();
    for j in 0..n {
        for i in 0..=j {
            let g: f64 = StandardNormal.sample(rng);
            if i == j {
                w[(i, i)] = g * diag;
            } else {
                w[(i, j)] = g * off;
                w[(j, i)] = g * off;
            }
        }
    }
    w
}

/// Empirical law of `w x w` with `w` semicircular and `x` the quantile
/// diagonal of the positive law `d`.
pub fn free_kruglov_spectrum(d: &DistSpec, n_dim: usize, trials: u64, seed: u64) -> Result<SpectralSample, FreeError> {
    check_model(n_dim, std::slice::from_ref(d))?;
    if !d.is_positive() {
        return Err(FreeError::Part(0, "free Kruglov map needs a positive law".into()));
    }
    let diag = quantile_diagonal(&d.rearrangement(), n_dim);
    let nz: Vec<usize> = (0..n_dim).filter(|&i| diag[i] > 0.0).collect();
    let streams = Streams::new(seed);
    let per_trial = (0..trials as usize)
        .into_par_iter()
        .map(|t| {
            retrying(t as u64, |slot| {
                let w = goe(n_dim, &mut streams.get(slot, 0));
                // w x w = B Bᵀ with B = w[:, S] diag(√x_S)
                let b = Mat::<f64>::from_fn(n_dim, nz.len(), |i, j| w[(i, nz[j])]);
                low_rank_spectrum(&b, &nz.iter().map(|&i| diag[i]).collect::<Vec<_>>())
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SpectralSample::from_trials(per_trial))
}
