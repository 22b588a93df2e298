//! Monte Carlo for classical independence: sums, maxima and the
//! compound-Poisson (Kruglov) operator `K f = Σ_{i ≤ N} f_i`, `N ~ Poisson(1)`.
//!
//! Trials run in parallel over disjoint index ranges; every draw comes from
//! the `(seed, trial, variable)` stream, so results do not depend on the
//! worker count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orlicz::{phi_moment, OrliczFn};
use crate::rearrange::{disjoint_sum, DistSpec, RearrangeError, Sign, StepFn};
use crate::rng::{antithetic_slot, Streams};
use crate::stats::{ks_two_sample, mean_se};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KruglovError {
    #[error("part {0} is symmetrized; this statistic needs positive parts")]
    NotPositive(usize),
    #[error("total support mass {0} exceeds 1; the family cannot be disjointly placed in (0, 1]")]
    SupportMass(f64),
    #[error("parts mix positive and symmetrized laws")]
    MixedSigns,
    #[error(transparent)]
    Dist(#[from] RearrangeError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Minimum number of consecutive trials handed to one worker.
    pub batch: u64,
    pub antithetic: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { trials: 100_000, seed: 0, batch: 4096, antithetic: false }
    }
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig { trials, seed, ..Default::default() }
    }
}

/// Samples of one statistic, stored in trial order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalLaw {
    by_trial: Vec<f64>,
}

impl EmpiricalLaw {
    pub fn from_samples(by_trial: Vec<f64>) -> Self {
        EmpiricalLaw { by_trial }
    }

    pub fn samples(&self) -> &[f64] {
        &self.by_trial
    }

    pub fn n_trials(&self) -> usize {
        self.by_trial.len()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.by_trial.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// Rearrangement of `|S|`: each sample carries width `1 / n_trials`.
    pub fn rearrangement(&self) -> StepFn {
        let w = 1.0 / self.by_trial.len().max(1) as f64;
        StepFn::from_pieces_with_tol(self.by_trial.iter().map(|x| (x.abs(), w)), 0.0).unwrap_or_default()
    }

    pub fn mean_se(&self) -> (f64, f64) {
        mean_se(&self.by_trial)
    }

    /// `E Φ(S)` read off the rearrangement, with the sample standard error.
    pub fn phi_mean(&self, phi: &OrliczFn) -> (f64, f64) {
        let values: Vec<f64> = self.by_trial.iter().map(|&x| phi.eval_abs(x)).collect();
        (phi_moment(phi, &self.rearrangement()), mean_se(&values).1)
    }
}

/// Inverse-CDF sampler compiled from a [`DistSpec`].
#[derive(Clone, Debug)]
pub struct Sampler {
    cum: Vec<f64>,
    values: Vec<f64>,
    symmetric: bool,
}

impl Sampler {
    pub fn new(d: &DistSpec) -> Self {
        let mu = d.rearrangement();
        let mut cum: Vec<f64> = mu.breaks().iter().map(|b| b.0).collect();
        if let Some(last) = cum.last_mut() {
            if *last >= 1.0 - 1e-12 {
                *last = f64::INFINITY;
            }
        }
        Sampler {
            cum,
            values: mu.breaks().iter().map(|b| b.1).collect(),
            symmetric: d.sign == Sign::Symmetrized,
        }
    }

    /// One draw; `flip` reverses the random sign of a symmetrized law.
    pub fn draw(&self, rng: &mut ChaCha8Rng, flip: bool) -> f64 {
        let u: f64 = rng.gen();
        let idx = self.cum.partition_point(|&c| c <= u);
        let v = self.values.get(idx).copied().unwrap_or(0.0);
        if self.symmetric && (rng.gen::<bool>() ^ flip) {
            -v
        } else {
            v
        }
    }

    /// A draw of `K f`: a Poisson(1) number of independent draws, summed.
    pub fn draw_kruglov(&self, rng: &mut ChaCha8Rng, flip: bool) -> f64 {
        (0..poisson_one(rng)).map(|_| self.draw(rng, flip)).sum()
    }
}

/// Poisson(1) by inversion of the cumulative pmf `Σ e^{-1}/k!`.
pub fn poisson_one(rng: &mut ChaCha8Rng) -> u64 {
    let u: f64 = rng.gen();
    let mut p = (-1.0f64).exp();
    let mut cdf = p;
    let mut k = 0;
    while u >= cdf && k < 64 {
        k += 1;
        p /= k as f64;
        cdf += p;
    }
    k
}

pub fn sample_dist(d: &DistSpec, rng: &mut ChaCha8Rng) -> f64 {
    Sampler::new(d).draw(rng, false)
}

pub fn kruglov_sample(d: &DistSpec, rng: &mut ChaCha8Rng) -> f64 {
    Sampler::new(d).draw_kruglov(rng, false)
}

/// Runs `trial(streams, stream_index, flip)` for every trial, in parallel,
/// and returns the results in trial order.
pub fn run_trials<F>(cfg: &McConfig, trial: F) -> Vec<f64>
where
    F: Fn(&Streams, u64, bool) -> f64 + Sync,
{
    let streams = Streams::new(cfg.seed);
    (0..cfg.trials as usize)
        .into_par_iter()
        .with_min_len(cfg.batch.max(1) as usize)
        .map(|t| {
            let (slot, flip) = antithetic_slot(t as u64, cfg.antithetic);
            trial(&streams, slot, flip)
        })
        .collect()
}

fn samplers(ds: &[DistSpec]) -> Result<Vec<Sampler>, KruglovError> {
    ds.iter().map(|d| d.validate().map(|_| Sampler::new(d))).collect::<Result<_, _>>().map_err(Into::into)
}

/// Law of `Σ_k f_k` for independent `f_k`.
pub fn sum_law(ds: &[DistSpec], cfg: &McConfig) -> Result<EmpiricalLaw, KruglovError> {
    let ss = samplers(ds)?;
    Ok(EmpiricalLaw::from_samples(run_trials(cfg, |streams, slot, flip| {
        ss.iter().enumerate().map(|(k, s)| s.draw(&mut streams.get(slot, k as u64), flip)).sum()
    })))
}

/// Law of `max_k f_k` for independent positive `f_k`.
pub fn max_law(ds: &[DistSpec], cfg: &McConfig) -> Result<EmpiricalLaw, KruglovError> {
    if let Some(k) = ds.iter().position(|d| !d.is_positive()) {
        return Err(KruglovError::NotPositive(k));
    }
    let ss = samplers(ds)?;
    Ok(EmpiricalLaw::from_samples(run_trials(cfg, |streams, slot, flip| {
        ss.iter()
            .enumerate()
            .map(|(k, s)| s.draw(&mut streams.get(slot, k as u64), flip))
            .fold(0.0, f64::max)
    })))
}

/// Law of `K f`.
pub fn kruglov_law(d: &DistSpec, cfg: &McConfig) -> Result<EmpiricalLaw, KruglovError> {
    let s = Sampler::new(d);
    d.validate()?;
    Ok(EmpiricalLaw::from_samples(run_trials(cfg, |streams, slot, flip| {
        s.draw_kruglov(&mut streams.get(slot, 0), flip)
    })))
}

/// Law of `Σ_k h_k` with independent `h_k ~ K f_k`.
pub fn independent_kruglov_sum_law(ds: &[DistSpec], cfg: &McConfig) -> Result<EmpiricalLaw, KruglovError> {
    let ss = samplers(ds)?;
    Ok(EmpiricalLaw::from_samples(run_trials(cfg, |streams, slot, flip| {
        ss.iter().enumerate().map(|(k, s)| s.draw_kruglov(&mut streams.get(slot, k as u64), flip)).sum()
    })))
}

/// The law of `⊕ f_k` placed inside `(0, 1]`, as a single [`DistSpec`].
pub fn disjoint_law(ds: &[DistSpec]) -> Result<DistSpec, KruglovError> {
    for d in ds {
        d.validate()?;
    }
    let mass: f64 = ds.iter().map(DistSpec::support_mass).sum();
    if mass > 1.0 + 1e-12 {
        return Err(KruglovError::SupportMass(mass));
    }
    let sign = match ds.first().map(|d| d.sign) {
        Some(s) if ds.iter().all(|d| d.sign == s) => s,
        None => Sign::Positive,
        Some(_) => return Err(KruglovError::MixedSigns),
    };
    let mus: Vec<StepFn> = ds.iter().map(DistSpec::rearrangement).collect();
    let mut spec = DistSpec::inverse_cdf(disjoint_sum(&mus));
    spec.sign = sign;
    Ok(spec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// Two-sample KS distance between the two laws.
    pub ks: f64,
    pub independent_mean: f64,
    pub disjoint_mean: f64,
    pub trials: u64,
}

/// Compares `Σ_k K f_k` (independent) with `K(⊕ f_k)`; the two agree in law.
pub fn kruglov_disjoint_identity_check(ds: &[DistSpec], cfg: &McConfig) -> Result<IdentityReport, KruglovError> {
    let joined = disjoint_law(ds)?;
    let lhs = independent_kruglov_sum_law(ds, cfg)?;
    // an independent stream family for the other side
    let other = McConfig { seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15, ..cfg.clone() };
    let rhs = kruglov_law(&joined, &other)?;
    Ok(IdentityReport {
        ks: ks_two_sample(&lhs.sorted(), &rhs.sorted()),
        independent_mean: lhs.mean_se().0,
        disjoint_mean: rhs.mean_se().0,
        trials: cfg.trials,
    })
}

/// Measured `E Φ(K f) / E Φ(f)`, with its standard error.
pub fn kruglov_moment_ratio(d: &DistSpec, phi: &OrliczFn, cfg: &McConfig) -> Result<(f64, f64), KruglovError> {
    let base = phi_moment(phi, &d.rearrangement());
    let (m, se) = kruglov_law(d, cfg)?.phi_mean(phi);
    Ok((m / base, se / base))
}

/// Measured `E Φ(Σ f_k) / ∫ Φ(μ(⊕ f_k))` for a family with total support
/// mass at most one, with its standard error.
pub fn disjoint_family_constant(ds: &[DistSpec], phi: &OrliczFn, cfg: &McConfig) -> Result<(f64, f64), KruglovError> {
    let joined = disjoint_law(ds)?;
    let base = phi_moment(phi, &joined.rearrangement());
    let (m, se) = sum_law(ds, cfg)?.phi_mean(phi);
    Ok((m / base, se / base))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: u64) -> McConfig {
        McConfig::new(trials, 11)
    }

    #[test]
    fn indicator_frequency() {
        let d = DistSpec::scaled_indicator(3.0, 0.2);
        let law = sum_law(&[d], &cfg(200_000)).unwrap();
        let hits = law.samples().iter().filter(|&&x| x == 3.0).count() as f64 / 200_000.0;
        let sigma = (0.2f64 * 0.8 / 200_000.0).sqrt();
        assert!((hits - 0.2).abs() < 3.0 * sigma, "{hits}");
        assert!(law.samples().iter().all(|&x| x == 0.0 || x == 3.0));
    }

    #[test]
    fn point_mass_is_constant() {
        let law = sum_law(&[DistSpec::atoms(vec![(2.5, 1.0)])], &cfg(1000)).unwrap();
        assert!(law.samples().iter().all(|&x| x == 2.5));
    }

    #[test]
    fn symmetrized_mean_is_zero() {
        let d = DistSpec::atoms(vec![(1.0, 0.5), (2.0, 0.5)]).symmetrized();
        let (m, se) = sum_law(&[d], &cfg(100_000)).unwrap().mean_se();
        assert!(m.abs() < 3.0 * se, "{m} ± {se}");
    }

    #[test]
    fn antithetic_pairs_cancel() {
        let d = DistSpec::atoms(vec![(1.0, 1.0)]).symmetrized();
        let c = McConfig { antithetic: true, ..cfg(1000) };
        let law = sum_law(&[d], &c).unwrap();
        assert!(law.samples().chunks(2).all(|p| p[0] == -p[1]));
        assert_eq!(law.mean_se().0, 0.0);
    }

    #[test]
    fn two_coin_sum() {
        let d = DistSpec::atoms(vec![(1.0, 0.5)]);
        let n = 200_000;
        let law = sum_law(&[d.clone(), d], &cfg(n)).unwrap();
        let p2 = law.samples().iter().filter(|&&x| x == 2.0).count() as f64 / n as f64;
        assert!((p2 - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn max_of_indicators() {
        let n = 10;
        let ds = vec![DistSpec::scaled_indicator(2.0, 0.1); n];
        let trials = 200_000;
        let law = max_law(&ds, &cfg(trials)).unwrap();
        let p = 1.0 - 0.9f64.powi(n as i32);
        let hits = law.samples().iter().filter(|&&x| x == 2.0).count() as f64 / trials as f64;
        assert!((hits - p).abs() < 3.0 * (p * (1.0 - p) / trials as f64).sqrt());

        let sums = sum_law(&ds, &cfg(trials)).unwrap();
        assert!(law.samples().iter().zip(sums.samples()).all(|(m, s)| m <= s));
        assert!(matches!(
            max_law(&[DistSpec::scaled_indicator(1.0, 0.5).symmetrized()], &cfg(10)),
            Err(KruglovError::NotPositive(0))
        ));
    }

    #[test]
    fn parallel_equals_serial() {
        let ds = vec![DistSpec::atoms(vec![(1.0, 0.3), (0.5, 0.3)]).symmetrized(); 4];
        let parallel = sum_law(&ds, &McConfig { batch: 7, ..cfg(5000) }).unwrap();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sum_law(&ds, &cfg(5000)).unwrap());
        assert_eq!(parallel, serial);
    }

    #[test]
    fn empirical_rearrangement_is_equimeasurable() {
        let law = EmpiricalLaw::from_samples(vec![0.0, 2.0, -1.0, 2.0]);
        assert_eq!(law.rearrangement().breaks(), &[(0.5, 2.0), (0.75, 1.0)]);
        let (m, _) = law.phi_mean(&OrliczFn::power(2.0));
        assert_eq!(m, 9.0 / 4.0);
    }

    #[test]
    fn disjoint_law_checks_mass() {
        let ds = vec![DistSpec::scaled_indicator(1.0, 0.6); 2];
        assert!(matches!(disjoint_law(&ds), Err(KruglovError::SupportMass(_))));
        let ds = vec![DistSpec::scaled_indicator(1.0, 0.3), DistSpec::scaled_indicator(2.0, 0.2)];
        let j = disjoint_law(&ds).unwrap();
        assert_eq!(j.rearrangement().breaks(), &[(0.2, 2.0), (0.5, 1.0)]);
    }
}
