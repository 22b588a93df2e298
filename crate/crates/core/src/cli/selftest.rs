//! Fast invariant suite run by `phimoment selftest`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::free::{
    cumulants_to_moments, free_poisson_atom, free_poisson_expect, moments_to_cumulants, CumulantSeq,
};
use crate::free::cumulants::MAX_ORDER;
use crate::kruglov::poisson_one;
use crate::orlicz::{phi_moment, OrliczFn};
use crate::rearrange::{head_tail_split, permutation_decomposition, StepFn};
use crate::rng::Streams;

#[derive(Clone, Debug)]
pub struct SelftestOptions {
    /// Merge tolerance handed to every step-function construction.
    pub merge_tol: f64,
}

type Check = fn(&SelftestOptions, &mut ChaCha8Rng) -> Result<(), String>;

const CHECKS: &[(&str, Check)] = &[
    ("rearrangement_equimeasurable", equimeasurable),
    ("disjoint_sum_distribution_additive", disjoint_additive),
    ("head_tail_phi_moment_additive", head_tail_additive),
    ("permutation_decomposition_reconstructs", decomposition),
    ("moment_cumulant_round_trip", round_trip),
    ("semicircle_catalan_moments", catalan),
    ("free_poisson_moments", free_poisson_moments),
    ("free_poisson_normalized", free_poisson_normalized),
    ("poisson_pmf", poisson_pmf),
];

/// Runs every check, writing one line each; returns the first failing name.
pub fn run_selftest<W: Write>(opts: &SelftestOptions, out: &mut W) -> Result<(), String> {
    for (name, check) in CHECKS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
        match check(opts, &mut rng) {
            Ok(()) => {
                let _ = writeln!(out, "ok   {name}");
            }
            Err(msg) => {
                let _ = writeln!(out, "FAIL {name}: {msg}");
                return Err(name.to_string());
            }
        }
    }
    Ok(())
}

/// Random `(value, width)` pieces with values on a 1/8 lattice.
fn random_pieces(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let k = rng.gen_range(1..8);
    (0..k).map(|_| (f64::from(rng.gen_range(1..40u32)) / 8.0, rng.gen_range(0.01..0.5))).collect()
}

fn step(pieces: &[(f64, f64)], opts: &SelftestOptions) -> Result<StepFn, String> {
    StepFn::from_pieces_with_tol(pieces.iter().copied(), opts.merge_tol).map_err(|e| e.to_string())
}

fn mass_above(pieces: &[(f64, f64)], s: f64) -> f64 {
    pieces.iter().filter(|p| p.0 > s).map(|p| p.1).sum()
}

fn equimeasurable(opts: &SelftestOptions, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let pieces = random_pieces(rng);
        let mu = step(&pieces, opts)?;
        for k in 0..45 {
            let s = f64::from(k) / 8.0 - 1.0 / 16.0;
            let (got, want) = (mu.distribution(s), mass_above(&pieces, s));
            if (got - want).abs() > 1e-10 {
                return Err(format!("λ({s}) = {got}, expected {want}"));
            }
        }
        let again = step(&mu.pieces().collect::<Vec<_>>(), opts)?;
        if again != mu {
            return Err("rearranging a rearrangement changed it".into());
        }
    }
    Ok(())
}

fn disjoint_additive(opts: &SelftestOptions, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..200 {
        let (a, b) = (random_pieces(rng), random_pieces(rng));
        let x = step(&[a.clone(), b.clone()].concat(), opts)?;
        let (ma, mb) = (step(&a, opts)?, step(&b, opts)?);
        for k in 0..45 {
            let s = f64::from(k) / 8.0 - 1.0 / 16.0;
            let d = x.distribution(s) - ma.distribution(s) - mb.distribution(s);
            if d.abs() > 1e-10 {
                return Err(format!("λ_⊕({s}) off by {d}"));
            }
        }
    }
    Ok(())
}

fn head_tail_additive(opts: &SelftestOptions, rng: &mut ChaCha8Rng) -> Result<(), String> {
    let phi = OrliczFn::power(2.0);
    for _ in 0..200 {
        let pieces = [random_pieces(rng), random_pieces(rng), random_pieces(rng)].concat();
        let x = step(&pieces, opts)?;
        let (h, t) = head_tail_split(&x);
        let whole = phi_moment(&phi, &x);
        let direct: f64 = pieces.iter().map(|(v, w)| v * v * w).sum();
        if (phi_moment(&phi, &h) + phi_moment(&phi, &t) - whole).abs() > 1e-10 * whole.max(1.0) {
            return Err("head + tail Φ-moments differ from the whole".into());
        }
        if (whole - direct).abs() > 1e-10 * direct.max(1.0) {
            return Err(format!("Φ-moment {whole} of the rearrangement differs from {direct}"));
        }
    }
    Ok(())
}

fn decomposition(_: &SelftestOptions, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..100 {
        let n = rng.gen_range(2..7);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        // average x against a random convex combination of two permutations
        let mut p: Vec<usize> = (0..n).collect();
        p.rotate_left(rng.gen_range(0..n));
        let w: f64 = rng.gen_range(0.0..1.0);
        let y: Vec<f64> = (0..n).map(|i| w * x[i] + (1.0 - w) * x[p[i]]).collect();
        let terms = permutation_decomposition(&x, &y).map_err(|e| e.to_string())?;
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(format!("weights sum to {total}"));
        }
        for i in 0..n {
            let back: f64 = terms.iter().map(|t| t.weight * x[t.perm[i]]).sum();
            if (back - y[i]).abs() > 1e-10 {
                return Err(format!("entry {i}: {back} vs {}", y[i]));
            }
        }
    }
    Ok(())
}

fn round_trip(_: &SelftestOptions, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let k = CumulantSeq((0..MAX_ORDER).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let m = cumulants_to_moments(&k).map_err(|e| e.to_string())?;
        let back = moments_to_cumulants(&m).map_err(|e| e.to_string())?;
        for (i, (a, b)) in k.0.iter().zip(&back.0).enumerate() {
            if (a - b).abs() > 1e-10 {
                return Err(format!("order {}: {a} vs {b}", i + 1));
            }
        }
    }
    Ok(())
}

fn catalan(_: &SelftestOptions, _: &mut ChaCha8Rng) -> Result<(), String> {
    let mut k = vec![0.0; MAX_ORDER];
    k[1] = 1.0;
    let m = cumulants_to_moments(&CumulantSeq(k)).map_err(|e| e.to_string())?;
    let catalan = [1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
    for (j, c) in catalan.iter().enumerate() {
        let (odd, even) = (m.0[2 * j], m.0[2 * j + 1]);
        if odd != 0.0 || even != *c {
            return Err(format!("m_{} = {even}, expected {c}", 2 * j + 2));
        }
    }
    Ok(())
}

fn free_poisson_moments(_: &SelftestOptions, _: &mut ChaCha8Rng) -> Result<(), String> {
    for u in [0.5, 1.0, 3.0] {
        let m = cumulants_to_moments(&CumulantSeq(vec![u; 4])).map_err(|e| e.to_string())?;
        let want = [u, u + u * u, u + 3.0 * u * u + u.powi(3), u + 6.0 * u * u + 6.0 * u.powi(3) + u.powi(4)];
        for (i, (a, b)) in m.0.iter().zip(want).enumerate() {
            if (a - b).abs() > 1e-12 * b {
                return Err(format!("u = {u}, m_{} = {a}, expected {b}", i + 1));
            }
        }
    }
    Ok(())
}

fn free_poisson_normalized(_: &SelftestOptions, _: &mut ChaCha8Rng) -> Result<(), String> {
    for u in [0.25, 1.0, 4.0] {
        let mass = free_poisson_expect(u, |_| 1.0);
        let mean = free_poisson_expect(u, |t| t);
        if (mass - 1.0).abs() > 1e-8 || (mean - u).abs() > 1e-8 * u.max(1.0) {
            return Err(format!("u = {u}: mass {mass}, mean {mean}, atom {}", free_poisson_atom(u)));
        }
    }
    Ok(())
}

fn poisson_pmf(_: &SelftestOptions, _: &mut ChaCha8Rng) -> Result<(), String> {
    let trials = 200_000u64;
    let streams = Streams::new(11);
    let mut counts = [0u64; 7];
    for t in 0..trials {
        let k = poisson_one(&mut streams.get(t, 0)) as usize;
        if k < counts.len() {
            counts[k] += 1;
        }
    }
    let mut p = (-1.0f64).exp();
    for (k, &c) in counts.iter().enumerate() {
        if k > 0 {
            p /= k as f64;
        }
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        let z = (c as f64 - trials as f64 * p) / sigma;
        if z.abs() > 4.0 {
            return Err(format!("P(N = {k}): z = {z:.2}"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let mut buf = Vec::new();
        run_selftest(&SelftestOptions { merge_tol: crate::rearrange::MERGE_TOL }, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), CHECKS.len());
    }

    #[test]
    fn coarse_merge_tolerance_is_caught() {
        let mut buf = Vec::new();
        let err = run_selftest(&SelftestOptions { merge_tol: 0.2 }, &mut buf).unwrap_err();
        assert_eq!(err, "rearrangement_equimeasurable");
    }
}
