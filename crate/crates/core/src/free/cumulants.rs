//! Free moment–cumulant transform up to order 12.
//!
//! With `M(z) = 1 + Σ m_j z^j`, the non-crossing partition expansion
//! collapses to the boundary-block recursion
//! `m_n = Σ_{s=1}^{n} κ_s [z^{n-s}] M(z)^s`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::FreeError;

pub const MAX_ORDER: usize = 12;

/// `m[j - 1]` is the `j`-th moment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSeq(pub Vec<f64>);

/// `k[j - 1]` is the `j`-th free cumulant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantSeq(pub Vec<f64>);

fn check_order(len: usize) -> Result<(), FreeError> {
    if len > MAX_ORDER {
        Err(FreeError::Order(len))
    } else {
        Ok(())
    }
}

/// `[z^d] M(z)^s` for `d = 0..=max_deg`, with `M` truncated to the known moments.
fn power_coeffs(m: &[f64], s: usize, max_deg: usize) -> Vec<f64> {
    let mut base = vec![0.0; max_deg + 1];
    base[0] = 1.0;
    for (j, &mj) in m.iter().enumerate().take(max_deg) {
        base[j + 1] = mj;
    }
    let mut acc = vec![0.0; max_deg + 1];
    acc[0] = 1.0;
    for _ in 0..s {
        let mut next = vec![0.0; max_deg + 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in base.iter().enumerate().take(max_deg + 1 - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

pub fn cumulants_to_moments(k: &CumulantSeq) -> Result<MomentSeq, FreeError> {
    check_order(k.0.len())?;
    let mut m: Vec<f64> = Vec::with_capacity(k.0.len());
    for n in 1..=k.0.len() {
        let mut mn = 0.0;
        for s in 1..=n {
            mn += k.0[s - 1] * power_coeffs(&m, s, n - s)[n - s];
        }
        m.push(mn);
    }
    Ok(MomentSeq(m))
}

pub fn moments_to_cumulants(m: &MomentSeq) -> Result<CumulantSeq, FreeError> {
    check_order(m.0.len())?;
    let mut k: Vec<f64> = Vec::with_capacity(m.0.len());
    for n in 1..=m.0.len() {
        let known = &m.0[..n - 1];
        let mut rest = 0.0;
        for s in 1..n {
            rest += k[s - 1] * power_coeffs(known, s, n - s)[n - s];
        }
        k.push(m.0[n - 1] - rest);
    }
    Ok(CumulantSeq(k))
}

impl MomentSeq {
    /// Whether `[m_{i+j}]` (with `m_0 = 1`) is positive semidefinite up to
    /// `tol` relative to its largest eigenvalue.
    pub fn hankel_psd(&self, tol: f64) -> bool {
        let h = self.0.len() / 2;
        let full: Vec<f64> = std::iter::once(1.0).chain(self.0.iter().copied()).collect();
        let mat = Mat::<f64>::from_fn(h + 1, h + 1, |i, j| full[i + j]);
        match mat.self_adjoint_eigenvalues(Side::Lower) {
            Ok(ev) => {
                let top = ev.iter().copied().fold(1.0f64, |a, b| a.max(b.abs()));
                ev.iter().all(|&e| e >= -tol * top)
            }
            Err(_) => false,
        }
    }
}

impl CumulantSeq {
    /// Cumulants of a free sum are the sums of the cumulants.
    pub fn add(&self, other: &CumulantSeq) -> CumulantSeq {
        CumulantSeq(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Moments `m_1..m_order` of a finite list of eigenvalues or atoms.
pub fn empirical_moments(values: &[f64], order: usize) -> MomentSeq {
    let n = values.len().max(1) as f64;
    MomentSeq((1..=order).map(|j| values.iter().map(|v| v.powi(j as i32)).sum::<f64>() / n).collect())
}
