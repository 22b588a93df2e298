//! Constructive convex decomposition for finite-dimensional majorization:
//! if `y ≺ x` then `y = Σ_π a(π) (x ∘ π)` with `a` a probability vector.
//!
//! A chain of at most `n - 1` T-transforms yields a doubly stochastic `D`
//! with `y = D x`; a Birkhoff peel of `D` then produces at most
//! `(n - 1)² + 1` weighted permutations.

use serde::{Deserialize, Serialize};

use super::RearrangeError;

/// `π` as the image vector: `perm[i] = π(i)`, so `(x ∘ π)_i = x[perm[i]]`.
pub type Permutation = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPermutation {
    pub weight: f64,
    pub perm: Permutation,
}

impl WeightedPermutation {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&j| x[j]).collect()
    }
}

fn argsort_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    idx
}

pub fn permutation_decomposition(x: &[f64], y: &[f64]) -> Result<Vec<WeightedPermutation>, RearrangeError> {
    let n = x.len();
    if y.len() != n {
        return Err(RearrangeError::LengthMismatch(n, y.len()));
    }
    if let Some(bad) = x.iter().chain(y).find(|v| !v.is_finite() || **v < 0.0) {
        return Err(RearrangeError::InvalidStep(format!("entry {bad} must be finite and nonnegative")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let ox = argsort_desc(x);
    let oy = argsort_desc(y);
    let xs: Vec<f64> = ox.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = oy.iter().map(|&i| y[i]).collect();

    let scale = xs[0].max(ys[0]).max(f64::MIN_POSITIVE);
    let tol = 1e-10 * scale * n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for k in 0..n {
        sx += xs[k];
        sy += ys[k];
        if k + 1 < n && sy > sx + tol {
            return Err(RearrangeError::NotMajorized { index: k + 1, y_sum: sy, x_sum: sx });
        }
    }
    if (sx - sy).abs() > tol {
        return Err(RearrangeError::MassMismatch { y_total: sy, x_total: sx });
    }

    let d = t_transform_chain(&xs, &ys);

    // back to the original coordinates: y[oy[i]] = Σ_j d[i][j] x[ox[j]]
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[oy[i]][ox[j]] = d[i][j];
        }
    }
    Ok(birkhoff_peel(m))
}

/// Doubly stochastic `D` with `D xs = ys` for sorted `ys ≺ xs`.
fn t_transform_chain(xs: &[f64], ys: &[f64]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let eps = 1e-14 * xs[0].max(1.0);
    let mut d: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut cur = xs.to_vec();
    for _ in 0..2 * n {
        let Some(j) = (0..n).rev().find(|&j| cur[j] > ys[j] + eps) else {
            break;
        };
        let Some(k) = (j + 1..n).find(|&k| cur[k] < ys[k] - eps) else {
            break;
        };
        let delta = (cur[j] - ys[j]).min(ys[k] - cur[k]);
        let theta = delta / (cur[j] - cur[k]);
        // T = (1 - θ) I + θ Q_jk, applied on the left
        let (rj, rk) = (d[j].clone(), d[k].clone());
        for c in 0..n {
            d[j][c] = (1.0 - theta) * rj[c] + theta * rk[c];
            d[k][c] = theta * rj[c] + (1.0 - theta) * rk[c];
        }
        let (cj, ck) = (cur[j], cur[k]);
        cur[j] = (1.0 - theta) * cj + theta * ck;
        cur[k] = theta * cj + (1.0 - theta) * ck;
    }
    d
}

fn birkhoff_peel(mut m: Vec<Vec<f64>>) -> Vec<WeightedPermutation> {
    let n = m.len();
    let floor = 1e-15;
    let mut out: Vec<WeightedPermutation> = Vec::new();
    let max_terms = (n - 1) * (n - 1) + 1;
    while out.len() < max_terms {
        let remaining: f64 = m[0].iter().sum();
        if remaining <= 1e-14 {
            break;
        }
        let Some(perm) = perfect_matching(&m, floor) else {
            break;
        };
        let (arg, weight) = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| (i, m[i][j]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        for (i, &j) in perm.iter().enumerate() {
            m[i][j] = if i == arg { 0.0 } else { (m[i][j] - weight).max(0.0) };
        }
        match out.iter_mut().find(|wp| wp.perm == perm) {
            Some(wp) => wp.weight += weight,
            None => out.push(WeightedPermutation { weight, perm }),
        }
    }
    out
}

/// Kuhn's augmenting-path matching on the entries above `floor`.
fn perfect_matching(m: &[Vec<f64>], floor: f64) -> Option<Vec<usize>> {
    let n = m.len();
    let mut col_owner: Vec<Option<usize>> = vec![None; n];

    fn augment(row: usize, m: &[Vec<f64>], floor: f64, seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for col in 0..m.len() {
            if m[row][col] > floor && !seen[col] {
                seen[col] = true;
                if owner[col].is_none_or(|r| augment(r, m, floor, seen, owner)) {
                    owner[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }

    for row in 0..n {
        let mut seen = vec![false; n];
        if !augment(row, m, floor, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (col, owner) in col_owner.iter().enumerate() {
        perm[owner.expect("perfect matching")] = col;
    }
    Some(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recombine(terms: &[WeightedPermutation], x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for t in terms {
            for (yi, xi) in y.iter_mut().zip(t.apply(x)) {
                *yi += t.weight * xi;
            }
        }
        y
    }

    #[test]
    fn midpoint_of_two() {
        let terms = permutation_decomposition(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(terms.len(), 2);
        for t in &terms {
            assert!((t.weight - 0.5).abs() < 1e-15);
        }
        assert!(terms.iter().any(|t| t.perm == vec![0, 1]));
        assert!(terms.iter().any(|t| t.perm == vec![1, 0]));
    }

    #[test]
    fn identity_when_equal() {
        let x = [3.0, 1.0, 2.0];
        let terms = permutation_decomposition(&x, &x).unwrap();
        assert_eq!(terms, vec![WeightedPermutation { weight: 1.0, perm: vec![0, 1, 2] }]);
    }

    #[test]
    fn unsorted_inputs() {
        let x = [0.0, 4.0, 1.0, 3.0];
        let y = [2.0, 2.0, 2.0, 2.0];
        let terms = permutation_decomposition(&x, &y).unwrap();
        let back = recombine(&terms, &x);
        for (a, b) in back.iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        let w: f64 = terms.iter().map(|t| t.weight).sum();
        assert!((w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_first_failing_partial_sum() {
        let err = permutation_decomposition(&[2.0, 2.0, 0.0], &[3.0, 1.0, 0.0]).unwrap_err();
        assert!(matches!(err, RearrangeError::NotMajorized { index: 1, .. }));
        let err = permutation_decomposition(&[2.0, 1.0], &[2.0, 2.0]).unwrap_err();
        assert!(matches!(err, RearrangeError::MassMismatch { .. }));
        assert!(permutation_decomposition(&[1.0], &[1.0, 2.0]).is_err());
    }
}
