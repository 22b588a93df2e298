//! The free Poisson (Marchenko–Pastur) law `m_u`.
//!
//! Integrals use `t = 1 + u + 2√u cos θ`, under which
//! `dm_u = 2u sin²θ / (π t) dθ` on `θ ∈ (0, π)`. The integrand is smooth, so
//! tanh-sinh quadrature reaches near machine precision.

use quadrature::double_exponential::integrate;

use super::FreeError;

const QUAD_TOL: f64 = 1e-14;

/// `((√u - 1)², (√u + 1)²)`.
pub fn free_poisson_support(u: f64) -> (f64, f64) {
    let r = u.sqrt();
    ((r - 1.0).powi(2), (r + 1.0).powi(2))
}

/// Mass of the atom at zero, present for `u < 1`.
pub fn free_poisson_atom(u: f64) -> f64 {
    (1.0 - u).max(0.0)
}

/// Density of the absolutely continuous part.
pub fn free_poisson_density(u: f64, t: f64) -> f64 {
    let (lo, hi) = free_poisson_support(u);
    if t <= 0.0 || t <= lo || t >= hi {
        return 0.0;
    }
    let disc = 4.0 * u - (t - 1.0 - u).powi(2);
    disc.max(0.0).sqrt() / (2.0 * std::f64::consts::PI * t)
}

fn t_of(u: f64, theta: f64) -> f64 {
    1.0 + u + 2.0 * u.sqrt() * theta.cos()
}

fn theta_of(u: f64, x: f64) -> f64 {
    ((x - 1.0 - u) / (2.0 * u.sqrt())).clamp(-1.0, 1.0).acos()
}

/// `∫ g dm_u` over the continuous part, integrating in `θ` over `(a, b)`.
fn integrate_theta<G: Fn(f64) -> f64>(u: f64, g: G, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let f = |theta: f64| {
        let t = t_of(u, theta);
        g(t) * 2.0 * u * theta.sin().powi(2) / (std::f64::consts::PI * t)
    };
    integrate(f, a, b, QUAD_TOL).integral
}

/// `∫ g dm_u`, including `g(0)` times the atom.
pub fn free_poisson_expect<G: Fn(f64) -> f64>(u: f64, g: G) -> f64 {
    let atom = free_poisson_atom(u);
    let g0 = if atom > 0.0 { atom * g(0.0) } else { 0.0 };
    g0 + integrate_theta(u, g, 0.0, std::f64::consts::PI)
}

/// `m_u((-∞, x])`.
pub fn free_poisson_cdf(u: f64, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let (lo, hi) = free_poisson_support(u);
    let atom = free_poisson_atom(u);
    if x <= lo {
        return atom;
    }
    if x >= hi {
        return 1.0;
    }
    (atom + integrate_theta(u, |_| 1.0, theta_of(u, x), std::f64::consts::PI)).min(1.0)
}

/// `(∫ t^p dm_u)^{1/p}` for `u > 1`.
pub fn free_poisson_pnorm(u: f64, p: f64) -> Result<f64, FreeError> {
    if !(u > 1.0) {
        return Err(FreeError::Parameter(format!("free Poisson p-norm needs u > 1, got {u}")));
    }
    if !(p > 0.0) {
        return Err(FreeError::Parameter(format!("exponent {p} must be positive")));
    }
    Ok(free_poisson_expect(u, |t| t.powf(p)).powf(1.0 / p))
}

/// `F^{-1}((i + 1/2) / n)` for `i = 0..n`, ascending.
pub fn free_poisson_quantiles(u: f64, n: usize) -> Vec<f64> {
    let atom = free_poisson_atom(u);
    let pi = std::f64::consts::PI;
    (0..n)
        .map(|i| {
            let q = (i as f64 + 0.5) / n as f64;
            if q <= atom {
                return 0.0;
            }
            // F(t(θ)) decreases in θ; bisect for F = q
            let (mut a, mut b) = (0.0, pi);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                let f = atom + integrate_theta(u, |_| 1.0, mid, pi);
                if f > q {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            t_of(u, 0.5 * (a + b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_endpoints() {
        assert_eq!(free_poisson_support(4.0), (1.0, 9.0));
        assert_eq!(free_poisson_density(4.0, 0.5), 0.0);
        assert!(free_poisson_density(4.0, 4.0) > 0.0);
    }

    #[test]
    fn normalized_with_mean_u() {
        for u in [0.25, 0.5, 1.0, 4.0] {
            let total = free_poisson_expect(u, |_| 1.0);
            assert!((total - 1.0).abs() < 1e-8, "u={u}: {total}");
            let mean = free_poisson_expect(u, |t| t);
            assert!((mean - u).abs() < 1e-8, "u={u}: {mean}");
        }
    }

    #[test]
    fn cdf_limits() {
        let u = 0.25;
        assert_eq!(free_poisson_cdf(u, -1.0), 0.0);
        assert!((free_poisson_cdf(u, 0.0) - 0.75).abs() < 1e-15);
        assert_eq!(free_poisson_cdf(u, 10.0), 1.0);
        let c = free_poisson_cdf(u, 1.0);
        assert!(c > 0.75 && c < 1.0);
    }

    #[test]
    fn pnorm_examples() {
        assert!((free_poisson_pnorm(3.0, 1.0).unwrap() - 3.0).abs() < 1e-8);
        assert!((free_poisson_pnorm(4.0, 2.0).unwrap() - 20f64.sqrt()).abs() < 1e-8);
        assert!(free_poisson_pnorm(0.5, 1.0).is_err());
    }

    #[test]
    fn quantiles_reproduce_mean() {
        let q = free_poisson_quantiles(0.5, 400);
        assert!(q.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(q.iter().filter(|&&v| v == 0.0).count(), 200);
        let mean = q.iter().sum::<f64>() / 400.0;
        assert!((mean - 0.5).abs() < 1e-3);
    }
}
