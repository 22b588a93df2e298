//! Kolmogorov–Smirnov distances and Monte Carlo error bars.

/// `sup |F_a - F_b|` for two sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    if a.is_empty() || b.is_empty() {
        return if a.len() == b.len() { 0.0 } else { 1.0 };
    }
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// `sup |F_n - F|` for a sorted sample against a right-continuous CDF.
///
/// `atoms` lists the jump locations and masses of `F`. Samples within
/// `snap` of an atom are moved onto it first, so that eigenvalues at
/// `±1e-12` count toward an atom at zero.
pub fn ks_against_cdf<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F, atoms: &[(f64, f64)], snap: f64) -> f64 {
    if sorted.is_empty() {
        return 1.0;
    }
    let mut xs: Vec<f64> = sorted
        .iter()
        .map(|&x| atoms.iter().find(|a| (x - a.0).abs() <= snap).map_or(x, |a| a.0))
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let jump = |x: f64| atoms.iter().filter(|a| a.0 == x).map(|a| a.1).sum::<f64>();
    let below = |x: f64| xs.partition_point(|&s| s < x) as f64 / n;
    let upto = |x: f64| xs.partition_point(|&s| s <= x) as f64 / n;

    let mut points: Vec<f64> = xs.clone();
    points.dedup();
    points.extend(atoms.iter().map(|a| a.0));
    points
        .into_iter()
        .map(|x| {
            let f = cdf(x);
            let f_left = f - jump(x);
            (upto(x) - f).abs().max((below(x) - f_left).abs())
        })
        .fold(0.0, f64::max)
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Delta-method standard error of `a / b` for independent estimates.
pub fn ratio_se(a: f64, a_se: f64, b: f64, b_se: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    ((a_se / b).powi(2) + (a * b_se / (b * b)).powi(2)).sqrt()
}
