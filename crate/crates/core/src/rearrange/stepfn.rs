use serde::{Deserialize, Serialize};

use super::RearrangeError;

/// Breakpoints closer than this (and values closer than this, relative to
/// `max(1, |v|)`) are merged when a step function is canonicalized.
pub const MERGE_TOL: f64 = 1e-12;

/// A nonincreasing step function on `(0, ∞)` with bounded support.
///
/// Step `i` takes the value `v_i` on `(t_{i-1}, t_i]` with `t_0 = 0`. The
/// representation is canonical: ends strictly increase, values strictly
/// decrease and are positive, so the last end is the measure of the support.
/// Every decreasing rearrangement in this crate is a `StepFn`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct StepFn {
    steps: Vec<(f64, f64)>,
}

impl StepFn {
    pub fn zero() -> Self {
        StepFn { steps: Vec::new() }
    }

    /// `value` on `(0, width]`.
    pub fn indicator(value: f64, width: f64) -> Self {
        Self::from_pieces([(value, width)]).unwrap_or_default()
    }

    /// Builds a step function from explicit `(t_i, v_i)` breakpoints.
    ///
    /// The breakpoints must already describe a nonincreasing function; equal
    /// neighbours and trailing zeros are merged away.
    pub fn new(breaks: Vec<(f64, f64)>) -> Result<Self, RearrangeError> {
        let mut prev_t = 0.0;
        let mut prev_v = f64::INFINITY;
        let mut pieces = Vec::with_capacity(breaks.len());
        for (i, &(t, v)) in breaks.iter().enumerate() {
            if !t.is_finite() || !v.is_finite() {
                return Err(RearrangeError::InvalidStep(format!("breakpoint {i} is not finite")));
            }
            if t <= prev_t {
                return Err(RearrangeError::InvalidStep(format!(
                    "breakpoint {i}: t = {t} does not exceed previous {prev_t}"
                )));
            }
            if v < 0.0 {
                return Err(RearrangeError::InvalidStep(format!("breakpoint {i}: negative value {v}")));
            }
            if v > prev_v {
                return Err(RearrangeError::InvalidStep(format!(
                    "breakpoint {i}: value {v} exceeds previous {prev_v}"
                )));
            }
            pieces.push((v, t - prev_t));
            prev_t = t;
            prev_v = v;
        }
        Ok(Self::canonical(pieces, MERGE_TOL))
    }

    /// Decreasing rearrangement of a finite family of `(value, width)`
    /// pieces placed on disjoint intervals.
    pub fn from_pieces<I>(pieces: I) -> Result<Self, RearrangeError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        Self::from_pieces_with_tol(pieces, MERGE_TOL)
    }

    pub fn from_pieces_with_tol<I>(pieces: I, tol: f64) -> Result<Self, RearrangeError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut pieces: Vec<(f64, f64)> = pieces.into_iter().collect();
        for (i, &(v, w)) in pieces.iter().enumerate() {
            if !v.is_finite() || !w.is_finite() || v < 0.0 || w < 0.0 {
                return Err(RearrangeError::InvalidStep(format!(
                    "piece {i}: value {v}, width {w} must be finite and nonnegative"
                )));
            }
        }
        pieces.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(Self::canonical(pieces, tol))
    }

    /// `pieces` must already be sorted by decreasing value.
    fn canonical(pieces: Vec<(f64, f64)>, tol: f64) -> Self {
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (v, w) in pieces {
            if v <= 0.0 || w <= tol {
                continue;
            }
            match merged.last_mut() {
                Some((mv, mw)) if (*mv - v).abs() <= tol * mv.abs().max(1.0) => {
                    if *mv != v {
                        *mv = (*mv * *mw + v * w) / (*mw + w);
                    }
                    *mw += w;
                }
                _ => merged.push((v, w)),
            }
        }
        let mut t = 0.0;
        let steps = merged
            .into_iter()
            .map(|(v, w)| {
                t += w;
                (t, v)
            })
            .collect();
        StepFn { steps }
    }

    /// Breakpoints `(t_i, v_i)`.
    pub fn breaks(&self) -> &[(f64, f64)] {
        &self.steps
    }

    /// `(value, width)` of every step, largest value first.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mut prev = 0.0;
        self.steps.iter().map(move |&(t, v)| {
            let w = t - prev;
            prev = t;
            (v, w)
        })
    }

    pub fn is_zero(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn support_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.0)
    }

    /// `μ(0+)`, the essential supremum.
    pub fn sup(&self) -> f64 {
        self.steps.first().map_or(0.0, |s| s.1)
    }

    /// Value at `t`, using the `(t_{i-1}, t_i]` convention; `t <= 0` gives `μ(0+)`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.sup();
        }
        let idx = self.steps.partition_point(|&(end, _)| end < t);
        self.steps.get(idx).map_or(0.0, |s| s.1)
    }

    /// Measure of `{μ > s}`.
    pub fn distribution(&self, s: f64) -> f64 {
        let idx = self.steps.partition_point(|&(_, v)| v > s);
        if idx == 0 {
            0.0
        } else {
            self.steps[idx - 1].0
        }
    }

    /// `∫ f(μ(t)) dt` over the support, exact for step functions.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.pieces().map(|(v, w)| f(v) * w).sum()
    }

    pub fn integral(&self) -> f64 {
        self.integrate(|v| v)
    }

    /// `∫_0^t μ`.
    pub fn integral_to(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &(end, v) in &self.steps {
            if end >= t {
                return acc + v * (t - prev).max(0.0);
            }
            acc += v * (end - prev);
            prev = end;
        }
        acc
    }

    /// `σ_s μ`: `t ↦ μ(t / s)`.
    pub fn dilate(&self, s: f64) -> Self {
        assert!(s > 0.0 && s.is_finite(), "dilation factor must be positive");
        StepFn {
            steps: self.steps.iter().map(|&(t, v)| (t * s, v)).collect(),
        }
    }

    /// `c · μ` for `c >= 0`.
    pub fn scale(&self, c: f64) -> Self {
        assert!(c >= 0.0 && c.is_finite(), "scale factor must be nonnegative");
        if c == 0.0 {
            return Self::zero();
        }
        StepFn {
            steps: self.steps.iter().map(|&(t, v)| (t, v * c)).collect(),
        }
    }

    /// `μ χ_(a, b]` shifted to start at the origin.
    pub fn window(&self, a: f64, b: f64) -> Self {
        let mut out = Vec::new();
        let mut prev: f64 = 0.0;
        for &(end, v) in &self.steps {
            let lo = prev.max(a);
            let hi = end.min(b);
            if hi > lo {
                out.push((v, hi - lo));
            }
            prev = end;
            if prev >= b {
                break;
            }
        }
        Self::canonical(out, MERGE_TOL)
    }

    /// Applies `f` to every value. `f` must be nondecreasing and map zero to zero.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self::canonical(self.pieces().map(|(v, w)| (f(v), w)).collect(), MERGE_TOL)
    }

    /// Union of the breakpoints of `self` and `other`, plus the origin.
    pub(crate) fn merged_breaks(&self, other: &StepFn) -> Vec<f64> {
        let mut ts: Vec<f64> = std::iter::once(0.0)
            .chain(self.steps.iter().map(|s| s.0))
            .chain(other.steps.iter().map(|s| s.0))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// `μ(t) <= other(t) + tol` for every `t > 0`.
    pub fn le_pointwise(&self, other: &StepFn, tol: f64) -> bool {
        let ts = self.merged_breaks(other);
        ts.windows(2).all(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            self.value_at(mid) <= other.value_at(mid) + tol
        })
    }
}

impl TryFrom<Vec<(f64, f64)>> for StepFn {
    type Error = RearrangeError;

    fn try_from(value: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        StepFn::new(value)
    }
}

impl From<StepFn> for Vec<(f64, f64)> {
    fn from(value: StepFn) -> Self {
        value.steps
    }
}
