use serde::{Deserialize, Serialize};

use super::{RearrangeError, StepFn, MERGE_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    #[default]
    Positive,
    /// The law of `ε|X|` with an independent fair sign `ε`.
    Symmetrized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistKind {
    /// `(value, probability)` pairs; leftover probability sits at zero.
    Atoms { atoms: Vec<(f64, f64)> },
    /// `a` with probability `u`, zero otherwise.
    ScaledIndicator { a: f64, u: f64 },
    /// The decreasing rearrangement itself, supported in `(0, 1]`.
    InverseCdf { quantiles: StepFn },
}

/// Law of one random variable, described through `|X|` and a sign rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistSpec {
    #[serde(flatten)]
    pub kind: DistKind,
    #[serde(default)]
    pub sign: Sign,
}

impl DistSpec {
    pub fn atoms(atoms: Vec<(f64, f64)>) -> Self {
        DistSpec { kind: DistKind::Atoms { atoms }, sign: Sign::Positive }
    }

    pub fn scaled_indicator(a: f64, u: f64) -> Self {
        DistSpec { kind: DistKind::ScaledIndicator { a, u }, sign: Sign::Positive }
    }

    pub fn inverse_cdf(quantiles: StepFn) -> Self {
        DistSpec { kind: DistKind::InverseCdf { quantiles }, sign: Sign::Positive }
    }

    pub fn symmetrized(mut self) -> Self {
        self.sign = Sign::Symmetrized;
        self
    }

    pub fn is_positive(&self) -> bool {
        self.sign == Sign::Positive
    }

    pub fn validate(&self) -> Result<(), RearrangeError> {
        match &self.kind {
            DistKind::Atoms { atoms } => {
                let mut total = 0.0;
                for (i, &(v, p)) in atoms.iter().enumerate() {
                    if !v.is_finite() || v < 0.0 {
                        return Err(RearrangeError::InvalidDist(format!(
                            "atom {i}: value {v} must be finite and nonnegative"
                        )));
                    }
                    if !(0.0..=1.0).contains(&p) {
                        return Err(RearrangeError::InvalidDist(format!(
                            "atom {i}: probability {p} outside [0, 1]"
                        )));
                    }
                    total += p;
                }
                if total > 1.0 + 1e-12 {
                    return Err(RearrangeError::InvalidDist(format!(
                        "atom probabilities sum to {total} > 1"
                    )));
                }
            }
            DistKind::ScaledIndicator { a, u } => {
                if !a.is_finite() || *a <= 0.0 {
                    return Err(RearrangeError::InvalidDist(format!("indicator height {a} must be positive")));
                }
                if !(*u > 0.0 && *u <= 1.0) {
                    return Err(RearrangeError::InvalidDist(format!("indicator mass {u} outside (0, 1]")));
                }
            }
            DistKind::InverseCdf { quantiles } => {
                if quantiles.support_end() > 1.0 + MERGE_TOL {
                    return Err(RearrangeError::InvalidDist(format!(
                        "quantile function supported on (0, {}] exceeds (0, 1]",
                        quantiles.support_end()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Decreasing rearrangement of `|X|`, a step function on `(0, 1]`.
    pub fn rearrangement(&self) -> StepFn {
        match &self.kind {
            DistKind::Atoms { atoms } => StepFn::from_pieces(atoms.iter().copied()).unwrap_or_default(),
            DistKind::ScaledIndicator { a, u } => StepFn::indicator(*a, *u),
            DistKind::InverseCdf { quantiles } => quantiles.clone(),
        }
    }

    /// `P(X != 0)`.
    pub fn support_mass(&self) -> f64 {
        self.rearrangement().support_end()
    }

    pub fn sup_abs(&self) -> f64 {
        self.rearrangement().sup()
    }
}
