use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::VerifyError;
use crate::kruglov::McConfig;
use crate::orlicz::OrliczFn;
use crate::rearrange::{DistSpec, Sign};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Classical,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Sum,
    Max,
    MaximalWitness,
    Sharpness,
}

/// Which inequality a scenario exercises; baselines are keyed by this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    ClassicalPositiveSum,
    ClassicalSymmetricSum,
    ClassicalMax,
    FreePositiveSum,
    FreeSymmetricSum,
    FreeMaximalWitness,
    ClassicalSharpness,
    FreeSharpness,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::ClassicalPositiveSum => "classical_positive_sum",
            Family::ClassicalSymmetricSum => "classical_symmetric_sum",
            Family::ClassicalMax => "classical_max",
            Family::FreePositiveSum => "free_positive_sum",
            Family::FreeSymmetricSum => "free_symmetric_sum",
            Family::FreeMaximalWitness => "free_maximal_witness",
            Family::ClassicalSharpness => "classical_sharpness",
            Family::FreeSharpness => "free_sharpness",
        }
    }

    /// Explicit lower constant for `lhs / rhs`, where one is known.
    pub fn lower_floor(self) -> Option<f64> {
        match self {
            Family::ClassicalPositiveSum => Some(1.0 / 3.0),
            Family::ClassicalMax => Some(0.5),
            Family::FreeMaximalWitness => Some(1.0 / 64.0),
            _ => None,
        }
    }
}

/// A part law, optionally repeated `repeat` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartSpec {
    #[serde(flatten)]
    pub dist: DistSpec,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub repeat: usize,
}

fn one() -> usize {
    1
}

fn is_one(n: &usize) -> bool {
    *n == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixParams {
    pub n_dim: usize,
    pub trials: u64,
}

impl Default for MatrixParams {
    fn default() -> Self {
        MatrixParams { n_dim: 1024, trials: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub a_values: Vec<f64>,
    pub n_values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub mode: Mode,
    pub statistic: Statistic,
    #[serde(default)]
    pub parts: Vec<PartSpec>,
    pub phi: OrliczFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Defaults {
    pub mc: Option<McConfig>,
    pub matrix: Option<MatrixParams>,
    pub seed: Option<u64>,
}

/// A scenario file: `{"defaults": {...}, "scenarios": [...]}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub defaults: Defaults,
    pub scenarios: Vec<Scenario>,
}

/// A scenario with defaults applied, parts expanded and its seed fixed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resolved {
    pub id: String,
    pub family: Family,
    pub mode: Mode,
    pub statistic: Statistic,
    pub parts: Vec<DistSpec>,
    pub phi: OrliczFn,
    pub mc: McConfig,
    pub matrix: MatrixParams,
    pub sweep: Option<SweepSpec>,
    pub seed: u64,
}

/// Seed for scenario `id` derived from a base seed.
pub fn derive_seed(base: u64, id: &str) -> u64 {
    let digest = Sha256::digest(format!("{base}:{id}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn invalid(id: &str, msg: impl Into<String>) -> VerifyError {
    VerifyError::Invalid { id: id.to_string(), msg: msg.into() }
}

impl Scenario {
    /// Applies defaults, an optional seed override, and validates.
    pub fn resolve(&self, defaults: &Defaults, seed_override: Option<u64>) -> Result<Resolved, VerifyError> {
        let id = self.id.as_str();
        if id.is_empty() {
            return Err(invalid(id, "empty scenario id"));
        }
        self.phi.validate().map_err(|e| invalid(id, e.to_string()))?;
        let mut parts = Vec::new();
        for (k, p) in self.parts.iter().enumerate() {
            p.dist.validate().map_err(|e| invalid(id, format!("part {k}: {e}")))?;
            if p.repeat == 0 {
                return Err(invalid(id, format!("part {k}: repeat must be at least 1")));
            }
            parts.extend(std::iter::repeat_n(p.dist.clone(), p.repeat));
        }
        let positive = parts.iter().all(DistSpec::is_positive);
        let symmetric = !parts.is_empty() && parts.iter().all(|d| d.sign == Sign::Symmetrized);

        let family = match (self.mode, self.statistic) {
            (Mode::Classical, Statistic::Sum) if positive => Family::ClassicalPositiveSum,
            (Mode::Classical, Statistic::Sum) if symmetric => Family::ClassicalSymmetricSum,
            (Mode::Free, Statistic::Sum) if positive => Family::FreePositiveSum,
            (Mode::Free, Statistic::Sum) if symmetric => Family::FreeSymmetricSum,
            (_, Statistic::Sum) => return Err(invalid(id, "sum needs all parts positive or all symmetrized")),
            (Mode::Classical, Statistic::Max) if positive => Family::ClassicalMax,
            (Mode::Free, Statistic::Max) => return Err(invalid(id, "max is a classical statistic; use maximal_witness")),
            (_, Statistic::Max) => return Err(invalid(id, "max needs positive parts")),
            (Mode::Free, Statistic::MaximalWitness) if positive => Family::FreeMaximalWitness,
            (Mode::Free, Statistic::MaximalWitness) => return Err(invalid(id, "maximal_witness needs positive parts")),
            (Mode::Classical, Statistic::MaximalWitness) => {
                return Err(invalid(id, "maximal_witness is a free statistic"))
            }
            (Mode::Classical, Statistic::Sharpness) => Family::ClassicalSharpness,
            (Mode::Free, Statistic::Sharpness) => Family::FreeSharpness,
        };

        let sweep = self.sweep.clone();
        if self.statistic == Statistic::Sharpness {
            let s = sweep.as_ref().ok_or_else(|| invalid(id, "sharpness needs a sweep block"))?;
            if s.a_values.len() < 2 || s.a_values.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(invalid(id, "sweep needs at least two positive a values"));
            }
            if s.a_values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid(id, "sweep a values must increase"));
            }
            if s.n_values.is_empty() || s.n_values.contains(&0) {
                return Err(invalid(id, "sweep needs positive n values"));
            }
            if !parts.is_empty() {
                return Err(invalid(id, "sharpness builds its own parts; leave parts empty"));
            }
        } else if sweep.is_some() {
            return Err(invalid(id, "sweep is only valid for sharpness"));
        }

        let seed = match (seed_override, self.seed, defaults.seed) {
            (Some(base), _, _) => derive_seed(base, id),
            (None, Some(s), _) => s,
            (None, None, base) => derive_seed(base.unwrap_or(0), id),
        };
        let mut mc = self.mc.clone().or_else(|| defaults.mc.clone()).unwrap_or_default();
        mc.seed = seed;
        if mc.trials == 0 {
            return Err(invalid(id, "mc.trials must be at least 1"));
        }
        let matrix = self.matrix.clone().or_else(|| defaults.matrix.clone()).unwrap_or_default();
        if self.mode == Mode::Free {
            if matrix.n_dim < 64 {
                return Err(invalid(id, format!("matrix.n_dim {} below 64", matrix.n_dim)));
            }
            if matrix.trials == 0 {
                return Err(invalid(id, "matrix.trials must be at least 1"));
            }
        }
        Ok(Resolved {
            id: self.id.clone(),
            family,
            mode: self.mode,
            statistic: self.statistic,
            parts,
            phi: self.phi.clone(),
            mc,
            matrix,
            sweep,
            seed,
        })
    }
}

impl Resolved {
    /// Hex prefix of the SHA-256 of the canonical JSON of the resolved scenario.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&serde_json::to_value(self).expect("serializable")).expect("json");
        Sha256::digest(canonical.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl Config {
    pub fn resolve_all(&self, seed_override: Option<u64>) -> Result<Vec<Resolved>, VerifyError> {
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(self.scenarios.len());
        for s in &self.scenarios {
            if !seen.insert(s.id.clone()) {
                return Err(invalid(&s.id, "duplicate scenario id"));
            }
            out.push(s.resolve(&self.defaults, seed_override)?);
        }
        Ok(out)
    }
}
