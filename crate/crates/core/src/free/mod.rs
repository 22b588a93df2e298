//! Free-probability numerics: moment–cumulant transforms, the free Poisson
//! law, Haar-rotated matrix models and the free Kruglov map `x ↦ wxw`.

pub mod checks;
pub mod cumulants;
pub mod matrix;
pub mod poisson;

use thiserror::Error;

pub use checks::{
    goe_kruglov_moments,
    cumulant_additivity, free_convolution_check, free_kruglov_check, free_majorization_check,
    kruglov_sandwich_check, tail_constant, FreeConvolutionReport, KruglovFitReport, MajorizationReport,
    MomentCheck, SandwichReport, TailReport,
};
pub use cumulants::{cumulants_to_moments, empirical_moments, moments_to_cumulants, CumulantSeq, MomentSeq};
pub use matrix::{
    free_kruglov_spectrum, free_sum_spectrum, part_diagonal, quantile_diagonal, rotated_sum_spectrum, MatrixModel,
    SpectralSample,
};
pub use poisson::{
    free_poisson_atom, free_poisson_cdf, free_poisson_density, free_poisson_expect, free_poisson_pnorm,
    free_poisson_quantiles, free_poisson_support,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FreeError {
    #[error("moment/cumulant order {0} exceeds the cap of 12")]
    Order(usize),
    #[error("{0}")]
    Parameter(String),
    #[error("part {0}: {1}")]
    Part(usize, String),
    #[error("eigensolver failed on trial {trial} after retries")]
    Eigen { trial: u64 },
    #[error("part {index}: y is not majorized by x")]
    NotMajorized { index: usize },
}
