use thiserror::Error;

use crate::riesz::FailureReason;

/// Errors raised by the Krein-space toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreinError {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (relative deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error(
        "matrix is numerically singular (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})"
    )]
    Singular { sigma_min: f64, sigma_max: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric is degenerate (eigenvalue {eigenvalue:e} below threshold)")]
    DegenerateMetric { eigenvalue: f64 },

    #[error("vector is not in the requested half (relative residual {residual:e})")]
    NotInSubspace { residual: f64 },

    #[error("families do not share the same index split")]
    SplitMismatch,

    #[error("family members do not lie in the half their index class requires")]
    MixedMembership,

    #[error("operator is not bijective (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    SingularOperator { sigma_min: f64, sigma_max: f64 },

    #[error("index count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("family is not a Riesz basis ({0})")]
    NotRiesz(FailureReason),

    #[error("lower Riesz bound is zero (A = {lower:e})")]
    LowerBoundZero { lower: f64 },

    #[error("defect cannot be applied: {0}")]
    DefectImpossible(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = KreinError> = std::result::Result<T, E>;
