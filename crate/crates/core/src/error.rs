use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator has non-finite entries or a non-square shape: {0}")]
    InvalidOperator(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("restricted block is numerically singular (smallest singular value {sigma:.3e}, threshold {threshold:.3e}); supply an explicit excited-space inverse")]
    SingularRestriction { sigma: f64, threshold: f64 },

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("vector is not in the ground space (excited component {residual:.3e})")]
    InvalidGroundVector { residual: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),

    #[error("distance quadratic form is negative by {magnitude:.3e}, beyond roundoff")]
    ClampExceeded { magnitude: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
