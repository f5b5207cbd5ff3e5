use thiserror::Error;

/// Errors raised by the surrogate library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("column {0} has zero variance")]
    DegenerateColumn(usize),

    #[error("tape does not match the network or gradient shapes")]
    StaleTape,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("input outside simulator domain: {0}")]
    DomainError(String),

    #[error("invalid population: {0}")]
    InvalidPopulation(String),

    #[error("numerical blow-up: {0}")]
    NumericalBlowup(String),

    #[error("grid error: {0}")]
    GridError(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
