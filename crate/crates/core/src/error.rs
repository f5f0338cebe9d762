use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid quantization resolution {0}: must be a finite positive number")]
    InvalidResolution(f64),

    #[error("invalid sparsity k={k} for ambient dimension n={n}")]
    InvalidSparsity { k: usize, n: usize },

    #[error("invalid rank r={r} for a {n1}x{n2} matrix")]
    InvalidRank { r: usize, n1: usize, n2: usize },

    #[error("signal shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular value decomposition did not converge")]
    SvdFailure,

    #[error("degenerate draw: {0}")]
    Degenerate(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "non-positive value {value} at position {index}; log-log fit needs strictly positive data"
    )]
    NonPositive { index: usize, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Csv(_) | Error::SvdFailure)
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
