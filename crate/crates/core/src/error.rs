use thiserror::Error;

/// Errors raised by the numerical routines and the plant-spec parser.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("element has no holomorphic or conjugate extension to the right half-plane")]
    NoExtension,

    #[error("element is not invertible: {0}")]
    NotInvertible(String),

    #[error("invertibility could not be certified (margin {margin:.3e} within error band {band:.3e})")]
    Inconclusive { margin: f64, band: f64 },

    #[error("winding index unresolved: total phase is {distance:.3} turns away from an integer")]
    IndexResolution { distance: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("normalization check failed: max deviation {deviation:.3e}")]
    Normalization { deviation: f64 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
