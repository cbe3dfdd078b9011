use thiserror::Error;

/// Errors produced by the optimization toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("objective returned a non-finite value at {point:?}")]
    NonFiniteValue { point: Vec<f64> },

    #[error("objective has no gradient oracle")]
    NoGradient,

    #[error("local search from {start:?} failed at {point:?}: {reason}")]
    LocalSearch {
        start: Vec<f64>,
        point: Vec<f64>,
        reason: String,
    },

    #[error("line search failed to find an acceptable step")]
    LineSearch,

    #[error("gaussian process fit failed: {0}")]
    ModelFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
