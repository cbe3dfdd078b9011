use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Core(#[from] bowls::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("trace line {line}: {message}")]
    TraceParse { line: usize, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than a failed run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            BenchError::Usage(_) | BenchError::Config { .. } | BenchError::Core(bowls::Error::UnknownProblem(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
