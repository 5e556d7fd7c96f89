use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The CLI maps these onto exit codes, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("simplex solver stalled after {iterations} iterations")]
    SolverStall { iterations: usize },

    #[error("vector is not in the column span of the body matrix")]
    NotInSpan,

    #[error(
        "condition ({inequality}) failed after {attempts} attempt(s): measured {measured:.6}, required {requirement}"
    )]
    ConditionFailed {
        /// Tag of the violated inequality, e.g. "el2" or "fin".
        inequality: String,
        measured: f64,
        requirement: String,
        attempts: usize,
    },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for this error: 1 for a failed condition,
    /// 2 for usage and I/O problems, 3 for numeric and solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConditionFailed { .. } => 1,
            Error::Usage(_) | Error::Parse(_) | Error::Io { .. } => 2,
            Error::Numeric(_) | Error::SolverStall { .. } | Error::NotInSpan | Error::Fit(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
