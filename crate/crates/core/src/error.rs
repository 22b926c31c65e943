use std::path::PathBuf;

use crate::instance::ValidationReport;

/// Errors produced anywhere in the planning, learning and simulation stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arm index {index} out of range for an instance with {len} arms")]
    ArmOutOfRange { index: usize, len: usize },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(ValidationReport),

    /// A size guard (state space, verification window, DP table) was exceeded.
    #[error("capacity guard tripped: {0}")]
    Capacity(String),

    #[error("budget exceeded at t={time}: {pulled} arms pulled with budget {budget}")]
    BudgetExceeded {
        time: u64,
        pulled: usize,
        budget: usize,
    },

    /// A structural invariant of a construction did not hold at runtime.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn from_json(err: &serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
