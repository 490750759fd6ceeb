//! Error type shared by every module of the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = RuberError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum RuberError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Well-formed input that violates a data rule (score range, annotator count).
    #[error("{path}:{line}: {message}")]
    Validation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Caller broke a precondition: bad shapes, empty input, out-of-range argument.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Binary checkpoint is truncated or carries a bad magic/version.
    #[error("checkpoint format error: {0}")]
    Format(String),

    /// Checkpoint was trained against a different vocabulary.
    #[error("incompatible checkpoint: {0}")]
    Compatibility(String),
}

impl RuberError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RuberError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        RuberError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        RuberError::Validation {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            RuberError::Config(_) | RuberError::Contract(_) => 2,
            RuberError::Io { .. }
            | RuberError::Parse { .. }
            | RuberError::Validation { .. }
            | RuberError::Format(_) => 3,
            RuberError::Numerical(_) => 4,
            RuberError::Compatibility(_) => 5,
        }
    }
}

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err($crate::error::RuberError::Contract(format!($($arg)+)));
        }
    };
}
pub(crate) use ensure;
