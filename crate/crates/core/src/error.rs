//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

use chrono::NaiveDate;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad category of a failure, used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Caller supplied inconsistent arguments or configuration.
    Usage,
    /// Input files or series are malformed or incompatible.
    Data,
    /// An algorithm hit a numerical dead end.
    Numerical,
}

impl ErrorClass {
    /// Process exit code: 1 usage, 2 data, 3 numerical.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}: line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}: line {line}: duplicate date {date}")]
    DuplicateDate {
        source_name: String,
        line: usize,
        date: NaiveDate,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("series `{name}` has {len} observations, need at least {needed}")]
    SeriesTooShort {
        name: String,
        len: usize,
        needed: usize,
    },

    #[error("no date is common to all {count} series")]
    EmptyIntersection { count: usize },

    #[error("column `{name}` is constant and cannot be standardized")]
    ConstantColumn { name: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("mixture component {component} received zero responsibility mass")]
    EmptyComponent { component: usize },

    #[error("Dunn index undefined: every within-cluster distance is zero")]
    DunnDegenerate,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::DimensionMismatch { .. } => {
                ErrorClass::Usage
            }
            Error::Parse { .. }
            | Error::DuplicateDate { .. }
            | Error::Io { .. }
            | Error::SeriesTooShort { .. }
            | Error::EmptyIntersection { .. }
            | Error::ConstantColumn { .. } => ErrorClass::Data,
            Error::NotPositiveDefinite(_)
            | Error::Degenerate(_)
            | Error::EmptyComponent { .. }
            | Error::DunnDegenerate => ErrorClass::Numerical,
        }
    }
}
