use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no starting point could be evaluated")]
    NoEvaluableStart,

    #[error("at least one starting point is required")]
    NoStartingPoints,

    #[error("starting point {index} has dimension {found}, expected {expected}")]
    StartDimension {
        index: usize,
        found: usize,
        expected: usize,
    },

    #[error("starting point {index} lies outside the variable bounds")]
    StartOutOfBounds { index: usize },

    #[error("problem `{0}` has unbounded variables; starting points must be supplied")]
    Unbounded(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("unknown variant `{name}`; expected one of: {expected}")]
    UnknownVariant { name: String, expected: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed csv `{path}`: {reason}")]
    Csv { path: PathBuf, reason: String },

    #[error("external blackbox failed: {0}")]
    External(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error comes from bad user input (exit code 2) rather than a
    /// runtime failure (exit code 1).
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::UnknownProblem(_)
                | Error::UnknownVariant { .. }
                | Error::Config(_)
                | Error::StartDimension { .. }
                | Error::StartOutOfBounds { .. }
                | Error::NoStartingPoints
                | Error::Unbounded(_)
        )
    }
}
