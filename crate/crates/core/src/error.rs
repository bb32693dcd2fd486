use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
///
/// Variants fall into three families that map onto the CLI exit codes:
/// validation problems (2), numerical failures (3) and size-guard
/// violations (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("degenerate scale: mean squared pairwise distance is zero")]
    DegenerateScale,

    #[error("degenerate covariance: all points are identical")]
    DegenerateCovariance,

    #[error("numerical failure at step {step}: {what}")]
    Divergence { step: usize, what: String },

    #[error("size guard: {what} is {found}, limit is {limit}")]
    SizeGuard {
        what: &'static str,
        limit: usize,
        found: usize,
    },

    #[error("no realizable cover: some point lies in the hull of the others")]
    NoRealizableCover,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. } | Error::Divergence { .. } => 3,
            Error::SizeGuard { .. } => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
