use thiserror::Error;

/// Error type shared by every operation in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point is not in the domain: {0}")]
    NotInDomain(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("branch of the root jumps: {0}")]
    BranchJump(String),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("spec error: {0}")]
    Spec(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
