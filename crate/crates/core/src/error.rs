use thiserror::Error;

/// Failure modes of the library.
///
/// Variants are grouped by what a caller can do about them: bad input
/// (validation, shape, index, parameter, precondition, unsupported), a
/// problem too large to enumerate (size), or a numerical inconsistency that
/// indicates the eigenvalues handed in are not those of any valid walk.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid modulus q = {0}: must be at least 2")]
    InvalidModulus(u64),
    #[error("invalid law: {0}")]
    Validation(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{what} has size {size}, above the limit {limit}")]
    Size {
        what: String,
        size: u128,
        limit: u128,
    },
    #[error("eigenvalues are inconsistent: imaginary residue {0:e}")]
    InconsistentEigenvalues(f64),
    #[error("not a valid eigenvalue sequence: {0}")]
    NotEigenvalueSequence(String),
    #[error("invalid eigenvalues: reconstructed probability {0:e} is negative")]
    InvalidEigenvalue(f64),
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("hypergroup coefficient {0:e} is negative")]
    HypergroupViolation(f64),
    #[error("no bound: {0}")]
    NoBound(String),
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("law has no tail constant; the density series cannot be truncated")]
    CannotTruncate,
    #[error("impossible outcome observed: {0}")]
    ImpossibleOutcome(String),
}

impl Error {
    pub(crate) fn size(what: impl Into<String>, size: u128, limit: u128) -> Self {
        Error::Size {
            what: what.into(),
            size,
            limit,
        }
    }

    /// Broad category, used by frontends to pick an exit status.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Size { .. } => ErrorKind::Size,
            Error::InconsistentEigenvalues(_)
            | Error::NotEigenvalueSequence(_)
            | Error::InvalidEigenvalue(_)
            | Error::NumericalInconsistency(_)
            | Error::HypergroupViolation(_)
            | Error::ImpossibleOutcome(_) => ErrorKind::Numerical,
            _ => ErrorKind::Validation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Size,
    Numerical,
}

pub type Result<T> = std::result::Result<T, Error>;
