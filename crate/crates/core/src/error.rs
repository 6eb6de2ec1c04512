use thiserror::Error;

/// Errors raised by the laboratory. Numerical failures are reported as
/// values (an infinite divergence, a failed certificate) and do not appear here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} has size {size}, above the configured cap {cap}")]
    CapExceeded { what: &'static str, size: u128, cap: u128 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("sequences have different types")]
    TypeMismatch,

    #[error("conditional type does not match the conditioning sequence: {0}")]
    InconsistentConditionalType(String),

    #[error("permutation multiset is not closed under inversion")]
    NotSymmetricMultiset,

    #[error("no success after {attempts} attempts (best value {best})")]
    RetriesExhausted { attempts: usize, best: f64 },

    #[error("Young diagram has {rows} rows but the local dimension is {d}")]
    TooManyRows { rows: usize, d: usize },

    #[error("denominator is not strictly positive: min eigenvalue {min_eig:e} below floor {floor:e}")]
    SingularDenominator { min_eig: f64, floor: f64 },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {change:e})")]
    NonConvergence { iterations: usize, change: f64 },

    #[error("construction infeasible: {0}")]
    Infeasible(String),

    #[error("missing or failed certificate: {0}")]
    MissingCertificate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("unknown strategy '{name}' (available: {available})")]
    UnknownStrategy { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
