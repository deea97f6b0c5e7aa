use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subject count must be even and at least 2, got {0}")]
    InvalidSubjectCount(usize),

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("allocation entry {index} is {value}; entries must be +1 or -1")]
    InvalidEntry { index: usize, value: i64 },

    #[error("allocation is not forced-balance (entries sum to {0})")]
    Unbalanced(i64),

    #[error("n = {n} exceeds the enumeration cap of {cap}; use greedy search for larger designs")]
    EnumerationCap { n: usize, cap: usize },

    #[error("n = {n} exceeds the dense matrix cap of {cap}")]
    DenseCap { n: usize, cap: usize },

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("invalid allocation covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A numerical identity that must hold by construction did not.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True when the failure is an internal invariant rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}
