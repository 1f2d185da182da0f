//! Crate-wide error type.
//!
//! Every fallible public operation in this crate returns [`Result`]. The
//! variants are grouped by failure class: parameter validation, identifier
//! bookkeeping in the mutable index, capacity guards, and file I/O.

/// Errors produced by geometry, planning, coding, indexing, and persistence.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two vectors (or a vector and a structure built for a fixed dimension)
    /// disagree on dimensionality.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A scalar or structural parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A vector that must lie on the unit sphere has the wrong norm.
    #[error("vector norm {norm} is not within tolerance of 1")]
    NotUnitLength { norm: f64 },

    /// An id was inserted twice into the same index.
    #[error("duplicate point id {0}")]
    DuplicateId(u64),

    /// An id was deleted or referenced but never inserted.
    #[error("unknown point id {0}")]
    UnknownId(u64),

    /// A requested filter count does not fit in the supported range.
    #[error("filter count {0} exceeds the supported maximum of 2^62")]
    FilterCountOverflow(u128),

    /// Brute-force enumeration refused to scan an oversized code.
    #[error("brute-force enumeration over {t} filters exceeds cap {cap}")]
    BruteForceTooLarge { t: u64, cap: u64 },

    /// The mutable index failed an internal consistency audit.
    #[error("index audit failed: {0}")]
    AuditFailure(String),

    /// An underlying I/O operation failed.
    #[error("io error: {0}")]
    Io(String),

    /// A file exists but does not match the expected format.
    #[error("malformed file: {0}")]
    MalformedFile(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
