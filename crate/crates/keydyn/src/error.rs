//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Dataset header or column layout is unusable.
    #[error("schema error: {0}")]
    Schema(String),

    /// A data row could not be parsed; carries the 1-based row number
    /// (the header is row 1).
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Dataset content violates a corpus invariant (missing sessions,
    /// duplicate identities, ...).
    #[error("integrity error: {0}")]
    Integrity(String),

    /// A requested entity does not exist.
    #[error("lookup error: {0}")]
    Lookup(String),

    /// Invalid configuration (thresholds, ratios, unknown method names, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Not enough samples to build a model.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Feature-dimension mismatch between a query and a reference.
    #[error("shape error: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// An API precondition was violated (empty score set, missing criterion, ...).
    #[error("contract error: {0}")]
    Contract(String),

    /// Stream construction could not draw the requested impostor samples.
    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the CLI: 2 for configuration errors,
    /// 3 for dataset errors, 4 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Contract(_) => 2,
            Error::Schema(_)
            | Error::Parse { .. }
            | Error::Integrity(_)
            | Error::Lookup(_)
            | Error::Io(_) => 3,
            _ => 4,
        }
    }
}
