use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by loading, sizing and planning.
#[derive(Debug, Error)]
pub enum DcgenError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("unsupported schema_version {found} (expected major {expected})")]
    UnsupportedSchema { found: String, expected: u32 },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("unknown reference configuration `{0}`")]
    UnknownReference(String),

    #[error("infeasible target: {0}")]
    Infeasible(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Coarse error category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Infeasible,
}

impl DcgenError {
    pub fn kind(&self) -> ErrorKind {
        match self {
            DcgenError::Io { .. }
            | DcgenError::Parse { .. }
            | DcgenError::UnsupportedSchema { .. }
            | DcgenError::Validation(_) => ErrorKind::Data,
            DcgenError::UnknownReference(_) | DcgenError::InvalidInput(_) => ErrorKind::Usage,
            DcgenError::Infeasible(_) => ErrorKind::Infeasible,
        }
    }
}

pub type Result<T, E = DcgenError> = std::result::Result<T, E>;
