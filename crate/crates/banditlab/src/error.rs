//! Error type shared across the library and the CLI.
//!
//! The CLI maps variants to exit codes: configuration, domain, and usage
//! problems exit with 2; I/O problems exit with 3.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was called in a state that does not admit it.
    #[error("usage error: {0}")]
    Usage(String),
    /// An experiment or CLI configuration is invalid.
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Domain(_) | Error::Usage(_) | Error::Config(_) => 2,
            Error::Io(_) => 3,
            // Malformed JSON inputs are configuration mistakes.
            Error::Json(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
