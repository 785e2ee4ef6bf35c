use std::io;

use thiserror::Error;

/// Errors surfaced by the registration library.
///
/// Variants are grouped by the layer that raises them so the CLI can map
/// them onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error in {field}: {msg}")]
    Parse { field: String, msg: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fixed-point encoding overflow: {value} outside ±{limit}")]
    EncodingOverflow { value: f64, limit: f64 },

    #[error("protocol error (round {round}): {msg}")]
    Protocol { round: u32, msg: String },

    #[error("homomorphic encryption error: {0}")]
    He(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn parse(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn protocol(round: u32, msg: impl Into<String>) -> Self {
        Error::Protocol { round, msg: msg.into() }
    }

    /// Exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Argument(_) | Error::Io(_) => 2,
            Error::Protocol { .. } | Error::Transport(_) | Error::He(_) => 3,
            Error::Numeric(_) | Error::EncodingOverflow { .. } | Error::Integrity(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
