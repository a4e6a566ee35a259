use thiserror::Error;

use crate::certificate::Certificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimensions, domains, parse failures).
    #[error("input error: {0}")]
    Input(String),

    /// An enumeration or time budget ran out. `best` carries the best
    /// partial answer when the operation has one (e.g. a lower bound).
    #[error("budget exhausted: {reason}")]
    Budget { reason: String, best: Option<usize> },

    /// A checked property does not hold; the certificate proves it.
    #[error("verification failed: {message}")]
    Verification {
        message: String,
        certificate: Box<Certificate>,
    },

    /// A precondition of the operation failed; the certificate explains why.
    #[error("precondition failed: {message}")]
    Precondition {
        message: String,
        certificate: Option<Box<Certificate>>,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn budget(reason: impl Into<String>) -> Self {
        Error::Budget {
            reason: reason.into(),
            best: None,
        }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }

    /// Process exit status used by the CLI and the C ABI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Verification { .. } | Error::Precondition { .. } => 1,
            Error::Input(_) | Error::Json(_) | Error::Io(_) => 2,
            Error::Budget { .. } => 3,
            Error::Internal(_) => 4,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Error::Verification { certificate, .. } => Some(certificate),
            Error::Precondition {
                certificate: Some(c),
                ..
            } => Some(c),
            _ => None,
        }
    }
}
