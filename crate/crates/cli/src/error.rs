use std::path::PathBuf;

use qpkc_core::gmn::GmnError;
use qpkc_core::protocol::ProtocolError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad flag, configuration value or parameter combination.
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// A simulation invariant failed; indicates a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Usage(_) => 1,
            HarnessError::Io { .. } => 2,
            HarnessError::Internal(_) => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<ProtocolError> for HarnessError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidConfig(_) | ProtocolError::UnsupportedStrategy(_) => {
                HarnessError::Usage(e.to_string())
            }
            other => HarnessError::Internal(other.to_string()),
        }
    }
}

impl From<GmnError> for HarnessError {
    fn from(e: GmnError) -> Self {
        match e {
            GmnError::Qsim(_) => HarnessError::Internal(e.to_string()),
            other => HarnessError::Usage(other.to_string()),
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
