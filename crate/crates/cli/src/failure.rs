//! Command failures and their process exit codes.

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    /// Invalid flags or flag combinations. Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or unsuitable input data. Exit code 3.
    #[error("{0}")]
    Data(String),
    /// A violated internal invariant. Exit code 4.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Failure::Data(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Failure::Internal(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 3,
            Failure::Internal(_) => 4,
        })
    }
}

impl From<uniforce::Error> for Failure {
    fn from(err: uniforce::Error) -> Self {
        use uniforce::Error as E;
        let msg = err.to_string();
        match err {
            E::InvalidConfig(_) | E::InvalidSpec(_) | E::InvalidReps { .. } | E::InvalidGrid(_) => {
                Failure::Usage(msg)
            }
            E::CoincidentCenters(..) | E::EmptySubcluster(_) => Failure::Internal(msg),
            E::Io(_)
            | E::Parse { .. }
            | E::Csv(_)
            | E::EmptyDataset
            | E::TooFewPoints(_)
            | E::NonFiniteValue(_)
            | E::EmptyTable
            | E::TableFormat(_)
            | E::KTooLarge { .. }
            | E::LengthMismatch(..)
            | E::NotTwoDimensional(_) => Failure::Data(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Data(err.to_string())
    }
}
