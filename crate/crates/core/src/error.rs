use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inputs violate the precondition of a builder or formula.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An attack schedule cannot be executed as written.
    #[error("infeasible schedule at offset {offset}: {reason}")]
    InfeasibleSchedule { offset: u64, reason: String },

    /// A pool invariant broke mid-run.
    #[error("invariant violated at block {block}: {reason}")]
    Invariant { block: u64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            Error::InfeasibleSchedule { .. } => 3,
            Error::Domain(_) | Error::Precondition(_) | Error::Invariant { .. } => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Config(err.to_string())
    }
}

impl From<crate::num::ParseNumberError> for Error {
    fn from(err: crate::num::ParseNumberError) -> Self {
        Error::Config(err.to_string())
    }
}
