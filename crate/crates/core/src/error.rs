use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally invalid input: bad dimensions, non-finite numbers,
    /// values outside their domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested operation has no feasible answer, e.g. the trains
    /// cannot be packed into the horizon under the headway rules.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An iterative routine exhausted its budget without reaching its
    /// convergence test.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Malformed input file. Carries the path (or a short label) and the
    /// first offending line.
    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    pub fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
