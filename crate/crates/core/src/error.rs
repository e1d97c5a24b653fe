use thiserror::Error;

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Domain,
    Convergence,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    /// A physical formula was asked for outside its domain of validity.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    /// `line` is 1-based; 0 means the problem is not tied to one line.
    #[error("config error{}: {msg}", at_line(*line))]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" (line {line})")
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::InvalidInput(_) => ErrorKind::Domain,
            Error::Convergence(_) => ErrorKind::Convergence,
            Error::Config { .. } => ErrorKind::Config,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config { line, msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
