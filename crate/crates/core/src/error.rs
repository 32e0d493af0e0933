use thiserror::Error;

/// Errors produced by the evaluation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid argument `{name}`: {reason}")]
    Argument { name: &'static str, reason: String },

    #[error("UE at ({x}, {y}) is not strictly inside the layout bounds")]
    UeOutsideBounds { x: f64, y: f64 },

    #[error("coverage distance {distance_m:.3} m is not reachable within r_max = {r_max_m} m")]
    Unreachable { distance_m: f64, r_max_m: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("{0} must not be empty")]
    Empty(&'static str),
}

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad user-supplied value.
    Argument,
    /// Malformed input file.
    Input,
    /// Integration, solving or training failed.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. } => ErrorKind::Input,
            Error::Unreachable { .. } | Error::Numerical(_) | Error::Diverged { .. } => {
                ErrorKind::Numerical
            }
            _ => ErrorKind::Argument,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
