use std::path::PathBuf;

/// Errors produced anywhere in the DSPN library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("item index {index} out of range for ground set of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("negative weight {value} at position {position} ({context})")]
    NegativeWeight {
        value: f64,
        position: usize,
        context: &'static str,
    },

    #[error("ground set of size {n} too large for exhaustive enumeration (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("degenerate loss denominator: kappa*Delta + eps*sgn(Delta) = 0")]
    DegenerateDenominator,

    #[error("labels required for {0}")]
    MissingLabels(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("training diverged at epoch {epoch}: risk is {risk}")]
    Diverged { epoch: usize, risk: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("format error in {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("truncated file {path}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io { .. } | Error::Format { .. } | Error::Truncated { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
