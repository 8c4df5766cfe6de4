use std::path::PathBuf;

/// Errors produced anywhere in the detection stack.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("signal contains a non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("analysis range holds {available} samples but the segment length is {needed}")]
    SignalTooShort { needed: usize, available: usize },

    #[error("unsupported window kind `{0}`")]
    UnsupportedWindow(String),

    #[error("PSD estimates are not comparable: {0}")]
    Mismatch(String),

    #[error("zero denominator at {freq_hz} Hz")]
    ZeroDenominator { freq_hz: f64 },

    #[error("zero baseline variance at {freq_hz} Hz")]
    ZeroVariance { freq_hz: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("zero-energy signal")]
    ZeroEnergy,

    #[error("baseline sample {index} is zero; the as-printed index divides by it")]
    ZeroBaselineSample { index: usize },

    #[error("packet window: {0}")]
    Window(String),

    #[error("malformed {what} at line {line}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("entry `{file}`: {source}")]
    Entry {
        file: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn entry(file: impl Into<String>, source: Error) -> Self {
        Error::Entry {
            file: file.into(),
            source: Box::new(source),
        }
    }

    /// Coarse failure category, used by front ends to choose an exit status.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Entry { source, .. } => source.category(),
            Error::InvalidParameter(_)
            | Error::UnsupportedWindow(_)
            | Error::Parse { .. }
            | Error::Window(_)
            | Error::Insufficient(_) => ErrorCategory::Validation,
            _ => ErrorCategory::Computation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Computation,
    Io,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
