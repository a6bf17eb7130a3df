use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit.
///
/// `Numeric` and `Fit` are numeric failures (CLI exit code 2); every other
/// variant is a validation failure (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported spec: {0}")]
    UnsupportedSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("numeric error in layer {layer}: {message}")]
    Numeric { layer: usize, message: String },
    #[error("fit diverged at step {step}: {message}")]
    Fit { step: usize, message: String },
    #[error("view {index}: {source}")]
    View {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::Numeric { .. } | Error::Fit { .. } => true,
            Error::View { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}
