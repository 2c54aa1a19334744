use thiserror::Error;

/// Crate-wide error type.
///
/// `Config` and `FileFormat` cover bad inputs (CLI exit code 2); `Numeric`
/// covers failures inside otherwise well-posed computations (exit code 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("{path}: {msg}")]
    FileFormat { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn file_format(path: impl AsRef<std::path::Path>, msg: impl Into<String>) -> Self {
        Error::FileFormat { path: path.as_ref().display().to_string(), msg: msg.into() }
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 1,
            _ => 2,
        }
    }
}
