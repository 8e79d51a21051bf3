use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("unknown sweep axis `{0}`")]
    UnknownAxis(String),

    #[error(transparent)]
    Core(#[from] lrlab_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{path}, line {line}: {message}")]
    Import { path: PathBuf, line: u64, message: String },

    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> HarnessError {
    HarnessError::Validation { path: path.into(), message: message.into() }
}
