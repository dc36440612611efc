use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Parse(String),
    #[error("invalid {field}: {reason}")]
    Field { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] ternlab_core::Error),
    #[error("malformed certificate: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn field(field: &'static str, reason: String) -> Self {
        CliError::Field { field, reason }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
