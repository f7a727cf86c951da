use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stream read failed: {0}")]
    Stream(#[from] std::io::Error),

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch in {context}: {detail}")]
    DimensionMismatch { context: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("term `{0}` has document frequency 0")]
    UnseenTerm(String),

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0} is undefined for this input")]
    Undefined(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("stage `{stage}` needs `{artifact}`; run `{producer}` first")]
    MissingArtifact {
        stage: &'static str,
        artifact: String,
        producer: &'static str,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for problems the caller can fix: bad configuration, missing
    /// inputs or stage outputs, unusable data. The command line exits with
    /// status 2 on these and 1 on everything else.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::MissingArtifact { .. } | Error::InvalidArgument(_) | Error::Io { .. }
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
