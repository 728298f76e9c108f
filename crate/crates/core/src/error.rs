use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No salient region survived pooling; callers fall back to the full image.
    #[error("no salient region found")]
    NoRegion,

    #[error("bad gradient bundle: {0}")]
    Format(String),

    #[error("scorer transport error: {0}")]
    Transport(String),

    #[error("scorer protocol error: {0}")]
    Protocol(String),

    #[error("scorer rejected request {id}: {message}")]
    Scorer { id: u64, message: String },

    #[error("image error for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Transport-level failures abort a batch; everything else is per-entry.
    pub fn is_transport(&self) -> bool {
        matches!(self, Error::Transport(_) | Error::Protocol(_) | Error::Scorer { .. })
    }
}
