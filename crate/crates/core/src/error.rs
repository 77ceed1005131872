use std::path::PathBuf;

/// Error type shared by every operation in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Least-squares fit has no unique solution (e.g. all abscissae equal).
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Weight file is malformed; `layer` is the 1-based conv index being read
    /// when the problem was detected (0 for the file header).
    #[error("weight file format error at conv layer {layer}: {reason}")]
    WeightFormat { layer: usize, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image decode/encode error on {path}: {reason}")]
    ImageCodec { path: PathBuf, reason: String },

    #[error("calibration csv error: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
