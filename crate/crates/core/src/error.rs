use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed wav header in {path}: {message}")]
    WavHeader { path: PathBuf, message: String },

    #[error("channel count ≠ 2 in {path}: found {channels} channel(s)")]
    ChannelCount { path: PathBuf, channels: u16 },

    #[error("unsupported wav encoding in {path}: {format} with {bits} bits per sample")]
    UnsupportedEncoding {
        path: PathBuf,
        format: &'static str,
        bits: u16,
    },

    #[error("metadata {path}, line {line}: {message}")]
    Metadata {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("tensor file {path}: {message}")]
    TensorFormat { path: PathBuf, message: String },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("distance normalizer: {0}")]
    Normalizer(String),

    #[error("class id {class_id} out of range for {n_classes} classes")]
    ClassOutOfRange { class_id: usize, n_classes: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}
