use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: not a NIfTI-1 file ({reason})")]
    BadHeader { path: PathBuf, reason: String },

    #[error("{path}: unsupported NIfTI datatype {datatype}")]
    UnsupportedDatatype { path: PathBuf, datatype: i16 },

    #[error("{path}: {reason}")]
    BadVolume { path: PathBuf, reason: String },

    #[error("invalid volume: {0}")]
    InvalidVolume(String),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimsMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("ROI min {min:?} size {size:?} does not fit in volume {dims:?}")]
    RoiOutOfBounds {
        min: [usize; 3],
        size: [usize; 3],
        dims: [usize; 3],
    },

    #[error("label map: {0}")]
    LabelMap(String),

    #[error("label {0} is not part of the label map")]
    UnknownLabel(u8),

    #[error("config: {0}")]
    Config(String),

    #[error("phantom: {0}")]
    Phantom(String),

    #[error("corruption: {0}")]
    Corruption(String),

    #[error("report: {0}")]
    Report(String),

    #[error("ranking: {0}")]
    Ranking(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
