use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies on the horizon of the homography (|w| < 1e-12)")]
    DegenerateProjection { x: f64, y: f64 },

    #[error("homography is singular (|det| = {det:e} <= 1e-12)")]
    SingularHomography { det: f64 },

    #[error("invalid bounding box: {0}")]
    InvalidBBox(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("track {track}: frame {frame} does not follow frame {previous}")]
    NonContiguousTrack { track: u64, previous: u64, frame: u64 },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("state has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("detections out of order: frame {frame} follows frame {previous}")]
    UnsortedInput { previous: u64, frame: u64 },

    #[error("no healthy source: every camera is excluded at frame {frame}")]
    NoHealthySource { frame: u64 },

    #[error("no source points to fuse")]
    NoSource,

    #[error("no weight configured for camera '{0}'")]
    UnknownCamera(String),

    #[error("trajectories share no frame")]
    NoOverlap,

    #[error("config error at '{key}': {message}")]
    Config { key: String, message: String },

    #[error("{path}:{line}: {message}")]
    Input { path: PathBuf, line: u64, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Broad class of the failure, used by front ends to pick an exit status.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } | Error::UnknownCamera(_) => ErrorKind::Config,
            Error::Input { .. }
            | Error::Io { .. }
            | Error::UnsortedInput { .. }
            | Error::InvalidBBox(_)
            | Error::NonFinite(_)
            | Error::NoOverlap
            | Error::NoSource
            | Error::DegenerateProjection { .. }
            | Error::SingularHomography { .. } => ErrorKind::Data,
            Error::NonContiguousTrack { .. }
            | Error::SingularInnovation
            | Error::DimensionMismatch { .. }
            | Error::NoHealthySource { .. } => ErrorKind::Internal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Internal,
}
