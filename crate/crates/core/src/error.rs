use crate::cnn::CnnError;
use crate::dataset::DatasetError;
use crate::harness::HarnessError;
use crate::motion::MotionError;
use crate::preprocess::PreprocessError;
use crate::videoio::VideoError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Crate-level error, wrapping the per-module error types.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// Coarse classification used to pick process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameters or configuration supplied by the caller.
    Usage,
    /// Input files missing, malformed or inconsistent.
    Data,
    /// Failure while computing (divergence, I/O while writing, ...).
    Runtime,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Video(e) => e.kind(),
            Error::Preprocess(_) => ErrorKind::Usage,
            Error::Motion(e) => e.kind(),
            Error::Dataset(e) => e.kind(),
            Error::Cnn(e) => e.kind(),
            Error::Harness(e) => e.kind(),
        }
    }
}
