//! Uncompressed frame I/O: YUV4MPEG2 (luma plane only), binary PGM, and
//! deterministic synthetic scenes.

mod frame;
mod pgm;
pub mod synth;
mod y4m;

use std::fmt;
use std::path::PathBuf;

pub use frame::Frame;
pub use pgm::{read_pgm, read_pgm_sequence, write_pgm};
pub use synth::synth_moving_square;
pub use y4m::{open_y4m, write_y4m};

use crate::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum VideoError {
    #[error("{path}: not a {expected} file")]
    Format { path: PathBuf, expected: &'static str },
    #[error("{path}: bad header: {reason}")]
    Header { path: PathBuf, reason: String },
    #[error("{path}: frame {index} is truncated")]
    Truncated { path: PathBuf, index: usize },
    #[error("{path}: unsupported {what}")]
    Unsupported { path: PathBuf, what: String },
    #[error("no files matching {pattern:?} in {dir}")]
    NotFound { dir: PathBuf, pattern: String },
    #[error("frame {index} is {got:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl VideoError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            VideoError::InvalidFrame(_) | VideoError::Geometry(_) => ErrorKind::Usage,
            VideoError::Write { .. } => ErrorKind::Runtime,
            _ => ErrorKind::Data,
        }
    }
}

/// Frame rate as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: u32,
    pub den: u32,
}

impl Rational {
    pub const fn new(num: u32, den: u32) -> Self {
        Rational { num, den }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::new(30, 1)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StreamSource {
    File(PathBuf),
    Directory { dir: PathBuf, pattern: String },
    Synthetic(String),
    Memory,
}

type FrameIter = Box<dyn Iterator<Item = Result<Frame, VideoError>> + Send>;

/// A single-consumer sequence of equally sized frames.
///
/// The stream re-stamps frame indices so they always count up from zero, and
/// rejects any frame whose dimensions differ from the stream's.
pub struct FrameStream {
    fps: Rational,
    dims: (usize, usize),
    source: StreamSource,
    inner: FrameIter,
    next_index: usize,
    failed: bool,
}

impl FrameStream {
    pub(crate) fn from_iter(
        fps: Rational,
        dims: (usize, usize),
        source: StreamSource,
        inner: FrameIter,
    ) -> Self {
        FrameStream {
            fps,
            dims,
            source,
            inner,
            next_index: 0,
            failed: false,
        }
    }

    /// Wraps already decoded frames. All frames must share the first frame's size.
    pub fn from_frames(frames: Vec<Frame>, fps: Rational) -> Result<Self, VideoError> {
        let dims = frames
            .first()
            .map(|f| (f.width(), f.height()))
            .ok_or_else(|| VideoError::InvalidFrame("empty frame list".into()))?;
        Ok(Self::from_iter(
            fps,
            dims,
            StreamSource::Memory,
            Box::new(frames.into_iter().map(Ok)),
        ))
    }

    pub fn frames_per_second(&self) -> Rational {
        self.fps
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.dims
    }

    pub fn source(&self) -> &StreamSource {
        &self.source
    }

    /// Drains the stream, stopping at the first error.
    pub fn collect_frames(self) -> Result<Vec<Frame>, VideoError> {
        self.collect()
    }
}

impl Iterator for FrameStream {
    type Item = Result<Frame, VideoError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.inner.next()?;
        let item = item.and_then(|frame| {
            let got = (frame.width(), frame.height());
            if got != self.dims {
                return Err(VideoError::DimensionMismatch {
                    index: self.next_index,
                    expected: self.dims,
                    got,
                });
            }
            Ok(frame.with_index(self.next_index))
        });
        match &item {
            Ok(_) => self.next_index += 1,
            Err(_) => self.failed = true,
        }
        Some(item)
    }
}

impl fmt::Debug for FrameStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrameStream")
            .field("fps", &self.fps)
            .field("dims", &self.dims)
            .field("source", &self.source)
            .field("next_index", &self.next_index)
            .finish()
    }
}
