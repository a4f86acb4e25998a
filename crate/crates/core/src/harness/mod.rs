//! Experiment configuration, parameter sweeps, the throughput benchmark and
//! report writers.

use std::path::PathBuf;

use crate::cnn::CnnError;
use crate::dataset::DatasetError;
use crate::motion::MotionError;
use crate::videoio::VideoError;
use crate::ErrorKind;

mod bench;
mod config;
mod experiment;
mod report;
mod sweep;

pub use bench::{run_bench, BenchReport, MIN_BENCH_FRAMES};
pub use config::{DatasetSettings, ExperimentConfig, ModelKind, SweepAxes, SEED_ENV};
pub use experiment::{prepare_corpus, scoring_split, train_and_evaluate};
pub use report::{emit_report, render_svg, ReportFormat};
pub use sweep::{read_sweep_csv, run_sweep, sweep_csv, write_sweep_csv, SweepGrid, SweepOptions, SweepRow, SWEEP_HEADER};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("nothing to report")]
    EmptyReport,
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Csv { path: PathBuf, reason: String },
    /// Inputs that are individually valid but do not belong together.
    #[error("{0}")]
    Mismatch(String),
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Cnn(#[from] CnnError),
}

impl HarnessError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            HarnessError::Config(_) | HarnessError::EmptyReport => ErrorKind::Usage,
            HarnessError::Read { .. } | HarnessError::Csv { .. } | HarnessError::Mismatch(_) => ErrorKind::Data,
            HarnessError::Write { .. } => ErrorKind::Runtime,
            HarnessError::Video(e) => e.kind(),
            HarnessError::Motion(e) => e.kind(),
            HarnessError::Dataset(e) => e.kind(),
            HarnessError::Cnn(e) => e.kind(),
        }
    }
}
