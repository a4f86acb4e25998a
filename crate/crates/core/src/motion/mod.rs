//! Flow-driven adaptive sampling of silhouettes and their accumulation into a
//! single motion-weighted image.
//!
//! At each sample the mean flow vector between masks `d` frames apart gives
//! the sampling rate `S = |(mean u, mean v)|`; rounded, it is the gap to the
//! next sample. Samples are folded oldest-first with `R <- beta * R + F`, so
//! the latest silhouette is brightest and each older one is attenuated by
//! another factor of `beta`.

mod accumulate;
mod config;
mod flow;
mod sampling;

use std::time::{Duration, Instant};

pub use accumulate::{accumulate, resize_bilinear, Accumulator, RepresentationImage};
pub use config::{IntervalMapping, PipelineConfig, SummaryMode};
pub use flow::{dense_flow, summarize_flow, summarize_flow_with, FlowField, FlowSummary};
pub use sampling::{
    adaptive_sample, adaptive_sample_detailed, sampling_interval, trim_samples, AdaptiveSampler, Sample, Trimmed,
};

use crate::preprocess::{ForegroundMask, PreprocessError, SilhouetteExtractor, SilhouetteTimings};
use crate::videoio::{Frame, FrameStream, VideoError};
use crate::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum MotionError {
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("no moving foreground found in the video")]
    EmptyActivity,
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

impl MotionError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            MotionError::Config(_) | MotionError::Preprocess(_) => ErrorKind::Usage,
            MotionError::Video(e) => e.kind(),
            MotionError::DimensionMismatch(_) | MotionError::EmptyInput(_) | MotionError::EmptyActivity => {
                ErrorKind::Data
            }
        }
    }
}

/// Wall time spent per pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub silhouette: SilhouetteTimings,
    pub sampling: Duration,
    pub accumulate: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.silhouette.blur + self.silhouette.background + self.silhouette.morphology + self.sampling + self.accumulate
    }

    /// (stage name, duration) in pipeline order.
    pub fn stages(&self) -> [(&'static str, Duration); 5] {
        [
            ("blur", self.silhouette.blur),
            ("background", self.silhouette.background),
            ("morphology", self.silhouette.morphology),
            ("sampling", self.sampling),
            ("accumulate", self.accumulate),
        ]
    }
}

/// Frame-at-a-time video to representation conversion.
///
/// In training mode samples are buffered so they can be trimmed at the end;
/// otherwise they are accumulated as soon as they are chosen.
#[derive(Debug)]
pub struct Representer {
    cfg: PipelineConfig,
    extractor: SilhouetteExtractor,
    sampler: AdaptiveSampler,
    training: bool,
    buffered: Vec<ForegroundMask>,
    accumulator: Accumulator,
    timings: StageTimings,
    frames: usize,
}

impl Representer {
    pub fn new(cfg: &PipelineConfig, width: usize, height: usize, training_mode: bool) -> Result<Self, MotionError> {
        cfg.validate()?;
        Ok(Representer {
            cfg: cfg.clone(),
            extractor: SilhouetteExtractor::new(cfg.silhouette, width, height, cfg.rng_seed)?,
            sampler: AdaptiveSampler::new(cfg)?,
            training: training_mode,
            buffered: Vec::new(),
            accumulator: Accumulator::new(width, height, cfg.beta),
            timings: StageTimings::default(),
            frames: 0,
        })
    }

    pub fn push(&mut self, frame: &Frame) -> Result<(), MotionError> {
        let mask = self.extractor.process_timed(frame, &mut self.timings.silhouette)?;
        let t0 = Instant::now();
        let sample = self.sampler.push(mask)?;
        let t1 = Instant::now();
        self.timings.sampling += t1 - t0;
        if let Some(sample) = sample {
            if self.training {
                self.buffered.push(sample.mask);
            } else {
                self.accumulator.push_mask(&sample.mask)?;
                self.timings.accumulate += t1.elapsed();
            }
        }
        self.frames += 1;
        Ok(())
    }

    pub fn frames_processed(&self) -> usize {
        self.frames
    }

    pub fn timings(&self) -> &StageTimings {
        &self.timings
    }

    pub fn finish(mut self) -> Result<RepresentationImage, MotionError> {
        let t0 = Instant::now();
        if self.training {
            let trimmed = trim_samples(std::mem::take(&mut self.buffered), self.cfg.trim_count);
            if trimmed.too_short {
                log::warn!(
                    "only {} samples, too few to trim {} from each end",
                    trimmed.samples.len(),
                    self.cfg.trim_count
                );
            }
            for s in &trimmed.samples {
                self.accumulator.push_mask(s)?;
            }
        }
        if self.accumulator.count() == 0 {
            return Err(MotionError::EmptyActivity);
        }
        let out = self.accumulator.finish(self.cfg.output_size);
        self.timings.accumulate += t0.elapsed();
        out
    }
}

/// Full pipeline: silhouettes, adaptive sampling, optional trimming (training
/// mode only), accumulation and resize.
pub fn represent(stream: FrameStream, cfg: &PipelineConfig, training_mode: bool) -> Result<RepresentationImage, MotionError> {
    let (w, h) = stream.dimensions();
    let mut rep = Representer::new(cfg, w, h, training_mode)?;
    for frame in stream {
        rep.push(&frame?)?;
    }
    rep.finish()
}
