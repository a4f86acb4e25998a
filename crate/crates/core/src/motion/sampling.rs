use std::collections::VecDeque;

use super::flow::{dense_flow, summarize_flow_with, FlowSummary};
use super::{IntervalMapping, MotionError, PipelineConfig};
use crate::preprocess::ForegroundMask;

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Frames to skip until the next sample, given the flow at the current one.
pub fn sampling_interval(summary: &FlowSummary, cfg: &PipelineConfig) -> usize {
    let s = summary.s;
    if summary.degenerate || !s.is_finite() || s == 0.0 {
        return cfg.fallback_interval;
    }
    let raw = match cfg.interval_mapping {
        IntervalMapping::Direct => round_half_up(s),
        IntervalMapping::Inverse => round_half_up(cfg.inverse_gain / s),
    };
    if !raw.is_finite() {
        return cfg.fallback_interval;
    }
    (raw.max(0.0) as usize).clamp(cfg.interval_min, cfg.interval_max)
}

/// One emitted sample and the flow measured at it.
#[derive(Debug, Clone)]
pub struct Sample {
    pub mask: ForegroundMask,
    /// Position in the mask sequence.
    pub position: usize,
    /// `None` while fewer than `d` masks precede this one.
    pub summary: Option<FlowSummary>,
    /// Gap to the next sample.
    pub interval: usize,
}

/// Streaming adaptive sampler.
///
/// Sampling starts at the first mask with any foreground. At each sample the
/// flow between the masks `d` apart ending at it sets the gap to the next
/// sample.
#[derive(Debug, Clone)]
pub struct AdaptiveSampler {
    cfg: PipelineConfig,
    history: VecDeque<ForegroundMask>,
    position: usize,
    next_sample: Option<usize>,
}

impl AdaptiveSampler {
    pub fn new(cfg: &PipelineConfig) -> Result<Self, MotionError> {
        cfg.validate()?;
        Ok(AdaptiveSampler {
            cfg: cfg.clone(),
            history: VecDeque::with_capacity(cfg.flow_frame_distance + 1),
            position: 0,
            next_sample: None,
        })
    }

    pub fn push(&mut self, mask: ForegroundMask) -> Result<Option<Sample>, MotionError> {
        let t = self.position;
        self.position += 1;
        if self.next_sample.is_none() && mask.any() {
            self.next_sample = Some(t);
        }
        let d = self.cfg.flow_frame_distance;
        let mut emitted = None;
        if self.next_sample == Some(t) {
            let summary = if self.history.len() == d {
                let field = dense_flow(
                    &self.history[0],
                    &mask,
                    self.cfg.flow_window,
                    self.cfg.eigen_threshold,
                    self.cfg.flow_iterations,
                )?;
                Some(summarize_flow_with(&field, self.cfg.summary_mode))
            } else {
                None
            };
            let interval = summary
                .as_ref()
                .map(|s| sampling_interval(s, &self.cfg))
                .unwrap_or(self.cfg.fallback_interval);
            self.next_sample = Some(t + interval);
            emitted = Some(Sample {
                mask: mask.clone(),
                position: t,
                summary,
                interval,
            });
        }
        self.history.push_back(mask);
        if self.history.len() > d {
            self.history.pop_front();
        }
        Ok(emitted)
    }
}

/// Selects the samples of a whole mask sequence.
pub fn adaptive_sample_detailed(masks: &[ForegroundMask], cfg: &PipelineConfig) -> Result<Vec<Sample>, MotionError> {
    if masks.is_empty() {
        return Err(MotionError::EmptyInput("no masks to sample".into()));
    }
    let mut sampler = AdaptiveSampler::new(cfg)?;
    let mut out = Vec::new();
    for m in masks {
        if let Some(s) = sampler.push(m.clone())? {
            out.push(s);
        }
    }
    Ok(out)
}

pub fn adaptive_sample(masks: &[ForegroundMask], cfg: &PipelineConfig) -> Result<Vec<ForegroundMask>, MotionError> {
    Ok(adaptive_sample_detailed(masks, cfg)?
        .into_iter()
        .map(|s| s.mask)
        .collect())
}

/// Result of [`trim_samples`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trimmed<T> {
    pub samples: Vec<T>,
    /// Set when the input was too short to trim and was returned unchanged.
    pub too_short: bool,
}

/// Drops `trim_count` samples from each end, unless that would leave nothing.
pub fn trim_samples<T>(mut samples: Vec<T>, trim_count: usize) -> Trimmed<T> {
    if trim_count == 0 {
        return Trimmed { samples, too_short: false };
    }
    if samples.len() <= 2 * trim_count {
        return Trimmed { samples, too_short: true };
    }
    samples.truncate(samples.len() - trim_count);
    samples.drain(..trim_count);
    Trimmed { samples, too_short: false }
}
