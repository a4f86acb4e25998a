use std::time::{Duration, Instant};

use serde::Serialize;

use super::HarnessError;
use crate::cnn::{predict_proba, Network};
use crate::dataset::LabeledExample;
use crate::motion::{MotionError, PipelineConfig, Representer, StageTimings};
use crate::videoio::Frame;

/// Streams shorter than this give noisy throughput figures.
pub const MIN_BENCH_FRAMES: usize = 300;

/// Throughput of the representation pipeline over one input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub frames_processed: usize,
    /// Median wall time of one pass over the input.
    pub wall_seconds: f64,
    pub fps: f64,
    /// `(stage, mean milliseconds per frame)` from the median pass.
    pub stage_breakdown: Vec<(String, f64)>,
    /// Median time to classify one representation image.
    pub inference_ms: Option<f64>,
    pub repeats: usize,
}

impl BenchReport {
    /// Sum of the per-frame stage means, in milliseconds.
    pub fn stage_total_ms(&self) -> f64 {
        self.stage_breakdown.iter().map(|(_, ms)| ms).sum()
    }

    /// Wall time per frame, in milliseconds.
    pub fn wall_ms_per_frame(&self) -> f64 {
        self.wall_seconds * 1e3 / self.frames_processed as f64
    }
}

struct Pass {
    wall: Duration,
    timings: StageTimings,
    image: Option<crate::motion::RepresentationImage>,
}

fn one_pass(frames: &[Frame], cfg: &PipelineConfig) -> Result<Pass, HarnessError> {
    let (w, h) = (frames[0].width(), frames[0].height());
    let start = Instant::now();
    let mut rep = Representer::new(cfg, w, h, false)?;
    for f in frames {
        rep.push(f)?;
    }
    let timings = *rep.timings();
    let image = match rep.finish() {
        Ok(img) => Some(img),
        Err(MotionError::EmptyActivity) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(Pass {
        wall: start.elapsed(),
        timings,
        image,
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Times the pipeline over `frames` `repeat` times after one untimed warm-up
/// pass and reports the median. With a network, inference on the resulting
/// image is timed separately.
pub fn run_bench(
    frames: &[Frame],
    cfg: &PipelineConfig,
    repeat: usize,
    classifier: Option<&Network>,
) -> Result<BenchReport, HarnessError> {
    if frames.is_empty() {
        return Err(HarnessError::Config("benchmark input has no frames".into()));
    }
    if repeat == 0 {
        return Err(HarnessError::Config("repeat must be at least 1".into()));
    }
    if frames.len() < MIN_BENCH_FRAMES {
        log::warn!(
            "benchmark input has {} frames; at least {MIN_BENCH_FRAMES} are recommended",
            frames.len()
        );
    }
    let warm = one_pass(frames, cfg)?;
    let mut passes = Vec::with_capacity(repeat);
    for _ in 0..repeat {
        passes.push(one_pass(frames, cfg)?);
    }
    passes.sort_by_key(|p| p.wall);
    let mid = &passes[(repeat - 1) / 2];
    let wall_seconds = median(passes.iter().map(|p| p.wall.as_secs_f64()).collect());
    let n = frames.len();
    let stage_breakdown = mid
        .timings
        .stages()
        .iter()
        .map(|(name, d)| (name.to_string(), d.as_secs_f64() * 1e3 / n as f64))
        .collect();

    let inference_ms = match classifier {
        None => None,
        Some(net) => {
            let (_, h, w) = net.config().input;
            let image = match warm.image {
                Some(img) if (img.width(), img.height()) == (w, h) => img,
                Some(img) => img.resized(w, h),
                None => crate::motion::RepresentationImage::new(w, h, vec![0.0; w * h], 0)?,
            };
            let example = [LabeledExample::original(image, 0, "bench")];
            predict_proba(net, &example, 1)?;
            let mut times = Vec::with_capacity(repeat);
            for _ in 0..repeat {
                let t = Instant::now();
                predict_proba(net, &example, 1)?;
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            Some(median(times))
        }
    };

    Ok(BenchReport {
        frames_processed: n,
        wall_seconds,
        fps: n as f64 / wall_seconds,
        stage_breakdown,
        inference_ms,
        repeats: repeat,
    })
}
