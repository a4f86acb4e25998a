use serde::{Deserialize, Serialize};

use super::MotionError;
use crate::preprocess::SilhouetteParams;

/// How the per-pixel flow vectors are reduced to a sampling rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMode {
    /// Average the (u, v) components; the rate is the length of the mean vector.
    #[default]
    Cartesian,
    /// Average magnitudes and angles separately, then convert the mean polar
    /// pair back to Cartesian components.
    Polar,
}

/// How the sampling rate turns into a frame interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntervalMapping {
    /// interval = round(S): faster motion, longer gaps.
    #[default]
    Direct,
    /// interval = round(inverse_gain / S): faster motion, shorter gaps.
    Inverse,
}

/// Every parameter of the video-to-representation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Weight kept by the accumulated image each time a frame is added.
    pub beta: f64,
    /// Frames between the two masks fed to the flow solver.
    pub flow_frame_distance: usize,
    /// Side of the square flow window, odd.
    pub flow_window: usize,
    pub fallback_interval: usize,
    pub interval_min: usize,
    pub interval_max: usize,
    /// Samples dropped from each end in training mode.
    pub trim_count: usize,
    /// (width, height) of the final image.
    pub output_size: (usize, usize),
    /// Floor on the smaller eigenvalue of the mean structure tensor of the
    /// window, computed on intensities scaled to [0, 1].
    pub eigen_threshold: f64,
    /// Gauss-Newton iterations per pixel in the flow solve.
    pub flow_iterations: usize,
    pub summary_mode: SummaryMode,
    pub interval_mapping: IntervalMapping,
    /// Numerator of the inverse mapping, in pixel-frames.
    pub inverse_gain: f64,
    pub rng_seed: u64,
    pub silhouette: SilhouetteParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            beta: 0.8,
            flow_frame_distance: 1,
            flow_window: 15,
            fallback_interval: 2,
            interval_min: 2,
            interval_max: 30,
            trim_count: 5,
            output_size: (227, 227),
            eigen_threshold: 1e-3,
            flow_iterations: 30,
            summary_mode: SummaryMode::Cartesian,
            interval_mapping: IntervalMapping::Direct,
            inverse_gain: 12.0,
            rng_seed: 0,
            silhouette: SilhouetteParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), MotionError> {
        let bad = |msg: String| Err(MotionError::Config(msg));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.flow_frame_distance == 0 {
            return bad("flow_frame_distance must be >= 1".into());
        }
        if self.flow_window < 3 || self.flow_window.is_multiple_of(2) {
            return bad(format!("flow_window must be odd and >= 3, got {}", self.flow_window));
        }
        if self.interval_min == 0
            || self.interval_min > self.interval_max
            || !(self.interval_min..=self.interval_max).contains(&self.fallback_interval)
        {
            return bad(format!(
                "need 1 <= interval_min <= fallback_interval <= interval_max, got {} / {} / {}",
                self.interval_min, self.fallback_interval, self.interval_max
            ));
        }
        if self.output_size.0 == 0 || self.output_size.1 == 0 {
            return bad("output_size must be positive".into());
        }
        if !(self.eigen_threshold >= 0.0 && self.eigen_threshold.is_finite()) {
            return bad("eigen_threshold must be finite and >= 0".into());
        }
        if self.flow_iterations == 0 {
            return bad("flow_iterations must be >= 1".into());
        }
        if !(self.inverse_gain > 0.0 && self.inverse_gain.is_finite()) {
            return bad("inverse_gain must be positive".into());
        }
        self.silhouette
            .validate()
            .map_err(|e| MotionError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn invariants_enforced() {
        let cases = [
            PipelineConfig { beta: 0.0, ..Default::default() },
            PipelineConfig { beta: 1.0, ..Default::default() },
            PipelineConfig { flow_window: 14, ..Default::default() },
            PipelineConfig { flow_window: 1, ..Default::default() },
            PipelineConfig { flow_frame_distance: 0, ..Default::default() },
            PipelineConfig { fallback_interval: 1, ..Default::default() },
            PipelineConfig { interval_min: 31, ..Default::default() },
        ];
        for cfg in cases {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
