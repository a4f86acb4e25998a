use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ForegroundMask, PreprocessError};
use crate::videoio::Frame;

/// Parameters of the per-pixel sample-based background model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    /// Samples kept per pixel (N).
    pub samples: usize,
    /// Close samples needed to call a pixel background.
    pub k: usize,
    /// Intensity distance counted as close.
    pub radius: u8,
    /// Per-frame chance that a pixel writes its value into a random slot.
    pub update_probability: f64,
    /// Luminance ratio interval (current / model mean) treated as shadow.
    pub shadow_low: f64,
    pub shadow_high: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams {
            samples: 20,
            k: 3,
            radius: 20,
            update_probability: 0.1,
            shadow_low: 0.5,
            shadow_high: 0.95,
        }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        let bad = |msg: String| Err(PreprocessError::Parameter(msg));
        if self.samples == 0 || self.k == 0 || self.k > self.samples {
            return bad(format!("need 1 <= k <= N, got k={} N={}", self.k, self.samples));
        }
        if self.radius == 0 {
            return bad("radius must be > 0".into());
        }
        if !(self.update_probability > 0.0 && self.update_probability <= 1.0) {
            return bad(format!("update probability {} outside (0, 1]", self.update_probability));
        }
        if !(0.0 <= self.shadow_low && self.shadow_low < self.shadow_high && self.shadow_high <= 1.0) {
            return bad(format!(
                "shadow band ({}, {}) must satisfy 0 <= low < high <= 1",
                self.shadow_low, self.shadow_high
            ));
        }
        Ok(())
    }
}

/// Per-pixel sample buffer background model.
///
/// A pixel is background when at least `k` of its `N` stored samples lie
/// within `radius` of the current value. Pixels failing that test but whose
/// value, relative to the mean of their samples, falls inside the shadow band
/// are folded into the background. Every pixel then overwrites a uniformly
/// chosen slot with probability `update_probability`. The first frame fills
/// the whole buffer.
#[derive(Debug, Clone)]
pub struct KnnBgModel {
    params: KnnParams,
    width: usize,
    height: usize,
    samples: Vec<u8>,
    rng: ChaCha8Rng,
    initialized: bool,
    frames_seen: usize,
}

impl KnnBgModel {
    pub fn new(params: KnnParams, width: usize, height: usize, seed: u64) -> Result<Self, PreprocessError> {
        params.validate()?;
        Ok(KnnBgModel {
            params,
            width,
            height,
            samples: vec![0; width * height * params.samples],
            rng: ChaCha8Rng::seed_from_u64(seed),
            initialized: false,
            frames_seen: 0,
        })
    }

    pub fn params(&self) -> &KnnParams {
        &self.params
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Mean of each pixel's sample buffer.
    pub fn background_mean(&self) -> Vec<f32> {
        let n = self.params.samples;
        self.samples
            .chunks_exact(n)
            .map(|s| s.iter().map(|&v| v as u32).sum::<u32>() as f32 / n as f32)
            .collect()
    }

    /// Labels `frame` and updates the model.
    pub fn apply(&mut self, frame: &Frame) -> Result<ForegroundMask, PreprocessError> {
        if (frame.width(), frame.height()) != (self.width, self.height) {
            return Err(PreprocessError::DimensionMismatch {
                expected: (self.width, self.height),
                got: (frame.width(), frame.height()),
            });
        }
        let n = self.params.samples;
        if !self.initialized {
            for (slot, &p) in self.samples.chunks_exact_mut(n).zip(frame.pixels()) {
                slot.fill(p);
            }
            self.initialized = true;
        }
        let radius = self.params.radius as i16;
        let k = self.params.k;
        let (lo, hi) = (self.params.shadow_low as f32, self.params.shadow_high as f32);
        // compare against a 32-bit threshold instead of drawing floats
        let threshold = (self.params.update_probability * u32::MAX as f64) as u64;
        let mut bits = vec![0u8; frame.pixels().len()];
        for ((slot, &p), bit) in self.samples.chunks_exact_mut(n).zip(frame.pixels()).zip(bits.iter_mut()) {
            let mut close = 0usize;
            let mut sum = 0u32;
            for &s in slot.iter() {
                close += usize::from((s as i16 - p as i16).abs() <= radius);
                sum += s as u32;
            }
            let foreground = if close >= k {
                false
            } else {
                let mean = sum as f32 / n as f32;
                let ratio = if mean >= 1.0 { p as f32 / mean } else { f32::INFINITY };
                !(lo..=hi).contains(&ratio)
            };
            *bit = u8::from(foreground);
            if (self.rng.next_u32() as u64) < threshold {
                let idx = self.rng.random_range(0..n);
                slot[idx] = p;
            }
        }
        self.frames_seen += 1;
        Ok(ForegroundMask::from_raw(self.width, self.height, bits, frame.index()))
    }
}
