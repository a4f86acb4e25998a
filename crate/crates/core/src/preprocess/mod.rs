//! Frame denoising and binary silhouette extraction: Gaussian smoothing,
//! sample-based background subtraction with shadow suppression, and a
//! morphological opening.

mod blur;
mod knn;
mod mask;
mod morphology;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use blur::{gaussian_blur, gaussian_blur_values, gaussian_kernel};
pub use knn::{KnnBgModel, KnnParams};
pub use mask::ForegroundMask;
pub use morphology::{dilate, erode, open};

use crate::motion::PipelineConfig;
use crate::videoio::{Frame, FrameStream, VideoError};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("frame is {got:?}, model expects {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

/// Settings for the silhouette stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SilhouetteParams {
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub knn: KnnParams,
    pub morph_radius: usize,
}

impl Default for SilhouetteParams {
    fn default() -> Self {
        SilhouetteParams {
            blur_kernel: 5,
            blur_sigma: 1.0,
            knn: KnnParams::default(),
            morph_radius: 1,
        }
    }
}

impl SilhouetteParams {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        gaussian_kernel(self.blur_kernel, self.blur_sigma)?;
        self.knn.validate()?;
        if self.morph_radius == 0 {
            return Err(PreprocessError::Parameter("morph_radius must be >= 1".into()));
        }
        Ok(())
    }
}

/// Accumulated wall time per silhouette stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SilhouetteTimings {
    pub blur: Duration,
    pub background: Duration,
    pub morphology: Duration,
}

/// Streaming blur -> background subtraction -> opening.
#[derive(Debug, Clone)]
pub struct SilhouetteExtractor {
    params: SilhouetteParams,
    model: KnnBgModel,
}

impl SilhouetteExtractor {
    pub fn new(params: SilhouetteParams, width: usize, height: usize, seed: u64) -> Result<Self, PreprocessError> {
        params.validate()?;
        Ok(SilhouetteExtractor {
            params,
            model: KnnBgModel::new(params.knn, width, height, seed)?,
        })
    }

    pub fn process(&mut self, frame: &Frame) -> Result<ForegroundMask, PreprocessError> {
        let blurred = gaussian_blur(frame, self.params.blur_kernel, self.params.blur_sigma)?;
        let raw = self.model.apply(&blurred)?;
        open(&raw, self.params.morph_radius)
    }

    pub fn process_timed(
        &mut self,
        frame: &Frame,
        timings: &mut SilhouetteTimings,
    ) -> Result<ForegroundMask, PreprocessError> {
        let t0 = Instant::now();
        let blurred = gaussian_blur(frame, self.params.blur_kernel, self.params.blur_sigma)?;
        let t1 = Instant::now();
        let raw = self.model.apply(&blurred)?;
        let t2 = Instant::now();
        let mask = open(&raw, self.params.morph_radius)?;
        let t3 = Instant::now();
        timings.blur += t1 - t0;
        timings.background += t2 - t1;
        timings.morphology += t3 - t2;
        Ok(mask)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SilhouetteError {
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

impl From<SilhouetteError> for crate::Error {
    fn from(e: SilhouetteError) -> Self {
        match e {
            SilhouetteError::Video(e) => e.into(),
            SilhouetteError::Preprocess(e) => e.into(),
        }
    }
}

/// Runs the silhouette stage over a whole stream.
pub fn silhouette_pipeline(stream: FrameStream, cfg: &PipelineConfig) -> Result<Vec<ForegroundMask>, SilhouetteError> {
    let (w, h) = stream.dimensions();
    let mut extractor = SilhouetteExtractor::new(cfg.silhouette, w, h, cfg.rng_seed)?;
    let mut masks = Vec::new();
    for frame in stream {
        masks.push(extractor.process(&frame?)?);
    }
    Ok(masks)
}
