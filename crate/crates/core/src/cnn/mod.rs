//! A small convolutional network engine: tensors, layer kernels with
//! backpropagation, Glorot initialization, SGD with momentum, and the
//! AlexNet-style classifier for representation images.
//!
//! Training and inference run in `f32`; every kernel is generic over
//! [`Scalar`] so gradients can be checked in `f64`.

mod checkpoint;
mod init;
mod layers;
mod metrics;
mod model;
mod optim;
mod tensor;
mod train;

use std::path::PathBuf;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use init::{glorot_normal_init, glorot_std, init_weights, InitScheme};
pub use layers::{
    conv2d_backward, conv2d_forward, dense_backward, dense_forward, maxpool_backward, maxpool_forward, scce_loss,
    softmax, softmax_cross_entropy, tanh_backward, tanh_forward, window_output, ConvGrads, DenseGrads, PoolOutput,
    PROBABILITY_FLOOR,
};
pub use metrics::Metrics;
pub use model::{ConvBlock, LayerShape, ModelConfig, Network};
pub use optim::sgd_step;
pub use tensor::{Scalar, Tensor};
pub use train::{
    evaluate, images_to_tensor, predict, predict_proba, train, write_training_log, EpochLog, TrainConfig,
    TrainOutcome,
};

use crate::ErrorKind;

#[derive(Debug, thiserror::Error)]
pub enum CnnError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid model or training configuration: {0}")]
    Config(String),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("{path}: invalid checkpoint: {reason}")]
    Checkpoint { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CnnError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            CnnError::Config(_) => ErrorKind::Usage,
            CnnError::Shape(_)
            | CnnError::Label { .. }
            | CnnError::EmptyInput(_)
            | CnnError::Checkpoint { .. }
            | CnnError::Read { .. } => ErrorKind::Data,
            CnnError::Divergence { .. } | CnnError::Write { .. } => ErrorKind::Runtime,
        }
    }
}
