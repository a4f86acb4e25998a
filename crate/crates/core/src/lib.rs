//! Motion-weighted image representation of video, and a compact convolutional
//! classifier for it.
//!
//! The pipeline turns a luma video into a binary silhouette sequence
//! ([`preprocess`]), samples it at a rate driven by dense optical flow and
//! folds the samples into one recency-weighted image ([`motion`]), then
//! classifies that image with an AlexNet-style network ([`cnn`]).
//! [`dataset`] handles layouts, splits and augmentation; [`harness`] holds the
//! parameter sweep, the throughput benchmark and report writers.

pub mod cnn;
pub mod dataset;
mod error;
pub mod harness;
pub mod motion;
pub mod preprocess;
pub mod videoio;

pub use error::{Error, ErrorKind, Result};
