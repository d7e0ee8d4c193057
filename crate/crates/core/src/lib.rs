//! Seizure prediction from scalp EEG with a multi-scale dilated 3D CNN.
//!
//! The crate is organised as the pipeline runs:
//!
//! - [`ingest`]: EDF reading/writing, CHB-MIT summary parsing, synthetic EEG.
//! - [`segment`]: leading-seizure selection, preictal/interictal labeling,
//!   moving-window sampling and STFT featurization into `(channel, frequency, time)` tensors.
//! - [`net`]: tensor kernels (dilated conv3d, ReLU, max pooling, GAP, dense+softmax)
//!   with exact backward passes, and the four-branch model built from them.
//! - [`train`]: class balancing, Adam, per-fold training and leave-one-seizure-out
//!   cross-validation with ACC/TPR/TNR metrics.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the `parallel`
//! feature is enabled and plain iteration otherwise.

pub mod error;
pub mod ingest;
pub mod net;
pub mod par;
pub mod segment;
pub mod train;

pub use error::{Error, Result};
