//! Stereo sound event localization and detection (SELD) data pipeline.
//!
//! The crate turns two-channel recordings and DCASE-style event metadata into
//! model-ready tensors and scores prediction streams:
//!
//! * [`wave_io`] reads WAV audio and metadata CSVs and writes NPY tensors.
//! * [`dsp`] holds the STFT and mel filterbank shared by every feature.
//! * [`features`] computes mid-side log-mels, the mid-side intensity vector and
//!   magnitude-squared coherence, and stacks them into MSI / MSIC tensors.
//! * [`augment`] implements channel swapping, FilterAugment, frequency shifting
//!   and inter-channel-aware time-frequency masking.
//! * [`labels`] normalizes source distances and encodes multi-ACCDDOA targets.
//! * [`metrics`] implements the location-dependent F-score, LE_CD, RDE_CD and
//!   the aggregated SELD error.

pub mod augment;
pub mod dsp;
mod error;
pub mod features;
pub mod labels;
pub mod metrics;
pub mod tensor;
pub mod wave_io;

pub use error::{Error, Result};
pub use tensor::Tensor;
