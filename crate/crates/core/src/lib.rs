//! Two-level environmental sound classification.
//!
//! The crate is organised the way audio flows through it:
//!
//! * [`audio`] decodes RIFF/WAVE files into mono [`audio::AudioClip`]s and resamples them.
//! * [`modifiers`] holds the time-domain modifiers: Audio Crop, spectral gating and the
//!   Butterworth filter bank.
//! * [`features`] turns clips into log-mel or PCEN spectrograms and pools them into
//!   fixed-length vectors.
//! * [`dataset`] parses ESC-50 metadata, applies the seven-group taxonomy and builds
//!   seeded train/validation/test splits.
//! * [`model`] is a small from-scratch MLP head trained with plain SGD.
//! * [`pipeline`] wires the above into the coarse-to-fine classifier and its reports.

pub mod audio;
pub mod dataset;
pub mod error;
pub mod features;
pub mod model;
pub mod modifiers;
pub mod pipeline;

pub use error::{Error, Result};

/// Sample rate every clip is converted to before feature extraction.
pub const CANONICAL_SAMPLE_RATE: u32 = 44_100;
