//! Clip -> pooled feature vector, as configured for one filtration mode.

use serde::{Deserialize, Serialize};

use crate::audio::{resample, AudioClip};
use crate::features::{extract_spectrogram, pool_features, FeatureConfig, SpectrogramMatrix, SpectrogramUnit};
use crate::modifiers::{apply_modifier, FiltrationMode, ModifierContext};
use crate::{Result, CANONICAL_SAMPLE_RATE};

/// Everything that turns audio into model input. Stored with features and models so a
/// novel clip goes through exactly the same steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frontend {
    pub mode: FiltrationMode,
    pub sample_rate: u32,
    pub modifiers: ModifierContext,
    pub features: FeatureConfig,
}

impl Frontend {
    pub fn new(mode: FiltrationMode) -> Self {
        Self {
            mode,
            sample_rate: CANONICAL_SAMPLE_RATE,
            modifiers: ModifierContext::default(),
            features: FeatureConfig::default(),
        }
    }

    /// PCEN mode swaps the spectrogram unit; every other mode uses log-mel.
    pub fn unit(&self) -> SpectrogramUnit {
        if self.mode == FiltrationMode::Pcen {
            SpectrogramUnit::Pcen
        } else {
            SpectrogramUnit::Decibel
        }
    }

    /// Length of a pooled feature vector.
    pub fn feature_dim(&self) -> usize {
        2 * self.features.mel.n_mels
    }

    /// Resamples to the frontend rate and applies the time-domain modifier.
    pub fn prepare(&self, clip: &AudioClip) -> Result<AudioClip> {
        let clip = resample(clip, self.sample_rate)?;
        apply_modifier(&clip, self.mode, &self.modifiers)
    }

    pub fn spectrogram(&self, clip: &AudioClip) -> Result<SpectrogramMatrix> {
        let prepared = self.prepare(clip)?;
        extract_spectrogram(&prepared, &self.features, self.unit())
    }

    pub fn features(&self, clip: &AudioClip) -> Result<Vec<f32>> {
        Ok(pool_features(&self.spectrogram(clip)?)?.to_f32())
    }
}
