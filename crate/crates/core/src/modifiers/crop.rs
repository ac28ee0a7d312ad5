//! Audio Crop: drop silent samples, then repeat what is left up to the corpus maximum length.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::{Error, Result};

/// Which length the tiling quotient is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuotientBasis {
    /// Length of the silence-free sequence, so the output is exactly `max_time` long.
    #[default]
    Kept,
    /// Length of the original clip. The output falls short of `max_time` whenever
    /// silence was removed.
    Original,
}

impl std::str::FromStr for QuotientBasis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kept" => Ok(Self::Kept),
            "original" => Ok(Self::Original),
            _ => Err(Error::InvalidParameter(format!(
                "quotient basis must be 'kept' or 'original', got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CropParams {
    /// Samples with `|x| <= silence_threshold` count as silence. Zero keeps exact zeros out.
    pub silence_threshold: f64,
    /// Target length in samples, normally the output of [`max_time_len`].
    pub max_time: usize,
    #[serde(default)]
    pub quotient_basis: QuotientBasis,
}

impl CropParams {
    pub fn new(max_time: usize) -> Self {
        Self {
            silence_threshold: 0.0,
            max_time,
            quotient_basis: QuotientBasis::Kept,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.silence_threshold >= 0.0 && self.silence_threshold.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "silence threshold must be finite and non-negative, got {}",
                self.silence_threshold
            )));
        }
        if self.max_time == 0 {
            return Err(Error::InvalidParameter("max_time must be at least 1".into()));
        }
        Ok(())
    }
}

/// Length of the longest clip in a corpus.
pub fn max_time_len(durations: &[usize]) -> Result<usize> {
    durations.iter().copied().max().ok_or(Error::EmptyDataset)
}

/// Removes silent samples and tiles the remainder.
///
/// With the default [`QuotientBasis::Kept`], the kept sequence `K` is repeated
/// `max_time / |K|` whole times and then `max_time % |K|` samples are appended from the
/// start of `K`, so `out[i] == K[i % |K|]` and `out.len() == max_time`.
pub fn crop_audio(clip: &AudioClip, params: &CropParams) -> Result<AudioClip> {
    params.validate()?;
    let kept: Vec<f64> = clip
        .samples()
        .iter()
        .copied()
        .filter(|x| x.abs() > params.silence_threshold)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoSignal {
            threshold: params.silence_threshold,
        });
    }

    let basis = match params.quotient_basis {
        QuotientBasis::Kept => kept.len(),
        QuotientBasis::Original => clip.len(),
    };
    let q = params.max_time / basis;
    let r = params.max_time % basis;

    let mut out = Vec::with_capacity(q.max(1) * kept.len() + r);
    match params.quotient_basis {
        QuotientBasis::Kept => {
            for _ in 0..q {
                out.extend_from_slice(&kept);
            }
        }
        // The literal procedure always keeps one full copy, even when q == 0.
        QuotientBasis::Original => {
            for _ in 0..q.max(1) {
                out.extend_from_slice(&kept);
            }
        }
    }
    // Remainder samples come from the front of the growing output; `out[j]` is
    // `kept[j % |K|]` either way.
    for j in 0..r {
        out.push(kept[j % kept.len()]);
    }
    clip.with_samples(out)
}
