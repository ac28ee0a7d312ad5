//! Time-domain audio modifiers and the filtration-mode switch that selects between them.

mod crop;
mod filter;
mod gate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use crop::{crop_audio, max_time_len, CropParams, QuotientBasis};
pub use filter::{
    apply_iir, design_butterworth, Biquad, BiquadCascade, FilterKind, FilterSpec,
    DEFAULT_ORDER, HIGH_CUTOFF_HZ, LOW_CUTOFF_HZ,
};
pub use gate::{spectral_gate, GateParams, NOISE_PROFILE_MEDIAN_BINS};

use crate::audio::AudioClip;
use crate::{Error, Result};

/// The eight preprocessing variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FiltrationMode {
    #[serde(rename = "No Filter")]
    NoFilter,
    #[serde(rename = "Noise Removal")]
    NoiseRemoval,
    #[serde(rename = "PCEN")]
    Pcen,
    #[serde(rename = "Audio Crop")]
    AudioCrop,
    #[serde(rename = "Low Pass Filter")]
    LowPass,
    #[serde(rename = "High Pass Filter")]
    HighPass,
    #[serde(rename = "Band Pass Filter")]
    BandPass,
    #[serde(rename = "Band Stop Filter")]
    BandStop,
}

impl FiltrationMode {
    pub const ALL: [FiltrationMode; 8] = [
        FiltrationMode::NoFilter,
        FiltrationMode::NoiseRemoval,
        FiltrationMode::Pcen,
        FiltrationMode::AudioCrop,
        FiltrationMode::LowPass,
        FiltrationMode::HighPass,
        FiltrationMode::BandPass,
        FiltrationMode::BandStop,
    ];

    /// Report column name.
    pub fn name(self) -> &'static str {
        match self {
            FiltrationMode::NoFilter => "No Filter",
            FiltrationMode::NoiseRemoval => "Noise Removal",
            FiltrationMode::Pcen => "PCEN",
            FiltrationMode::AudioCrop => "Audio Crop",
            FiltrationMode::LowPass => "Low Pass Filter",
            FiltrationMode::HighPass => "High Pass Filter",
            FiltrationMode::BandPass => "Band Pass Filter",
            FiltrationMode::BandStop => "Band Stop Filter",
        }
    }

    pub fn filter_kind(self) -> Option<FilterKind> {
        match self {
            FiltrationMode::LowPass => Some(FilterKind::LowPass),
            FiltrationMode::HighPass => Some(FilterKind::HighPass),
            FiltrationMode::BandPass => Some(FilterKind::BandPass),
            FiltrationMode::BandStop => Some(FilterKind::BandStop),
            _ => None,
        }
    }
}

impl fmt::Display for FiltrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl FromStr for FiltrationMode {
    type Err = Error;

    /// Accepts the report names case-insensitively, ignoring spaces, dashes and
    /// underscores ("No Filter", "no-filter", "band_stop_filter"). "Spectral Gating"
    /// is an alias for noise removal.
    fn from_str(s: &str) -> Result<Self> {
        let key = squash(s);
        if key == "spectralgating" {
            return Ok(FiltrationMode::NoiseRemoval);
        }
        FiltrationMode::ALL
            .into_iter()
            .find(|m| squash(m.name()) == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown filtration mode '{s}'")))
    }
}

/// Parameters shared by the modifiers; the crop target is filled in per corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifierContext {
    pub crop: CropParams,
    pub gate: GateParams,
    pub filter_order: usize,
}

impl Default for ModifierContext {
    fn default() -> Self {
        Self {
            crop: CropParams::new(5 * crate::CANONICAL_SAMPLE_RATE as usize),
            gate: GateParams::default(),
            filter_order: DEFAULT_ORDER,
        }
    }
}

/// Applies the time-domain part of `mode` to `clip`.
///
/// `NoFilter` and `Pcen` leave the waveform untouched; PCEN only swaps the spectrogram
/// frontend.
pub fn apply_modifier(clip: &AudioClip, mode: FiltrationMode, ctx: &ModifierContext) -> Result<AudioClip> {
    match mode {
        FiltrationMode::NoFilter | FiltrationMode::Pcen => Ok(clip.clone()),
        FiltrationMode::NoiseRemoval => spectral_gate(clip, &ctx.gate),
        FiltrationMode::AudioCrop => crop_audio(clip, &ctx.crop),
        FiltrationMode::LowPass
        | FiltrationMode::HighPass
        | FiltrationMode::BandPass
        | FiltrationMode::BandStop => {
            let kind = mode.filter_kind().expect("filter modes have a kind");
            let spec = FilterSpec::standard(kind, ctx.filter_order);
            let cascade = design_butterworth(&spec, clip.sample_rate() as f64)?;
            apply_iir(clip, &cascade)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise_clip() -> AudioClip {
        // Deterministic broadband signal.
        let mut state = 12345u32;
        let s = (0..8192)
            .map(|_| {
                state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
                (state >> 8) as f64 / (1u32 << 24) as f64 - 0.5
            })
            .collect();
        AudioClip::new(s, 44_100).unwrap()
    }

    #[test]
    fn mode_names_round_trip() {
        for mode in FiltrationMode::ALL {
            assert_eq!(mode.name().parse::<FiltrationMode>().unwrap(), mode);
            let json = serde_json::to_string(&mode).unwrap();
            assert_eq!(json, format!("\"{}\"", mode.name()));
        }
        assert_eq!("band-stop-filter".parse::<FiltrationMode>().unwrap(), FiltrationMode::BandStop);
        assert_eq!("Spectral Gating".parse::<FiltrationMode>().unwrap(), FiltrationMode::NoiseRemoval);
        assert!("wah".parse::<FiltrationMode>().is_err());
    }

    #[test]
    fn identity_modes() {
        let clip = noise_clip();
        let ctx = ModifierContext::default();
        assert_eq!(apply_modifier(&clip, FiltrationMode::NoFilter, &ctx).unwrap(), clip);
        assert_eq!(apply_modifier(&clip, FiltrationMode::Pcen, &ctx).unwrap(), clip);
    }

    #[test]
    fn filter_modes_use_standard_cutoffs() {
        let clip = noise_clip();
        let ctx = ModifierContext::default();
        for mode in [FiltrationMode::LowPass, FiltrationMode::HighPass, FiltrationMode::BandPass, FiltrationMode::BandStop] {
            let spec = FilterSpec::standard(mode.filter_kind().unwrap(), DEFAULT_ORDER);
            let expected = apply_iir(&clip, &design_butterworth(&spec, 44_100.0).unwrap()).unwrap();
            assert_eq!(apply_modifier(&clip, mode, &ctx).unwrap(), expected);
        }
        let bp = FilterSpec::standard(FilterKind::BandPass, 4);
        assert_eq!(bp.cutoffs(), vec![512.0, 2048.0]);
        assert_eq!(FilterSpec::standard(FilterKind::LowPass, 4).cutoffs(), vec![512.0]);
    }

    #[test]
    fn crop_mode_uses_context_length() {
        let clip = AudioClip::new(vec![0.0, 0.5, 0.0, -0.5], 44_100).unwrap();
        let ctx = ModifierContext {
            crop: CropParams::new(7),
            ..ModifierContext::default()
        };
        let out = apply_modifier(&clip, FiltrationMode::AudioCrop, &ctx).unwrap();
        assert_eq!(out.len(), 7);
    }
}
