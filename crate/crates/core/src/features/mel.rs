use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelParams {
    pub n_mels: usize,
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for MelParams {
    fn default() -> Self {
        Self {
            n_mels: 128,
            f_min: 0.0,
            f_max: 22_050.0,
        }
    }
}

impl MelParams {
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if self.n_mels == 0 {
            return Err(Error::InvalidParameter("n_mels must be positive".into()));
        }
        if !(0.0 <= self.f_min && self.f_min < self.f_max && self.f_max <= sample_rate / 2.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= f_min < f_max <= {}, got {}..{}",
                sample_rate / 2.0,
                self.f_min,
                self.f_max
            )));
        }
        Ok(())
    }

    /// `n_mels + 2` band edges, uniformly spaced in mel, in Hz.
    pub fn band_edges(&self) -> Vec<f64> {
        let (lo, hi) = (hz_to_mel(self.f_min), hz_to_mel(self.f_max));
        let step = (hi - lo) / (self.n_mels + 1) as f64;
        (0..self.n_mels + 2)
            .map(|i| mel_to_hz(lo + step * i as f64))
            .collect()
    }

    pub fn center_frequencies(&self) -> Vec<f64> {
        let edges = self.band_edges();
        edges[1..=self.n_mels].to_vec()
    }
}

/// Triangular mel filterbank, `n_mels x (n_fft/2 + 1)`.
///
/// Each triangle is scaled by `2 / (upper - lower)` so every filter has the same area.
pub fn mel_filterbank(mel: &MelParams, sample_rate: f64, n_fft: usize) -> Result<Matrix> {
    mel.validate(sample_rate)?;
    let n_bins = n_fft / 2 + 1;
    let edges = mel.band_edges();
    let mut fb = Matrix::zeros(mel.n_mels, n_bins);
    for m in 0..mel.n_mels {
        let (lower, center, upper) = (edges[m], edges[m + 1], edges[m + 2]);
        let scale = 2.0 / (upper - lower);
        let row = fb.row_mut(m);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * sample_rate / n_fft as f64;
            let rise = (f - lower) / (center - lower);
            let fall = (upper - f) / (upper - center);
            *w = rise.min(fall).max(0.0) * scale;
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::FilterbankDesign(format!(
                "mel filter {m} ({lower:.1}-{upper:.1} Hz) covers no FFT bin; reduce n_mels or raise n_fft"
            )));
        }
    }
    Ok(fb)
}
