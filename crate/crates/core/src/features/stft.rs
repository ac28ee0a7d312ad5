use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::audio::{mirror as reflect, AudioClip};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann.
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            WindowKind::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    pub n_fft: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Reflect-pad `n_fft / 2` samples on both ends so frame `t` is centred on `t * hop`.
    pub center: bool,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
            window: WindowKind::Hann,
            center: true,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_fft must be a power of two >= 2, got {}",
                self.n_fft
            )));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::InvalidParameter(format!(
                "hop must be in 1..={}, got {}",
                self.n_fft, self.hop
            )));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn n_frames(&self, len: usize) -> usize {
        if self.center {
            len / self.hop + 1
        } else if len < self.n_fft {
            0
        } else {
            (len - self.n_fft) / self.hop + 1
        }
    }

    /// Centre frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize, sample_rate: f64) -> f64 {
        k as f64 * sample_rate / self.n_fft as f64
    }
}

/// Power spectrogram `|FFT|^2`, `(n_fft/2 + 1) x n_frames`.
pub fn stft_power(clip: &AudioClip, params: &StftParams) -> Result<Matrix> {
    params.validate()?;
    if clip.is_empty() {
        return Err(Error::InvalidClip("cannot take the STFT of an empty clip".into()));
    }
    let n = params.n_fft;
    let x = clip.samples();
    let n_frames = params.n_frames(x.len());
    let n_bins = params.n_bins();
    let window = params.window.coefficients(n);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    let pad = if params.center { (n / 2) as isize } else { 0 };
    let mut out = Matrix::zeros(n_bins, n_frames);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..n_frames {
        let start = (t * params.hop) as isize - pad;
        for (i, b) in buf.iter_mut().enumerate() {
            let idx = start + i as isize;
            let v = if idx >= 0 && (idx as usize) < x.len() {
                x[idx as usize]
            } else {
                x[reflect(idx, x.len())]
            };
            *b = Complex64::new(v * window[i], 0.0);
        }
        fft.process(&mut buf);
        for k in 0..n_bins {
            out.set(k, t, buf[k].norm_sqr());
        }
    }
    Ok(out)
}
