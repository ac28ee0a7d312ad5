//! Stationary spectral gating.
//!
//! The clip's own STFT serves as the noise fingerprint. Per frequency, the dB magnitude
//! over all frames gives a mean and standard deviation; these profiles are median-filtered
//! across neighbouring bins so narrowband tones do not raise their own threshold. Cells
//! above `mean + n_std * std` pass, the binary mask is box-smoothed over time and
//! frequency, and the masked STFT is resynthesised by weighted overlap-add.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::{Error, Result};

/// Width in bins of the median filter applied to the noise profile.
pub const NOISE_PROFILE_MEDIAN_BINS: usize = 63;
const DB_FLOOR: f64 = -200.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub frame_size: usize,
    pub hop_size: usize,
    pub n_std: f64,
    pub smoothing_bins: usize,
    pub smoothing_frames: usize,
}

impl Default for GateParams {
    fn default() -> Self {
        Self {
            frame_size: 2048,
            hop_size: 512,
            n_std: 1.5,
            smoothing_bins: 3,
            smoothing_frames: 5,
        }
    }
}

impl GateParams {
    pub fn validate(&self) -> Result<()> {
        if !self.frame_size.is_power_of_two() || self.frame_size < 4 {
            return Err(Error::InvalidParameter(format!(
                "gate frame size must be a power of two >= 4, got {}",
                self.frame_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.frame_size {
            return Err(Error::InvalidParameter(format!(
                "gate hop must be in 1..={}, got {}",
                self.frame_size, self.hop_size
            )));
        }
        if !(self.n_std > 0.0 && self.n_std.is_finite()) {
            return Err(Error::InvalidParameter(format!("n_std must be positive, got {}", self.n_std)));
        }
        Ok(())
    }
}

fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn median_filter(profile: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut scratch = Vec::with_capacity(width);
    (0..profile.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(profile.len());
            scratch.clear();
            scratch.extend_from_slice(&profile[lo..hi]);
            median(&mut scratch)
        })
        .collect()
}

/// Centred box average of a `frames x bins` mask, normalised by in-bounds cell count.
fn smooth_mask(mask: &[Vec<f64>], bins: usize, frames: usize) -> Vec<Vec<f64>> {
    let (hb, hf) = (bins / 2, frames / 2);
    let n_frames = mask.len();
    let n_bins = mask.first().map_or(0, Vec::len);
    (0..n_frames)
        .map(|t| {
            let (t0, t1) = (t.saturating_sub(hf), (t + hf + 1).min(n_frames));
            (0..n_bins)
                .map(|k| {
                    let (k0, k1) = (k.saturating_sub(hb), (k + hb + 1).min(n_bins));
                    let sum: f64 = mask[t0..t1].iter().map(|row| row[k0..k1].iter().sum::<f64>()).sum();
                    sum / ((t1 - t0) * (k1 - k0)) as f64
                })
                .collect()
        })
        .collect()
}

/// Removes stationary noise from `clip`; the output has the same length and rate.
pub fn spectral_gate(clip: &AudioClip, params: &GateParams) -> Result<AudioClip> {
    params.validate()?;
    let n = params.frame_size;
    let hop = params.hop_size;
    if clip.len() < n {
        return Err(Error::TooShort {
            len: clip.len(),
            frame: n,
        });
    }

    // Zero padding of one frame on each side (plus a hop of slack) puts every real
    // sample under the full set of overlapping windows.
    let offset = n;
    let mut padded = vec![0.0; clip.len() + 2 * n + hop];
    padded[offset..offset + clip.len()].copy_from_slice(clip.samples());
    let n_frames = (padded.len() - n) / hop + 1;
    let n_bins = n / 2 + 1;

    let window = periodic_hann(n);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = t * hop;
        let mut buf: Vec<Complex64> = padded[start..start + n]
            .iter()
            .zip(&window)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .collect();
        fft.process(&mut buf);
        spectra.push(buf);
    }

    let to_db = |c: &Complex64| {
        let m = c.norm();
        if m > 0.0 {
            (20.0 * m.log10()).max(DB_FLOOR)
        } else {
            DB_FLOOR
        }
    };
    let db: Vec<Vec<f64>> = spectra
        .iter()
        .map(|frame| frame[..n_bins].iter().map(to_db).collect())
        .collect();

    let frames = n_frames as f64;
    let mean: Vec<f64> = (0..n_bins)
        .map(|k| db.iter().map(|row| row[k]).sum::<f64>() / frames)
        .collect();
    let std: Vec<f64> = (0..n_bins)
        .map(|k| {
            let var = db.iter().map(|row| (row[k] - mean[k]).powi(2)).sum::<f64>() / frames;
            var.sqrt()
        })
        .collect();
    let mean = median_filter(&mean, NOISE_PROFILE_MEDIAN_BINS);
    let std = median_filter(&std, NOISE_PROFILE_MEDIAN_BINS);
    let threshold: Vec<f64> = mean.iter().zip(&std).map(|(m, s)| m + params.n_std * s).collect();

    let mask: Vec<Vec<f64>> = db
        .iter()
        .map(|row| {
            row.iter()
                .zip(&threshold)
                .map(|(v, th)| if v > th { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let mask = smooth_mask(&mask, params.smoothing_bins.max(1), params.smoothing_frames.max(1));

    let mut out = vec![0.0; padded.len()];
    let mut norm = vec![0.0; padded.len()];
    for (t, (mut spectrum, gains)) in spectra.into_iter().zip(&mask).enumerate() {
        for k in 0..n_bins {
            spectrum[k] *= gains[k];
            if k != 0 && k != n / 2 {
                spectrum[n - k] *= gains[k];
            }
        }
        ifft.process(&mut spectrum);
        let start = t * hop;
        for i in 0..n {
            out[start + i] += spectrum[i].re / n as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    let samples = (offset..offset + clip.len())
        .map(|i| if norm[i] > 1e-12 { out[i] / norm[i] } else { 0.0 })
        .collect();
    clip.with_samples(samples)
}
