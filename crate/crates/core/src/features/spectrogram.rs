use serde::{Deserialize, Serialize};

use super::{mel_filterbank, stft_power, Matrix, MelParams, StftParams};
use crate::audio::AudioClip;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpectrogramUnit {
    #[serde(rename = "dB")]
    Decibel,
    #[serde(rename = "PCEN")]
    Pcen,
}

/// Reference-relative decibel conversion settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbParams {
    pub top_db: f64,
    pub amin: f64,
}

impl Default for DbParams {
    fn default() -> Self {
        Self {
            top_db: 80.0,
            amin: 1e-10,
        }
    }
}

/// Per-channel energy normalisation constants.
///
/// `s` drives the temporal smoother, `alpha` the adaptive gain control, and
/// `delta`/`r` the root compression.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcenParams {
    pub s: f64,
    pub alpha: f64,
    pub delta: f64,
    pub r: f64,
    pub eps: f64,
}

impl Default for PcenParams {
    fn default() -> Self {
        Self {
            s: 0.025,
            alpha: 0.98,
            delta: 2.0,
            r: 0.5,
            eps: 1e-6,
        }
    }
}

impl PcenParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.s > 0.0
            && self.s <= 1.0
            && (0.0..=1.0).contains(&self.alpha)
            && self.delta >= 0.0
            && self.r > 0.0
            && self.r <= 1.0
            && self.eps > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("PCEN parameters out of range: {self:?}")))
        }
    }
}

/// `10 log10(max(x, amin))` relative to the matrix maximum, floored at `-top_db`.
///
/// A matrix with nothing above `amin` maps entirely to `-top_db`.
pub fn power_to_db(power: &Matrix, params: &DbParams) -> Matrix {
    let peak = power.max();
    if !(peak > params.amin) {
        return power.map(|_| -params.top_db);
    }
    let reference = 10.0 * peak.log10();
    power.map(|x| (10.0 * x.max(params.amin).log10() - reference).max(-params.top_db))
}

/// PCEN over a mel power matrix (`n_mels x n_frames`), smoothing along each row.
///
/// `M[t] = (1 - s) M[t-1] + s E[t]` with `M[0] = E[0]`, then
/// `(E / (eps + M)^alpha + delta)^r - delta^r`.
pub fn pcen(power: &Matrix, params: &PcenParams) -> Result<Matrix> {
    params.validate()?;
    let offset = params.delta.powf(params.r);
    let mut out = Matrix::zeros(power.rows(), power.cols());
    for m in 0..power.rows() {
        let energy = power.row(m);
        let dst = out.row_mut(m);
        let mut smooth = energy.first().copied().unwrap_or(0.0);
        for (t, (&e, d)) in energy.iter().zip(dst.iter_mut()).enumerate() {
            if t > 0 {
                smooth = (1.0 - params.s) * smooth + params.s * e;
            }
            let gain = (params.eps + smooth).powf(params.alpha);
            *d = (e / gain + params.delta).powf(params.r) - offset;
        }
    }
    Ok(out)
}

/// Everything needed to turn a clip into a spectrogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub stft: StftParams,
    pub mel: MelParams,
    pub db: DbParams,
    pub pcen: PcenParams,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            stft: StftParams::default(),
            mel: MelParams::default(),
            db: DbParams::default(),
            pcen: PcenParams::default(),
        }
    }
}

/// A mel spectrogram in dB or PCEN units, with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramMatrix {
    pub values: Matrix,
    pub unit: SpectrogramUnit,
    pub stft: StftParams,
    pub mel: MelParams,
}

impl SpectrogramMatrix {
    pub fn n_mels(&self) -> usize {
        self.values.rows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols()
    }
}

/// Mel power matrix, `n_mels x n_frames`.
pub fn mel_power(clip: &AudioClip, config: &FeatureConfig) -> Result<Matrix> {
    let power = stft_power(clip, &config.stft)?;
    let fb = mel_filterbank(&config.mel, clip.sample_rate() as f64, config.stft.n_fft)?;
    Ok(fb.matmul(&power))
}

/// Log-mel or PCEN spectrogram of `clip`.
pub fn extract_spectrogram(
    clip: &AudioClip,
    config: &FeatureConfig,
    unit: SpectrogramUnit,
) -> Result<SpectrogramMatrix> {
    let mel = mel_power(clip, config)?;
    let values = match unit {
        SpectrogramUnit::Decibel => power_to_db(&mel, &config.db),
        SpectrogramUnit::Pcen => pcen(&mel, &config.pcen)?,
    };
    Ok(SpectrogramMatrix {
        values,
        unit,
        stft: config.stft,
        mel: config.mel,
    })
}
