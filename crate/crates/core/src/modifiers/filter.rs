//! Butterworth filter design as cascaded second-order sections.
//!
//! Design goes through the analog prototype in zero/pole/gain form: Butterworth poles on
//! the unit circle, a low/high/band transform at prewarped edge frequencies, then the
//! bilinear transform. Poles are paired into conjugate biquads and every section is
//! normalised to unit gain at the passband reference frequency.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::{Error, Result};

/// Lower cut-off used by the low-pass, band-pass and band-stop modifiers.
pub const LOW_CUTOFF_HZ: f64 = 512.0;
/// Upper cut-off used by the high-pass, band-pass and band-stop modifiers.
pub const HIGH_CUTOFF_HZ: f64 = 2048.0;
pub const DEFAULT_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterKind {
    LowPass,
    HighPass,
    BandPass,
    BandStop,
}

/// A Butterworth filter request.
///
/// Single-cutoff kinds keep their cutoff in `cutoff_high` and leave `cutoff_low` empty.
/// `order` is the order of the low-pass prototype; band kinds double it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub cutoff_low: Option<f64>,
    pub cutoff_high: f64,
    pub order: usize,
}

impl FilterSpec {
    pub fn low_pass(cutoff: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::LowPass,
            cutoff_low: None,
            cutoff_high: cutoff,
            order,
        }
    }

    pub fn high_pass(cutoff: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::HighPass,
            cutoff_low: None,
            cutoff_high: cutoff,
            order,
        }
    }

    pub fn band_pass(low: f64, high: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::BandPass,
            cutoff_low: Some(low),
            cutoff_high: high,
            order,
        }
    }

    pub fn band_stop(low: f64, high: f64, order: usize) -> Self {
        Self {
            kind: FilterKind::BandStop,
            cutoff_low: Some(low),
            cutoff_high: high,
            order,
        }
    }

    /// The fixed 512 Hz / 2048 Hz filter for each kind.
    pub fn standard(kind: FilterKind, order: usize) -> Self {
        match kind {
            FilterKind::LowPass => Self::low_pass(LOW_CUTOFF_HZ, order),
            FilterKind::HighPass => Self::high_pass(HIGH_CUTOFF_HZ, order),
            FilterKind::BandPass => Self::band_pass(LOW_CUTOFF_HZ, HIGH_CUTOFF_HZ, order),
            FilterKind::BandStop => Self::band_stop(LOW_CUTOFF_HZ, HIGH_CUTOFF_HZ, order),
        }
    }

    /// Cut-off frequencies in ascending order.
    pub fn cutoffs(&self) -> Vec<f64> {
        self.cutoff_low.into_iter().chain([self.cutoff_high]).collect()
    }

    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        let nyquist = sample_rate / 2.0;
        if self.order == 0 || self.order % 2 != 0 {
            return Err(Error::FilterDesign(format!(
                "order must be a positive even integer, got {}",
                self.order
            )));
        }
        let band = matches!(self.kind, FilterKind::BandPass | FilterKind::BandStop);
        match (band, self.cutoff_low) {
            (true, None) => {
                return Err(Error::FilterDesign(format!("{:?} needs two cut-offs", self.kind)))
            }
            (false, Some(_)) => {
                return Err(Error::FilterDesign(format!("{:?} takes one cut-off", self.kind)))
            }
            _ => {}
        }
        for f in self.cutoffs() {
            if !(f > 0.0 && f < nyquist) {
                return Err(Error::FilterDesign(format!(
                    "cut-off {f} Hz outside (0, {nyquist}) Hz"
                )));
            }
        }
        if let Some(low) = self.cutoff_low {
            if low >= self.cutoff_high {
                return Err(Error::FilterDesign(format!(
                    "lower cut-off {low} Hz must be below upper cut-off {} Hz",
                    self.cutoff_high
                )));
            }
        }
        Ok(())
    }
}

/// One second-order section, `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub const IDENTITY: Biquad = Biquad {
        b0: 1.0,
        b1: 0.0,
        b2: 0.0,
        a1: 0.0,
        a2: 0.0,
    };

    /// Poles strictly inside the unit circle (stability triangle).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    pub fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + self.b1 * z_inv + self.b2 * z2) / (1.0 + self.a1 * z_inv + self.a2 * z2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    sections: Vec<Biquad>,
}

impl BiquadCascade {
    pub fn new(sections: Vec<Biquad>) -> Result<Self> {
        if let Some(i) = sections.iter().position(|s| !s.is_stable()) {
            return Err(Error::FilterDesign(format!("section {i} is unstable")));
        }
        Ok(Self { sections })
    }

    pub fn identity() -> Self {
        Self {
            sections: vec![Biquad::IDENTITY],
        }
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Complex response at `freq` Hz.
    pub fn response(&self, freq: f64, sample_rate: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq / sample_rate);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude_db(&self, freq: f64, sample_rate: f64) -> f64 {
        20.0 * self.response(freq, sample_rate).norm().log10()
    }
}

/// Butterworth low-pass prototype poles with positive imaginary part (cut-off 1 rad/s).
fn prototype_upper_poles(order: usize) -> Vec<Complex64> {
    (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1 + order) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .map(|p| if p.im < 0.0 { p.conj() } else { p })
        .collect()
}

fn bilinear(s: Complex64, fs2: f64) -> Complex64 {
    (fs2 + s) / (fs2 - s)
}

fn section_from_roots(zero: Complex64, pole: Complex64) -> Biquad {
    // (1 - z z^-1)(1 - conj(z) z^-1) = 1 - 2 Re(z) z^-1 + |z|^2 z^-2
    Biquad {
        b0: 1.0,
        b1: -2.0 * zero.re,
        b2: zero.norm_sqr(),
        a1: -2.0 * pole.re,
        a2: pole.norm_sqr(),
    }
}

fn section_real_zeros(z1: f64, z2: f64, pole: Complex64) -> Biquad {
    Biquad {
        b0: 1.0,
        b1: -(z1 + z2),
        b2: z1 * z2,
        a1: -2.0 * pole.re,
        a2: pole.norm_sqr(),
    }
}

/// Designs a Butterworth cascade via prewarped bilinear transform.
pub fn design_butterworth(spec: &FilterSpec, sample_rate: f64) -> Result<BiquadCascade> {
    spec.validate(sample_rate)?;
    let fs2 = 2.0 * sample_rate;
    let warp = |f: f64| fs2 * (PI * f / sample_rate).tan();
    let protos = prototype_upper_poles(spec.order);

    let (sections, reference_hz): (Vec<Biquad>, f64) = match spec.kind {
        FilterKind::LowPass => {
            let wc = warp(spec.cutoff_high);
            let s = protos
                .iter()
                .map(|&p| section_real_zeros(-1.0, -1.0, bilinear(p * wc, fs2)))
                .collect();
            (s, 0.0)
        }
        FilterKind::HighPass => {
            let wc = warp(spec.cutoff_high);
            let s = protos
                .iter()
                .map(|&p| section_real_zeros(1.0, 1.0, bilinear(wc / p, fs2)))
                .collect();
            (s, sample_rate / 2.0)
        }
        FilterKind::BandPass | FilterKind::BandStop => {
            let w1 = warp(spec.cutoff_low.expect("validated"));
            let w2 = warp(spec.cutoff_high);
            let bw = w2 - w1;
            let w0_sq = w1 * w2;
            let w0 = w0_sq.sqrt();
            let band_pass = spec.kind == FilterKind::BandPass;
            let mut sections = Vec::with_capacity(spec.order);
            for &p in &protos {
                // Each prototype pole maps to two band poles (roots of a quadratic).
                let centre = if band_pass { p * bw / 2.0 } else { bw / (2.0 * p) };
                let disc = (centre * centre - w0_sq).sqrt();
                for s in [centre + disc, centre - disc] {
                    let pole = bilinear(s, fs2);
                    // Use the member of the conjugate pair in the upper half plane.
                    let pole = if pole.im < 0.0 { pole.conj() } else { pole };
                    let section = if band_pass {
                        section_real_zeros(1.0, -1.0, pole)
                    } else {
                        section_from_roots(bilinear(Complex64::new(0.0, w0), fs2), pole)
                    };
                    sections.push(section);
                }
            }
            let reference = if band_pass {
                // Digital frequency the analog band centre maps to.
                (w0 / fs2).atan() * sample_rate / PI
            } else {
                0.0
            };
            (sections, reference)
        }
    };

    let z_ref = Complex64::from_polar(1.0, -2.0 * PI * reference_hz / sample_rate);
    let sections = sections
        .into_iter()
        .map(|mut s| {
            let g = s.response(z_ref).norm();
            s.b0 /= g;
            s.b1 /= g;
            s.b2 /= g;
            s
        })
        .collect();
    BiquadCascade::new(sections)
}

/// Runs the cascade causally over the clip (transposed direct form II, zero initial state).
pub fn apply_iir(clip: &AudioClip, cascade: &BiquadCascade) -> Result<AudioClip> {
    let mut y = clip.samples().to_vec();
    for s in cascade.sections() {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let x = *v;
            let out = s.b0 * x + z1;
            z1 = s.b1 * x - s.a1 * out + z2;
            z2 = s.b2 * x - s.a2 * out;
            *v = out;
        }
    }
    clip.with_samples(y)
}
