//! Polyphase windowed-sinc sample-rate conversion.
//!
//! For a rational ratio `up / down` (reduced by the gcd of the two rates), output sample
//! `k` sits at input position `k * down / up`. Its integer part selects the input
//! neighbourhood and its fractional part `phase / up` selects one of `up` precomputed
//! kernel rows. Each row is a Kaiser-windowed sinc whose cutoff sits just below the
//! lower of the two Nyquist frequencies.

use super::{mirror, AudioClip};
use crate::{Error, Result};

/// Zero crossings of the sinc on each side of the kernel centre (at the cutoff rate).
const ZERO_CROSSINGS: usize = 32;
/// Cutoff as a fraction of the lower Nyquist frequency.
const ROLLOFF: f64 = 0.95;
const KAISER_BETA: f64 = 9.0;
/// Above this many phases, kernel rows are computed per output sample instead of cached.
const MAX_CACHED_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half_sq = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > sum * 1e-17 {
        term *= half_sq / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

struct Kernel {
    /// Cutoff in cycles per input sample, times two (1.0 == input Nyquist).
    cutoff: f64,
    /// Half width in input samples.
    half_width: f64,
    /// Taps per phase; the first tap sits `taps / 2 - 1` samples before the base index.
    taps: usize,
    i0_beta: f64,
}

impl Kernel {
    fn new(up: u64, down: u64) -> Self {
        let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
        let half_width = ZERO_CROSSINGS as f64 / cutoff;
        let taps = 2 * half_width.ceil() as usize;
        Self {
            cutoff,
            half_width,
            taps,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        let r = t / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.cutoff * sinc(self.cutoff * t) * window
    }

    /// Coefficients for fractional offset `frac` in `[0, 1)`, normalised to unit DC gain.
    fn row(&self, frac: f64) -> Vec<f64> {
        let first = self.taps as isize / 2 - 1;
        let mut row: Vec<f64> = (0..self.taps)
            .map(|j| self.eval(frac + first as f64 - j as f64))
            .collect();
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|c| *c /= sum);
        row
    }
}

/// Number of samples [`resample`] produces: `round(len * target_rate / rate)`, halves up.
pub fn resampled_len(len: usize, rate: u32, target_rate: u32) -> usize {
    if rate == target_rate || rate == 0 {
        return len;
    }
    let (len, rate, target) = (len as u128, rate as u128, target_rate as u128);
    ((2 * len * target + rate) / (2 * rate)) as usize
}

/// Converts `clip` to `target_rate`.
///
/// The output has `round(len * target_rate / rate)` samples. The signal is mirrored past
/// both ends so clips that stop mid-waveform do not ring at the boundary.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::InvalidParameter("target sample rate must be positive".into()));
    }
    let rate = clip.sample_rate() as u64;
    let target = target_rate as u64;
    if rate == target {
        return Ok(clip.clone());
    }
    let g = gcd(rate, target);
    let (up, down) = (target / g, rate / g);

    let out_len = resampled_len(clip.len(), clip.sample_rate(), target_rate);

    let kernel = Kernel::new(up, down);
    let bank: Option<Vec<Vec<f64>>> = (up <= MAX_CACHED_PHASES)
        .then(|| (0..up).map(|p| kernel.row(p as f64 / up as f64)).collect());

    let x = clip.samples();
    let first = kernel.taps as isize / 2 - 1;
    let mut out = Vec::with_capacity(out_len);
    let mut scratch;
    for k in 0..out_len as u64 {
        let pos = k * down;
        let base = (pos / up) as isize;
        let phase = pos % up;
        let row: &[f64] = match &bank {
            Some(bank) => &bank[phase as usize],
            None => {
                scratch = kernel.row(phase as f64 / up as f64);
                &scratch
            }
        };
        let start = base - first;
        let acc = if start >= 0 && start as usize + row.len() <= x.len() {
            let window = &x[start as usize..start as usize + row.len()];
            row.iter().zip(window).map(|(c, v)| c * v).sum()
        } else {
            row.iter()
                .enumerate()
                .map(|(j, c)| c * x[mirror(start + j as isize, x.len())])
                .sum()
        };
        out.push(acc);
    }
    AudioClip::new(out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rustfft::{num_complex::Complex, FftPlanner};
    use std::f64::consts::PI;

    fn tone(freq: f64, amp: f64, rate: u32, len: usize) -> AudioClip {
        let s = (0..len)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / rate as f64).sin())
            .collect();
        AudioClip::new(s, rate).unwrap()
    }

    /// Hann-windowed magnitude spectrum, bin index and peak magnitude.
    fn spectrum_peak(x: &[f64]) -> (usize, f64) {
        let n = x.len();
        let mut buf: Vec<Complex<f64>> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
                Complex::new(v * w, 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        buf[..n / 2]
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }

    /// Amplitude of a sinusoid at `freq` by least-squares projection on the central part.
    fn tone_amplitude(x: &[f64], freq: f64, rate: u32) -> f64 {
        let skip = x.len() / 8;
        let mid = &x[skip..x.len() - skip];
        let (mut s, mut c) = (0.0, 0.0);
        for (i, v) in mid.iter().enumerate() {
            let ph = 2.0 * PI * freq * (i + skip) as f64 / rate as f64;
            s += v * ph.sin();
            c += v * ph.cos();
        }
        2.0 * (s * s + c * c).sqrt() / mid.len() as f64
    }

    #[test]
    fn identity_rate_is_identity() {
        let clip = tone(440.0, 0.5, 44_100, 1000);
        assert_eq!(resample(&clip, 44_100).unwrap(), clip);
    }

    #[test]
    fn length_formula() {
        let clip = AudioClip::new(vec![0.0; 11_025], 22_050).unwrap();
        let out = resample(&clip, 44_100).unwrap();
        assert_eq!(out.len(), 22_050);
        assert_eq!(out.sample_rate(), 44_100);

        let odd = AudioClip::new(vec![0.0; 1001], 48_000).unwrap();
        // 1001 * 44100 / 48000 = 919.66 -> 920
        assert_eq!(resample(&odd, 44_100).unwrap().len(), 920);
    }

    #[test]
    fn empty_clip_stays_empty() {
        let clip = AudioClip::new(vec![], 8_000).unwrap();
        assert!(resample(&clip, 16_000).unwrap().is_empty());
    }

    #[test]
    fn zero_target_rejected() {
        let clip = AudioClip::new(vec![0.0; 4], 8_000).unwrap();
        assert!(resample(&clip, 0).is_err());
    }

    #[test]
    fn tone_frequency_preserved_48k_to_44k1() {
        let clip = tone(1000.0, 0.8, 48_000, 48_000);
        let out = resample(&clip, 44_100).unwrap();
        let (bin, _) = spectrum_peak(out.samples());
        // 44100 samples -> 1 Hz bins.
        let expected = (1000.0 * out.len() as f64 / 44_100.0).round() as isize;
        assert!((bin as isize - expected).abs() <= 1, "peak at bin {bin}");
        let amp_db = 20.0 * (tone_amplitude(out.samples(), 1000.0, 44_100) / 0.8).log10();
        assert!(amp_db.abs() < 0.5, "amplitude changed by {amp_db} dB");
    }

    #[test]
    fn upsampled_tone_keeps_amplitude() {
        for freq in [100.0, 3000.0, 9000.0] {
            let clip = tone(freq, 0.5, 22_050, 22_050);
            let out = resample(&clip, 44_100).unwrap();
            let amp_db = 20.0 * (tone_amplitude(out.samples(), freq, 44_100) / 0.5).log10();
            assert!(amp_db.abs() < 0.5, "{freq} Hz changed by {amp_db} dB");
        }
    }

    #[test]
    fn round_trip_keeps_tone() {
        let clip = tone(2000.0, 0.7, 44_100, 44_100);
        let down = resample(&clip, 16_000).unwrap();
        let back = resample(&down, 44_100).unwrap();
        assert_eq!(back.len(), clip.len());
        let (b0, _) = spectrum_peak(clip.samples());
        let (b1, _) = spectrum_peak(back.samples());
        assert_eq!(b0, b1);
        let amp_db = 20.0 * (tone_amplitude(back.samples(), 2000.0, 44_100) / 0.7).log10();
        assert!(amp_db.abs() < 1.0);
    }

    #[test]
    fn uncached_phases_path() {
        // 44101 / 44100 is irreducible, so the phase count exceeds the cache limit.
        let clip = tone(500.0, 0.5, 44_100, 4410);
        let out = resample(&clip, 44_101).unwrap();
        assert_eq!(out.len(), 4410);
        let amp = tone_amplitude(out.samples(), 500.0, 44_101);
        assert!((amp - 0.5).abs() < 0.01);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn amplitude_bounded_for_band_limited_input(
            // Tones well below the source Nyquist, so sampled peaks track the true peaks.
            r1 in 0.002f64..0.04,
            r2 in 0.002f64..0.04,
            a in 0.1f64..0.5,
            rates in prop::sample::select(vec![(8_000u32, 44_100u32), (44_100, 8_000), (48_000, 44_100), (22_050, 44_100)]),
        ) {
            let (from, to) = rates;
            let (f1, f2) = (r1 * from as f64, r2 * from as f64);
            let len = from as usize / 4;
            let s: Vec<f64> = (0..len).map(|n| {
                let t = n as f64 / from as f64;
                a * (2.0 * PI * f1 * t).sin() + a * (2.0 * PI * f2 * t + 1.0).sin()
            }).collect();
            let clip = AudioClip::new(s, from).unwrap();
            let out = resample(&clip, to).unwrap();
            prop_assert!(out.peak() <= clip.peak() * 1.05);
        }
    }
}
