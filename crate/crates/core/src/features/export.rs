//! PNG rendering and the `ESCT` tensor container.
//!
//! `ESCT` layout (little-endian): magic `ESCT`, `u16` version, `u8` rank, `rank` x `u32`
//! dims, then the `f32` payload in row-major order.

use std::path::Path;

use serde::Serialize;

use super::SpectrogramMatrix;
use crate::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"ESCT";
pub const TENSOR_VERSION: u16 = 1;

/// 8-bit grayscale quantisation, `min -> 0` and `max -> 255`, rounded to nearest.
///
/// Rows are flipped so the lowest mel bin ends up at the bottom of the image. A constant
/// matrix maps to all zeros.
pub fn spectrogram_pixels(spec: &SpectrogramMatrix) -> Vec<u8> {
    let m = &spec.values;
    let (lo, hi) = (m.min(), m.max());
    let range = hi - lo;
    let mut pixels = Vec::with_capacity(m.rows() * m.cols());
    for r in (0..m.rows()).rev() {
        for &v in m.row(r) {
            let p = if range > 0.0 {
                ((v - lo) / range * 255.0).round()
            } else {
                0.0
            };
            pixels.push(p as u8);
        }
    }
    pixels
}

/// Encodes the spectrogram as an 8-bit grayscale PNG, width `n_frames`, height `n_mels`.
pub fn render_png(spec: &SpectrogramMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, spec.n_frames() as u32, spec.n_mels() as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&spectrogram_pixels(spec))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if expected != data.len() {
            return Err(Error::DimensionMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(7 + 4 * self.dims.len() + 4 * self.data.len());
        out.extend_from_slice(TENSOR_MAGIC);
        out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
        out.push(self.dims.len() as u8);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: &str| Error::Container {
            kind: "ESCT",
            reason: reason.to_string(),
        };
        if bytes.len() < 7 || &bytes[..4] != TENSOR_MAGIC {
            return Err(bad("missing ESCT magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version > TENSOR_VERSION {
            return Err(Error::Version {
                found: version,
                supported: TENSOR_VERSION,
            });
        }
        let rank = bytes[6] as usize;
        let header = 7 + 4 * rank;
        if bytes.len() < header {
            return Err(bad("truncated dims"));
        }
        let dims: Vec<usize> = bytes[7..header]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let count: usize = dims.iter().product();
        if bytes.len() != header + 4 * count {
            return Err(bad("payload length does not match dims"));
        }
        let data = bytes[header..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { dims, data })
    }

    pub fn from_spectrogram(spec: &SpectrogramMatrix) -> Self {
        Self {
            dims: vec![spec.n_mels(), spec.n_frames()],
            data: spec.values.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }
}

/// Writes `tensor` to `path` and `sidecar` as pretty JSON next to it (`.json` extension).
pub fn write_tensor_file(path: &Path, tensor: &Tensor, sidecar: &impl Serialize) -> Result<()> {
    std::fs::write(path, tensor.encode()).map_err(|e| Error::io(path, e))?;
    let side = path.with_extension("json");
    let json = serde_json::to_vec_pretty(sidecar)?;
    std::fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn read_tensor_file(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Tensor::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Matrix, MelParams, SpectrogramUnit, StftParams};
    use proptest::prelude::*;

    fn spec(values: Matrix) -> SpectrogramMatrix {
        SpectrogramMatrix {
            values,
            unit: SpectrogramUnit::Decibel,
            stft: StftParams::default(),
            mel: MelParams::default(),
        }
    }

    #[test]
    fn linear_quantisation_with_bottom_up_rows() {
        let s = spec(Matrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0]]));
        // Top image row is the last matrix row.
        assert_eq!(spectrogram_pixels(&s), vec![170, 255, 0, 85]);
        assert_eq!(spectrogram_pixels(&spec(Matrix::from_vec(2, 2, vec![5.0; 4]))), vec![0; 4]);
    }

    #[test]
    fn png_dimensions_and_pixels() {
        let s = spec(Matrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![3.0, 4.0, 5.0]]));
        let bytes = render_png(&s).unwrap();
        let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
        let mut reader = decoder.read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        assert_eq!((info.width, info.height), (3, 2));
        assert_eq!(info.color_type, png::ColorType::Grayscale);
        assert_eq!(&buf[..info.buffer_size()], &spectrogram_pixels(&s)[..]);
    }

    #[test]
    fn tensor_header_layout() {
        let t = Tensor::new(vec![2, 1], vec![1.0, -2.0]).unwrap();
        let bytes = t.encode();
        assert_eq!(&bytes[..4], b"ESCT");
        assert_eq!(&bytes[4..7], &[1, 0, 2]);
        assert_eq!(&bytes[7..15], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(bytes.len(), 15 + 8);
        assert!(Tensor::new(vec![3], vec![0.0]).is_err());
    }

    #[test]
    fn tensor_rejects_bad_input() {
        assert!(Tensor::decode(b"XXXX\x01\x00\x00").is_err());
        let mut bytes = Tensor::new(vec![1], vec![1.0]).unwrap().encode();
        bytes[4] = 9;
        assert!(matches!(Tensor::decode(&bytes), Err(Error::Version { found: 9, .. })));
        let bytes = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap().encode();
        assert!(Tensor::decode(&bytes[..bytes.len() - 1]).is_err());
    }

    proptest! {
        #[test]
        fn tensor_round_trip(rows in 1usize..5, cols in 1usize..5, seed in any::<u32>()) {
            let data: Vec<f32> = (0..rows * cols).map(|i| (seed as f32).sin() * i as f32).collect();
            let t = Tensor::new(vec![rows, cols], data).unwrap();
            prop_assert_eq!(Tensor::decode(&t.encode()).unwrap(), t);
        }
    }
}
