//! Minimal RIFF/WAVE reader for PCM and IEEE-float payloads.

use std::path::Path;

use super::AudioClip;
use crate::{Error, Result};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_IEEE_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleFormat {
    Int,
    Float,
}

#[derive(Debug, Clone, Copy)]
struct FmtChunk {
    format: SampleFormat,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn malformed(chunk: &str, reason: impl Into<String>) -> Error {
    Error::MalformedWav {
        chunk: chunk.to_string(),
        reason: reason.into(),
    }
}

fn unsupported(chunk: &str, reason: impl Into<String>) -> Error {
    Error::UnsupportedCodec {
        chunk: chunk.to_string(),
        reason: reason.into(),
    }
}

fn chunk_name(id: &[u8]) -> String {
    id.iter()
        .map(|&b| if b.is_ascii_graphic() || b == b' ' { b as char } else { '?' })
        .collect()
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk> {
    if body.len() < 16 {
        return Err(malformed("fmt ", format!("chunk is {} bytes, need 16", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits_per_sample = u16_at(body, 14);

    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 40 {
            return Err(malformed("fmt ", "extensible format without sub-format GUID"));
        }
        // First two bytes of the sub-format GUID carry the plain format tag.
        tag = u16_at(body, 24);
    }
    let format = match tag {
        FORMAT_PCM => SampleFormat::Int,
        FORMAT_IEEE_FLOAT => SampleFormat::Float,
        other => return Err(unsupported("fmt ", format!("format tag {other:#06x}"))),
    };
    match (format, bits_per_sample) {
        (SampleFormat::Int, 8 | 16 | 24 | 32) | (SampleFormat::Float, 32 | 64) => {}
        (_, bits) => return Err(unsupported("fmt ", format!("{bits}-bit {format:?} samples"))),
    }
    if !(1..=2).contains(&channels) {
        return Err(unsupported("fmt ", format!("{channels} channels")));
    }
    if sample_rate == 0 {
        return Err(malformed("fmt ", "sample rate is zero"));
    }
    let expected_align = channels * (bits_per_sample / 8);
    if block_align != expected_align {
        return Err(malformed(
            "fmt ",
            format!("block align {block_align}, expected {expected_align}"),
        ));
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

fn decode_sample(fmt: &FmtChunk, b: &[u8]) -> f64 {
    match (fmt.format, fmt.bits_per_sample) {
        (SampleFormat::Int, 8) => (b[0] as f64 - 128.0) / 128.0,
        (SampleFormat::Int, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32_768.0,
        (SampleFormat::Int, 24) => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (SampleFormat::Int, 32) => {
            i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0
        }
        (SampleFormat::Float, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (SampleFormat::Float, 64) => {
            f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]])
        }
        _ => unreachable!("validated in parse_fmt"),
    }
}

/// Decodes a RIFF/WAVE byte buffer into a mono clip.
///
/// Integer samples are scaled by their full-scale value (`2^(bits-1)`, 8-bit is offset
/// binary) and stereo frames are averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(malformed("RIFF", format!("file is only {} bytes", bytes.len())));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(malformed(
            &chunk_name(&bytes[0..4]),
            "expected 'RIFF' magic",
        ));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(malformed(&chunk_name(&bytes[8..12]), "expected 'WAVE' form type"));
    }

    let mut fmt = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = bytes.len() - body_start;
        match id {
            b"fmt " => {
                if size > available {
                    return Err(malformed("fmt ", "chunk runs past end of file"));
                }
                fmt = Some(parse_fmt(&bytes[body_start..body_start + size])?);
            }
            // Streaming writers leave the data size unset or too large; take what exists.
            b"data" => data = Some(&bytes[body_start..body_start + size.min(available)]),
            _ => {}
        }
        pos = body_start.saturating_add(size).saturating_add(size & 1);
    }

    let fmt = fmt.ok_or_else(|| malformed("fmt ", "missing format chunk"))?;
    let data = data.ok_or_else(|| malformed("data", "missing data chunk"))?;

    let width = (fmt.bits_per_sample / 8) as usize;
    let channels = fmt.channels as usize;
    let frame = width * channels;
    let samples = data
        .chunks_exact(frame)
        .map(|f| {
            let sum: f64 = f.chunks_exact(width).map(|s| decode_sample(&fmt, s)).sum();
            sum / channels as f64
        })
        .collect::<Vec<_>>();
    AudioClip::new(samples, fmt.sample_rate).map_err(|e| malformed("data", e.to_string()))
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<AudioClip> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

/// Encodes a clip as 16-bit mono PCM. Samples outside `[-1, 1)` are clipped.
pub fn encode_wav_pcm16(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        let q = (s * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}
