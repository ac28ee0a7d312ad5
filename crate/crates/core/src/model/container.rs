//! Binary model container: magic `ESCM`, version, layer dims, f32 parameters,
//! JSON metadata and a trailing CRC32.

use std::path::Path;

use super::mlp::{DenseLayer, MlpHead};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"ESCM";
pub const MODEL_VERSION: u16 = 1;

/// Several heads plus free-form JSON metadata, stored in one container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub heads: Vec<MlpHead<f32>>,
    pub metadata: serde_json::Value,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub fn encode_bundle(bundle: &ModelBundle) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_u32(&mut out, bundle.heads.len());
    for head in &bundle.heads {
        let dims = head.dims();
        put_u32(&mut out, dims.len());
        for d in dims {
            put_u32(&mut out, d);
        }
        for layer in head.layers() {
            for v in layer.weights.iter().chain(&layer.bias) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let meta = serde_json::to_vec(&bundle.metadata)?;
    put_u32(&mut out, meta.len());
    out.extend_from_slice(&meta);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Container {
            kind: "model",
            reason: format!("unexpected end of data at byte {}", self.pos),
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

/// Checks magic, then version, then the checksum, then parses.
pub fn decode_bundle(bytes: &[u8]) -> Result<ModelBundle> {
    let bad = |reason: &str| Error::Container {
        kind: "model",
        reason: reason.to_string(),
    };
    if bytes.len() < 6 || &bytes[..4] != MODEL_MAGIC {
        return Err(bad("missing ESCM magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    if bytes.len() < 10 {
        return Err(Error::Checksum {
            stored: 0,
            computed: crc32fast::hash(bytes),
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes([tail[0], tail[1], tail[2], tail[3]]);
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }

    let mut cur = Cursor { bytes: body, pos: 6 };
    let n_heads = cur.u32()?;
    let mut heads = Vec::with_capacity(n_heads.min(64));
    for _ in 0..n_heads {
        let n_dims = cur.u32()?;
        if n_dims < 2 {
            return Err(bad("a head needs at least two dims"));
        }
        let dims = (0..n_dims).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        let mut layers = Vec::with_capacity(n_dims - 1);
        for w in dims.windows(2) {
            let (i, o) = (w[0], w[1]);
            let mut read = |n: usize| -> Result<Vec<f32>> {
                let raw = cur.take(n.checked_mul(4).ok_or_else(|| bad("layer too large"))?)?;
                Ok(raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect())
            };
            let weights = read(i * o)?;
            let bias = read(o)?;
            layers.push(DenseLayer {
                in_dim: i,
                out_dim: o,
                weights,
                bias,
            });
        }
        heads.push(MlpHead::from_layers(layers)?);
    }
    let meta_len = cur.u32()?;
    let metadata = serde_json::from_slice(cur.take(meta_len)?)?;
    if cur.pos != body.len() {
        return Err(bad("trailing bytes after metadata"));
    }
    Ok(ModelBundle { heads, metadata })
}

pub fn save_model(head: &MlpHead<f32>) -> Vec<u8> {
    encode_bundle(&ModelBundle {
        heads: vec![head.clone()],
        metadata: serde_json::Value::Null,
    })
    .expect("null metadata always serializes")
}

pub fn load_model(bytes: &[u8]) -> Result<MlpHead<f32>> {
    let mut bundle = decode_bundle(bytes)?;
    if bundle.heads.len() != 1 {
        return Err(Error::Container {
            kind: "model",
            reason: format!("expected one head, found {}", bundle.heads.len()),
        });
    }
    Ok(bundle.heads.remove(0))
}

pub fn write_bundle(path: &Path, bundle: &ModelBundle) -> Result<()> {
    std::fs::write(path, encode_bundle(bundle)?).map_err(|e| Error::io(path, e))
}

pub fn read_bundle(path: &Path) -> Result<ModelBundle> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bundle(&bytes)
}
