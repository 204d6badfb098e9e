//! `SDVC` checkpoint container.
//!
//! ```text
//! "SDVC" (0x53 0x44 0x56 0x43)
//! u32 LE  version (= 1)
//! u32 LE  config length, then that many bytes of UTF-8 JSON (ModelConfig)
//! u32 LE  tensor count
//! per tensor:
//!   u16 LE name length, UTF-8 name
//!   u32 LE rows, u32 LE cols
//!   rows·cols f32 LE, row-major
//! ```
//! Tensors appear in [`layout`](crate::model::weights::layout) order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::weights::ModelWeights;
use crate::numkit::Matrix;

pub const MAGIC: [u8; 4] = *b"SDVC";
pub const VERSION: u32 = 1;

pub fn encode(config: &ModelConfig, weights: &ModelWeights) -> Result<Vec<u8>> {
    let blob = serde_json::to_vec(config)?;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(blob.len() as u32).to_le_bytes());
    out.extend_from_slice(&blob);
    out.extend_from_slice(&(weights.len() as u32).to_le_bytes());
    for (name, t) in weights.iter() {
        let name_len = u16::try_from(name.len())
            .map_err(|_| Error::InvalidArgument(format!("tensor name too long: {name}")))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rows() as u32).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u32).to_le_bytes());
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                path: self.path.into(),
                expected: self.pos + n,
                found: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn format(&self, reason: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.into(),
            reason: reason.into(),
        }
    }
}

/// Decodes a checkpoint. With `expected` set, the stored configuration must
/// match it exactly.
pub fn decode(bytes: &[u8], path: &Path, expected: Option<&ModelConfig>) -> Result<(ModelConfig, ModelWeights)> {
    let mut cur = Cursor { bytes, pos: 0, path };
    let magic = cur.take(4).map_err(|_| Error::BadMagic {
        path: path.into(),
        expected: MAGIC,
        found: bytes.to_vec(),
    })?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: MAGIC,
            found: magic.to_vec(),
        });
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Version {
            path: path.into(),
            expected: VERSION,
            found: version,
        });
    }
    let blob_len = cur.u32()? as usize;
    let blob = cur.take(blob_len)?;
    let config: ModelConfig = serde_json::from_slice(blob)
        .map_err(|e| cur.format(format!("config blob: {e}")))?;
    config.validate()?;
    if let Some(want) = expected
        && want != &config {
            return Err(Error::ConfigMismatch(format!(
                "checkpoint was saved with {}, expected {}",
                serde_json::to_string(&config)?,
                serde_json::to_string(want)?
            )));
        }
    let count = cur.u32()? as usize;
    let mut tensors = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let name_len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| cur.format("tensor name is not UTF-8"))?
            .to_string();
        let rows = cur.u32()? as usize;
        let cols = cur.u32()? as usize;
        let n = rows
            .checked_mul(cols)
            .filter(|&n| n < (1 << 31))
            .ok_or_else(|| cur.format(format!("tensor {name} is too large")))?;
        let data = cur
            .take(4 * n)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let m = Matrix::new(rows, cols, data)
            .map_err(|e| cur.format(format!("tensor {name}: {e}")))?;
        tensors.push((name, m));
    }
    if cur.pos != bytes.len() {
        return Err(Error::TrailingBytes {
            path: path.into(),
            extra: bytes.len() - cur.pos,
        });
    }
    let weights = ModelWeights::from_tensors(&config, tensors)?;
    Ok((config, weights))
}

pub fn save_checkpoint(config: &ModelConfig, weights: &ModelWeights, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(config, weights)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(
    path: impl AsRef<Path>,
    expected: Option<&ModelConfig>,
) -> Result<(ModelConfig, ModelWeights)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path, expected)
}
