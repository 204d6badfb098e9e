//! `SDVE` container for embeddings and labels.
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SDVE" (0x53 0x44 0x56 0x45)
//! 4       4           version, u32 LE (= 1)
//! 8       4           rows, u32 LE
//! 12      4           cols, u32 LE
//! 16      4·rows·cols f32 LE, row-major
//! ```
//! No padding and no trailing bytes. Labels use the same layout with
//! `cols = 1`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkit::Matrix;

pub const MAGIC: [u8; 4] = *b"SDVE";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
/// Largest element count a container may declare.
pub const MAX_ELEMENTS: u64 = (1 << 31) - 1;

pub fn encode(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.data().len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses and validates the 16-byte header, returning (rows, cols).
pub fn decode_header(bytes: &[u8], path: &Path) -> Result<(usize, usize)> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: MAGIC,
            found: bytes[..bytes.len().min(4)].to_vec(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            path: path.into(),
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Version {
            path: path.into(),
            expected: VERSION,
            found: version,
        });
    }
    let rows = u32_at(bytes, 8) as u64;
    let cols = u32_at(bytes, 12) as u64;
    if rows * cols > MAX_ELEMENTS {
        return Err(Error::DimensionOverflow {
            path: path.into(),
            rows,
            cols,
        });
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format {
            path: path.into(),
            reason: format!("empty matrix {rows}x{cols}"),
        });
    }
    Ok((rows as usize, cols as usize))
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let (rows, cols) = decode_header(bytes, path)?;
    let expected = HEADER_LEN + 4 * rows * cols;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingBytes {
            path: path.into(),
            extra: bytes.len() - expected,
        });
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows, cols, data).map_err(|e| Error::Format {
        path: path.into(),
        reason: e.to_string(),
    })
}

pub fn write_embeddings(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(m)).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Reads only the header of a container and checks the file length.
pub fn read_shape(path: impl AsRef<Path>) -> Result<(usize, usize)> {
    use std::io::Read;
    let path = path.as_ref();
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len() as usize;
    let mut header = Vec::with_capacity(HEADER_LEN);
    file.by_ref()
        .take(HEADER_LEN as u64)
        .read_to_end(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let (rows, cols) = decode_header(&header, path)?;
    let expected = HEADER_LEN + 4 * rows * cols;
    match len.cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            path: path.into(),
            expected,
            found: len,
        }),
        std::cmp::Ordering::Greater => Err(Error::TrailingBytes {
            path: path.into(),
            extra: len - expected,
        }),
        std::cmp::Ordering::Equal => Ok((rows, cols)),
    }
}
