//! Vector file I/O for the command-line tools.
//!
//! Binary format (bit-exact, little-endian): magic bytes `SPHF`, `u32`
//! version = 1, `u32` count, `u32` dim, then `count * dim` IEEE-754
//! binary32 values in row-major order. A plain-text alternative is
//! accepted on read for small inputs: one vector per line, comma-separated
//! decimals.
//!
//! Coordinates are quantized to binary32 on write, so vectors are
//! re-normalized on load to restore exact unit norm.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sphere_geometry::UnitVector;

const MAGIC: &[u8; 4] = b"SPHF";
const FORMAT_VERSION: u32 = 1;
const MAX_DIM: u32 = 1 << 20;

/// Writes the binary format. All vectors must share one dimension.
pub fn write_vectors(path: &Path, vectors: &[UnitVector]) -> Result<()> {
    let dim = match vectors.first() {
        Some(v) => v.dim(),
        None => 0,
    };
    if dim > MAX_DIM as usize {
        return Err(Error::InvalidParameter(format!(
            "vector dimension {dim} exceeds the format limit {MAX_DIM}"
        )));
    }
    if vectors.len() > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "{} vectors exceed the format's u32 count",
            vectors.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(vectors.len() as u32).to_le_bytes())?;
    w.write_all(&(dim as u32).to_le_bytes())?;
    for v in vectors {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: v.dim(),
                right: dim,
            });
        }
        for &x in v.as_slice() {
            w.write_all(&(x as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads either format, deciding by the magic bytes.
pub fn read_vectors(path: &Path) -> Result<Vec<UnitVector>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == MAGIC {
        parse_binary(&bytes)
    } else {
        parse_text(&bytes)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<UnitVector>> {
    let header = 4 + 4 + 4 + 4;
    if bytes.len() < header {
        return Err(Error::MalformedFile(
            "vector file truncated inside the header".to_string(),
        ));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::MalformedFile(format!(
            "unsupported vector file version {version}"
        )));
    }
    let count = u32_at(8) as usize;
    let dim = u32_at(12);
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::MalformedFile(format!(
            "vector dimension {dim} out of range"
        )));
    }
    let dim = dim as usize;
    let expected = header + count * dim * 4;
    if bytes.len() != expected {
        return Err(Error::MalformedFile(format!(
            "vector file holds {} bytes; header promises {expected}",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut off = header;
    for row in 0..count {
        let mut coords = Vec::with_capacity(dim);
        for _ in 0..dim {
            coords.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as f64);
            off += 4;
        }
        let v = UnitVector::normalized(coords)
            .map_err(|e| Error::MalformedFile(format!("vector {row}: {e}")))?;
        out.push(v);
    }
    Ok(out)
}

fn parse_text(bytes: &[u8]) -> Result<Vec<UnitVector>> {
    let text = std::str::from_utf8(bytes).map_err(|_| {
        Error::MalformedFile(
            "not a binary vector file (bad magic) and not valid text".to_string(),
        )
    })?;
    let mut out = Vec::new();
    let mut dim = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut coords = Vec::new();
        for field in line.split(',') {
            let x: f64 = field.trim().parse().map_err(|_| {
                Error::MalformedFile(format!(
                    "line {}: '{}' is not a decimal number",
                    lineno + 1,
                    field.trim()
                ))
            })?;
            coords.push(x);
        }
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::MalformedFile(format!(
                    "line {}: {} coordinates, previous rows had {d}",
                    lineno + 1,
                    coords.len()
                )))
            }
            Some(_) => {}
        }
        let v = UnitVector::normalized(coords)
            .map_err(|e| Error::MalformedFile(format!("line {}: {e}", lineno + 1)))?;
        out.push(v);
    }
    Ok(out)
}
