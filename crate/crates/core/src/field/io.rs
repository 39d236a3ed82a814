//! VSF1 binary snapshots and CSV export.
//!
//! VSF1 layout (little-endian): magic `"VSF1"`, `u32` n, 8 reserved zero bytes,
//! `f64` L at offset 16, then `n * n` `f64` values, row-major with `y` outer.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};

pub const VSF_MAGIC: &[u8; 4] = b"VSF1";
const HEADER_LEN: usize = 24;

pub fn write_vsf<W: Write>(field: &ScalarField, mut w: W) -> Result<()> {
    let spec = field.spec();
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(VSF_MAGIC);
    header[4..8].copy_from_slice(&(spec.n() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&spec.half_width().to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * spec.len());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_vsf<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if &header[..4] != VSF_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &header[..4])));
    }
    let n = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let l = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let spec = GridSpec::new(n, l)?;
    let mut body = vec![0u8; 8 * spec.len()];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body: {e}")))?;
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ScalarField::from_values(spec, values)
}

impl ScalarField {
    pub fn save_vsf(&self, path: impl AsRef<Path>) -> Result<()> {
        write_vsf(self, BufWriter::new(File::create(path)?))
    }

    pub fn load_vsf(path: impl AsRef<Path>) -> Result<Self> {
        read_vsf(BufReader::new(File::open(path)?))
    }
}

/// Writes `x,y,value` rows for every cell, with a header line.
pub fn write_csv<W: Write>(field: &ScalarField, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "value"])?;
    for ((x, y), v) in field.spec().centers().zip(field.values()) {
        out.write_record([x.to_string(), y.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
