//! Binary field files.
//!
//! Layout, all little-endian: the magic `RNLSFLD\0`, a `u32` version, a `u32`
//! dimension, a `u8` boundary tag and three padding bytes, then per axis the
//! bounds as two `f64` and the mode count as `u64`, then one `(re, im)` pair
//! of `f64` per sample in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid, C64};

const MAGIC: &[u8; 8] = b"RNLSFLD\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    encode(field, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn encode(field: &Field, out: &mut impl Write) -> Result<()> {
    let grid = field.grid();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&[grid.boundary().tag(), 0, 0, 0])?;
    for axis in grid.axes() {
        out.write_all(&axis.lo.to_le_bytes())?;
        out.write_all(&axis.hi.to_le_bytes())?;
        out.write_all(&(axis.modes as u64).to_le_bytes())?;
    }
    for v in field.values() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field together with the grid recorded in its header.
pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let mut input = BufReader::new(File::open(path)?);
    decode(&mut input)
}

/// Reads a field that must live on `grid` (same boundary, bounds and modes).
pub fn read_field_for(path: impl AsRef<Path>, grid: &Arc<Grid>) -> Result<Field> {
    let field = read_field(path)?;
    let stored = field.grid();
    if stored.boundary() != grid.boundary() {
        return Err(Error::Format(format!(
            "file holds a {:?} field, expected {:?}",
            stored.boundary(),
            grid.boundary()
        )));
    }
    if stored.modes() != grid.modes() || stored.bounds() != grid.bounds() {
        return Err(Error::GridMismatch);
    }
    Field::new(grid.clone(), field.into_values())
}

fn take<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("truncated file".into()),
        _ => Error::Io(e),
    })?;
    Ok(buf)
}

pub fn decode(input: &mut impl Read) -> Result<Field> {
    if &take::<8>(input)? != MAGIC {
        return Err(Error::Format("not a field file".into()));
    }
    let version = u32::from_le_bytes(take(input)?);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    let dim = u32::from_le_bytes(take(input)?) as usize;
    if !(1..=3).contains(&dim) {
        return Err(Error::Format(format!("corrupt header: dimension {dim}")));
    }
    let [tag, ..] = take::<4>(input)?;
    let boundary = Boundary::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("corrupt header: boundary tag {tag}")))?;
    let mut bounds = Vec::with_capacity(dim);
    let mut modes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let lo = f64::from_le_bytes(take(input)?);
        let hi = f64::from_le_bytes(take(input)?);
        bounds.push((lo, hi));
        modes.push(u64::from_le_bytes(take(input)?) as usize);
    }
    let grid = Grid::new(&bounds, &modes, boundary)
        .map_err(|e| Error::Format(format!("corrupt header: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_le_bytes(take(input)?);
        let im = f64::from_le_bytes(take(input)?);
        values.push(C64::new(re, im));
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after the samples".into()));
    }
    Field::new(grid, values)
}
