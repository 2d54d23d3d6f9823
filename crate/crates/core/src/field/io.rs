//! Field serialization.
//!
//! Binary layout, all little-endian:
//!
//! | bytes  | content                    |
//! |--------|----------------------------|
//! | 0..8   | `dim` as u64               |
//! | 8..16  | `L` as f64                 |
//! | 16..24 | `N` as u64                 |
//! | 24..   | `N^d` pairs `(re, im)` f64 |
//!
//! One-dimensional fields also export to CSV with columns `x,re,im`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::{Field, Grid};
use crate::error::{Error, Result};

pub const HEADER_BYTES: usize = 24;

pub fn write_binary<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    out.write_all(&(g.dim() as u64).to_le_bytes())?;
    out.write_all(&g.length().to_le_bytes())?;
    out.write_all(&(g.points() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.values().len());
    for v in field.values() {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary<R: Read>(mut input: R) -> Result<Field> {
    let dim = read_u64(&mut input)? as usize;
    let length = read_f64(&mut input)?;
    let points = read_u64(&mut input)? as usize;
    let grid = Grid::new(dim, length, points)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = read_f64(&mut input)?;
        let im = read_f64(&mut input)?;
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after field payload".into()));
    }
    Field::new(grid, values)
}

pub fn write_csv<W: Write>(field: &Field, mut out: W) -> Result<()> {
    let g = field.grid();
    if g.dim() != 1 {
        return Err(Error::InvalidParameter(
            "CSV export is defined for one-dimensional fields only".into(),
        ));
    }
    writeln!(out, "x,re,im")?;
    for (i, v) in field.values().iter().enumerate() {
        writeln!(out, "{:.17e},{:.17e},{:.17e}", g.node(i)[0], v.re, v.im)?;
    }
    Ok(())
}
