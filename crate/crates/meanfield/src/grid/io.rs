//! Field dump formats.
//!
//! Two on-disk representations per time slice:
//!
//! * CSV with a coordinate header (`x,value` or `x,y,value`), human-greppable,
//!   values printed with enough digits to reload within 1e-15;
//! * a binary format that round-trips bit-exactly: a 32-byte header
//!   (8-byte magic `MFGFLD01`, then little-endian `u32` dimension, points per
//!   axis, time-step count, slice index, and 8 reserved zero bytes) followed
//!   by `points^dim` little-endian `f64` values in row-major order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::domain::DomainSpec;
use crate::grid::field::ScalarField;

pub const MAGIC: &[u8; 8] = b"MFGFLD01";

/// Header metadata carried by a binary field dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldHeader {
    pub dim: u32,
    pub points: u32,
    pub time_steps: u32,
    pub slice_index: u32,
}

pub fn write_field_csv(path: &Path, field: &ScalarField) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let domain = &field.domain;
    match domain.dim {
        1 => {
            writeln!(out, "x,value")?;
            for cell in 0..domain.cells() {
                writeln!(out, "{:.17e},{:.17e}", domain.coords(cell)[0], field.values()[cell])?;
            }
        }
        _ => {
            writeln!(out, "x,y,value")?;
            for cell in 0..domain.cells() {
                let c = domain.coords(cell);
                writeln!(out, "{:.17e},{:.17e},{:.17e}", c[0], c[1], field.values()[cell])?;
            }
        }
    }
    Ok(())
}

/// Reload a CSV dump onto the given domain (coordinates are checked loosely,
/// values exactly as printed).
pub fn read_field_csv(path: &Path, domain: &DomainSpec) -> Result<ScalarField> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::FieldFormat("empty CSV".into()))??;
    let expected_cols = if domain.dim == 1 { 2 } else { 3 };
    if header.split(',').count() != expected_cols {
        return Err(Error::FieldFormat(format!(
            "CSV header '{header}' does not match dimension {}",
            domain.dim
        )));
    }
    let mut data = Vec::with_capacity(domain.cells());
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = line
            .rsplit(',')
            .next()
            .ok_or_else(|| Error::FieldFormat(format!("line {}: no value column", lineno + 2)))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::FieldFormat(format!("line {}: {e}", lineno + 2)))?;
        data.push(value);
    }
    ScalarField::from_data(domain, data)
}

pub fn write_field_bin(path: &Path, field: &ScalarField, time_steps: u32) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(field.domain.dim as u32).to_le_bytes())?;
    out.write_all(&(field.domain.points as u32).to_le_bytes())?;
    out.write_all(&time_steps.to_le_bytes())?;
    out.write_all(&(field.time_index as u32).to_le_bytes())?;
    out.write_all(&[0u8; 8])?; // reserved, pads the header to 32 bytes
    for v in field.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field_bin(path: &Path, domain: &DomainSpec) -> Result<(ScalarField, FieldHeader)> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 32];
    reader.read_exact(&mut header)?;
    if &header[0..8] != MAGIC {
        return Err(Error::FieldFormat("bad magic in binary field".into()));
    }
    let word = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap());
    let meta = FieldHeader {
        dim: word(8),
        points: word(12),
        time_steps: word(16),
        slice_index: word(20),
    };
    if meta.dim as usize != domain.dim || meta.points as usize != domain.points {
        return Err(Error::FieldFormat(format!(
            "binary field is {}d with {} points, domain is {}d with {}",
            meta.dim, meta.points, domain.dim, domain.points
        )));
    }
    let cells = domain.cells();
    let mut raw = vec![0u8; cells * 8];
    reader.read_exact(&mut raw)?;
    let mut data = Vec::with_capacity(cells);
    for chunk in raw.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let mut field = ScalarField::from_data(domain, data)?;
    field.time_index = meta.slice_index as usize;
    Ok((field, meta))
}
