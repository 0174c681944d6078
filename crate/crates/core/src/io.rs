//! Output formats: binary field snapshots, CSV tables and JSON reports.
//!
//! Snapshot layout (all little-endian, 8 bytes each): `nx`, `ny` (u64),
//! `lx`, `ly` (f64), `components` (u64), `time` (f64), then the row-major
//! cell data with the components of each cell adjacent.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Boundary, CellValue, Field, Grid2D};

const HEADER_BYTES: usize = 48;

/// Full round-trip decimal formatting used for every float in CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn snapshot_bytes<T: CellValue>(f: &Field<T>, time: f64) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * g.len() * T::NCOMP);
    out.extend_from_slice(&(g.nx as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny as u64).to_le_bytes());
    out.extend_from_slice(&g.lx.to_le_bytes());
    out.extend_from_slice(&g.ly.to_le_bytes());
    out.extend_from_slice(&(T::NCOMP as u64).to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for v in f.data() {
        for c in 0..T::NCOMP {
            out.extend_from_slice(&v.get(c).to_le_bytes());
        }
    }
    out
}

pub fn write_snapshot<T: CellValue>(path: &Path, f: &Field<T>, time: f64) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, snapshot_bytes(f, time))?;
    Ok(())
}

/// Decodes a snapshot. The format does not record the boundary kind, so the
/// caller supplies it.
pub fn parse_snapshot<T: CellValue>(bytes: &[u8], boundary: Boundary) -> Result<(Field<T>, f64)> {
    let bad = |m: String| Error::Serde(format!("snapshot: {m}"));
    if bytes.len() < HEADER_BYTES {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().unwrap() };
    let nx = u64::from_le_bytes(word(0)) as usize;
    let ny = u64::from_le_bytes(word(1)) as usize;
    let lx = f64::from_le_bytes(word(2));
    let ly = f64::from_le_bytes(word(3));
    let ncomp = u64::from_le_bytes(word(4)) as usize;
    let time = f64::from_le_bytes(word(5));
    if ncomp != T::NCOMP {
        return Err(bad(format!("{ncomp} components, expected {}", T::NCOMP)));
    }
    let grid = Grid2D::new(nx, ny, lx, ly, boundary)?;
    let expected = HEADER_BYTES + 8 * grid.len() * ncomp;
    if bytes.len() != expected {
        return Err(bad(format!("{} bytes, expected {expected}", bytes.len())));
    }
    let mut data = vec![T::default(); grid.len()];
    let mut k = HEADER_BYTES / 8;
    for v in data.iter_mut() {
        for c in 0..ncomp {
            v.set(c, f64::from_le_bytes(word(k)));
            k += 1;
        }
    }
    Ok((Field::from_vec(grid, data)?, time))
}

pub fn read_snapshot<T: CellValue>(path: &Path, boundary: Boundary) -> Result<(Field<T>, f64)> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_snapshot(&bytes, boundary)
}

/// A row type with a fixed column layout.
pub trait CsvRecord {
    fn header() -> Vec<&'static str>;
    fn cells(&self) -> Vec<String>;
}

pub fn csv_string<R: CsvRecord>(rows: &[R]) -> String {
    let mut s = R::header().join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.cells().join(","));
        s.push('\n');
    }
    s
}

pub fn write_csv<R: CsvRecord>(path: &Path, rows: &[R]) -> Result<()> {
    write_text(path, &csv_string(rows))
}

/// Plot-friendly export: `x,y,c0,c1,...` per node.
pub fn field_csv<T: CellValue>(f: &Field<T>) -> String {
    let g = f.grid();
    let mut s = String::from("x,y");
    for c in 0..T::NCOMP {
        s.push_str(&format!(",c{c}"));
    }
    s.push('\n');
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.coords(i, j);
            s.push_str(&fmt_f64(x));
            s.push(',');
            s.push_str(&fmt_f64(y));
            let v = f.at(i, j);
            for c in 0..T::NCOMP {
                s.push(',');
                s.push_str(&fmt_f64(v.get(c)));
            }
            s.push('\n');
        }
    }
    s
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serde(e.to_string()))?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
