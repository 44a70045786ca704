//! Fixed-format CSV writers: 17 significant digits, '.' decimal separator,
//! '\n' line endings. Output bytes depend only on the data.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::paths::PathSet;
use crate::Result;

/// 17 significant digits in scientific notation.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn open(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path)?))
}

/// `t,path_0,...,path_{n-1}`, one row per node.
pub fn write_paths(path: &Path, ps: &PathSet) -> Result<()> {
    let times: Vec<f64> = (0..=ps.grid.step_count()).map(|k| ps.grid.node(k)).collect();
    let rows: Vec<&[f64]> = ps.paths.iter().map(|p| p.values.as_slice()).collect();
    write_matrix(path, &times, &rows)
}

/// Same shape as the path dump for any per-node value matrix; `rows` may
/// carry `history_len` leading entries at negative times.
pub fn write_columns(path: &Path, times: &[f64], columns: &[Vec<f64>]) -> Result<()> {
    let rows: Vec<&[f64]> = columns.iter().map(|c| c.as_slice()).collect();
    write_matrix(path, times, &rows)
}

fn write_matrix(path: &Path, times: &[f64], rows: &[&[f64]]) -> Result<()> {
    let mut w = open(path)?;
    write!(w, "t")?;
    for i in 0..rows.len() {
        write!(w, ",path_{i}")?;
    }
    writeln!(w)?;
    for (k, t) in times.iter().enumerate() {
        write!(w, "{}", fmt(*t))?;
        for row in rows {
            write!(w, ",{}", fmt(row[k]))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// `path_index,time,size`, one row per recorded jump event.
pub fn write_jumps(path: &Path, ps: &PathSet) -> Result<()> {
    let mut w = open(path)?;
    writeln!(w, "path_index,time,size")?;
    for (i, p) in ps.paths.iter().enumerate() {
        for e in &p.jumps {
            writeln!(w, "{i},{},{}", fmt(e.time), fmt(e.size))?;
        }
    }
    w.flush()?;
    Ok(())
}
