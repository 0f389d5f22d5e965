use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use splitwave::{Grid, Problem, SpectralField};

use crate::error::{CliError, CliResult};

/// Hex SHA-256 of the canonical problem description and resolution.
pub fn problem_hash(problem: &Problem) -> String {
    let mut h = Sha256::new();
    h.update(problem.describe().as_bytes());
    for n in problem.grid.shape() {
        h.update((n as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// One CSV cell: 17 significant digits, or empty for a missing value.
pub fn cell(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// An in-memory CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&c| cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(CliError::io(format!("writing {}", tmp.display())))?;
    fs::rename(&tmp, &path).map_err(CliError::io(format!("renaming to {}", path.display())))?;
    Ok(path)
}

pub fn write_table(dir: &Path, name: &str, table: &Table) -> CliResult<OutputFile> {
    write_atomic(dir, name, table.render().as_bytes())?;
    Ok(OutputFile {
        file: name.to_string(),
        rows: table.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SnapshotAxis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

/// First line of a snapshot file; the nodal values follow as interleaved
/// little-endian `f64` real and imaginary parts in grid storage order.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SnapshotHeader {
    pub grid: Vec<SnapshotAxis>,
    pub time: f64,
    pub problem_hash: String,
    pub values: usize,
}

pub fn snapshot_bytes(field: &SpectralField, time: f64, hash: &str) -> Vec<u8> {
    let header = SnapshotHeader {
        grid: axes_of(field.grid()),
        time,
        problem_hash: hash.to_string(),
        values: field.grid().len(),
    };
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for z in field.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn axes_of(grid: &Grid) -> Vec<SnapshotAxis> {
    grid.axes()
        .iter()
        .map(|ax| SnapshotAxis {
            a: ax.a,
            b: ax.b,
            n: ax.n,
        })
        .collect()
}

/// Splits a snapshot file into its header and values.
pub fn read_snapshot(bytes: &[u8]) -> CliResult<(SnapshotHeader, Vec<(f64, f64)>)> {
    let bad = || CliError::config("malformed snapshot file");
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(bad)?;
    let header: SnapshotHeader = serde_json::from_slice(&bytes[..nl]).map_err(|_| bad())?;
    let body = &bytes[nl + 1..];
    if body.len() != 16 * header.values {
        return Err(bad());
    }
    let values = body
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            (re, im)
        })
        .collect();
    Ok((header, values))
}

pub fn write_snapshot(dir: &Path, name: &str, field: &SpectralField, time: f64, hash: &str) -> CliResult<OutputFile> {
    write_atomic(dir, name, &snapshot_bytes(field, time, hash))?;
    Ok(OutputFile {
        file: name.to_string(),
        rows: 1,
    })
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))
}

pub fn write_manifest(dir: &Path, manifest: &impl Serialize) -> CliResult<PathBuf> {
    let mut text = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    text.write_all(b"\n").expect("vec write");
    write_atomic(dir, "manifest.json", &text)
}
