//! Plain-text artifacts: CSV tables with shortest round-trip number
//! formatting, and JSON manifests carrying SHA-256 checksums.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::SectionPoint;
use crate::error::{Error, Result};
use crate::grid::PhaseGrid;

pub const MAP_HEADER: &str = "q1,p1,value,masked";
pub const SECTION_HEADER: &str = "q1,p1,t_cross,seed_id";

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// One CSV line per lattice point, rows of `p1` outermost. Masked points carry
/// `NaN` and `masked = 1`.
pub fn map_csv(grid: &PhaseGrid) -> String {
    let mut out = String::with_capacity(48 * grid.values.len());
    out.push_str(MAP_HEADER);
    out.push('\n');
    for r in 0..grid.p1_axis.len() {
        map_csv_row(grid, r, &mut out);
    }
    out
}

pub(crate) fn map_csv_row(grid: &PhaseGrid, r: usize, out: &mut String) {
    for c in 0..grid.q1_axis.len() {
        let active = grid.mask[[r, c]];
        let v = if active {
            grid.values[[r, c]]
        } else {
            f64::NAN
        };
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(grid.q1_axis[c]),
            fmt_f64(grid.p1_axis[r]),
            fmt_f64(v),
            u8::from(!active)
        );
    }
}

/// A parsed map CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapRow {
    pub q1: f64,
    pub p1: f64,
    pub value: f64,
    pub masked: bool,
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, line: usize) -> Result<T> {
    field
        .and_then(|f| f.trim().parse().ok())
        .ok_or_else(|| Error::Io(format!("malformed CSV field on line {line}")))
}

pub fn parse_map_csv(text: &str) -> Result<Vec<MapRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(MAP_HEADER) {
        return Err(Error::Io("map CSV header mismatch".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let mut f = l.split(',');
            let q1 = parse_field(f.next(), i + 2)?;
            let p1 = parse_field(f.next(), i + 2)?;
            let value = parse_field(f.next(), i + 2)?;
            let masked: u8 = parse_field(f.next(), i + 2)?;
            Ok(MapRow {
                q1,
                p1,
                value,
                masked: masked != 0,
            })
        })
        .collect()
}

pub fn sections_csv(points: &[SectionPoint]) -> String {
    let mut out = String::from(SECTION_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.q1),
            fmt_f64(p.p1),
            fmt_f64(p.t_cross),
            p.seed_id
        );
    }
    out
}

/// Two-column table such as `t,S`.
pub fn series_csv(header: &str, xs: &[f64], ys: &[f64]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for (x, y) in xs.iter().zip(ys) {
        let _ = writeln!(out, "{},{}", fmt_f64(*x), fmt_f64(*y));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a temporary sibling and a rename so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// A file written by a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    pub rows: usize,
    pub sha256: String,
}

impl Artifact {
    /// Writes `contents` under `dir` and records its checksum.
    pub fn write(dir: &Path, name: &str, kind: &str, contents: &str) -> Result<Artifact> {
        write_atomic(&dir.join(name), contents.as_bytes())?;
        Ok(Artifact {
            path: name.to_string(),
            kind: kind.to_string(),
            rows: contents.lines().count().saturating_sub(1),
            sha256: sha256_hex(contents.as_bytes()),
        })
    }
}

/// Record of one job: what was asked for, what came out, and what went wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub command: String,
    pub complete: bool,
    /// Resolved configuration as `key = value` pairs, enough to re-run the job.
    pub config: Vec<(String, String)>,
    /// Free-form structured details (parameter sets, grid, scores).
    pub details: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    pub warnings_count: usize,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
