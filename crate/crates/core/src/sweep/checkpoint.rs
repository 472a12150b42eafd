use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SweepSpec;
use crate::error::{Error, Result, Warning};
use crate::grid::PhaseGrid;
use crate::io::{map_csv_row, parse_map_csv, sha256_hex, write_atomic, MAP_HEADER};

/// Row-level persistence for a map in progress.
///
/// Completed rows are appended to `<base>.partial` in the final CSV format and
/// `<base>.progress.json` records how many rows are valid. A rerun with the
/// same spec picks up after the last recorded row; a different spec starts over.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    csv: PathBuf,
    progress: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct Progress {
    kind: String,
    fingerprint: String,
    rows_done: usize,
    failures: usize,
    warnings: Vec<Warning>,
}

pub(crate) struct Resumed {
    pub rows_done: usize,
    pub failures: usize,
    pub warnings: Vec<Warning>,
}

fn fingerprint(spec: &SweepSpec, kind: &str) -> String {
    let neutral = SweepSpec {
        workers: 0,
        rescale: false,
        ..*spec
    };
    let text = serde_json::to_string(&(kind, neutral)).expect("spec serializes");
    sha256_hex(text.as_bytes())
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(e.to_string())
}

impl Checkpoint {
    pub fn new(base: &Path) -> Self {
        let with = |suffix: &str| {
            let mut s = base.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        Checkpoint {
            csv: with(".partial"),
            progress: with(".progress.json"),
        }
    }

    pub fn partial_path(&self) -> &Path {
        &self.csv
    }

    /// Rows already completed, if a progress record exists.
    pub fn rows_done(&self) -> Option<usize> {
        let text = fs::read_to_string(&self.progress).ok()?;
        serde_json::from_str::<Progress>(&text)
            .ok()
            .map(|p| p.rows_done)
    }

    fn write_progress(&self, p: &Progress) -> Result<()> {
        write_atomic(
            &self.progress,
            serde_json::to_string(p).map_err(json_err)?.as_bytes(),
        )
    }

    pub(crate) fn start(&self, spec: &SweepSpec, kind: &str) -> Result<()> {
        write_atomic(&self.csv, format!("{MAP_HEADER}\n").as_bytes())?;
        self.write_progress(&Progress {
            kind: kind.into(),
            fingerprint: fingerprint(spec, kind),
            rows_done: 0,
            failures: 0,
            warnings: Vec::new(),
        })
    }

    /// Restores completed rows into `grid`. `None` means nothing usable was found.
    pub(crate) fn resume(
        &self,
        spec: &SweepSpec,
        kind: &str,
        grid: &mut PhaseGrid,
    ) -> Result<Option<Resumed>> {
        let Ok(text) = fs::read_to_string(&self.progress) else {
            return Ok(None);
        };
        let progress: Progress = serde_json::from_str(&text).map_err(json_err)?;
        if progress.kind != kind || progress.fingerprint != fingerprint(spec, kind) {
            return Ok(None);
        }
        let Ok(partial) = fs::read_to_string(&self.csv) else {
            return Ok(None);
        };
        let cols = grid.q1_axis.len();
        let keep = progress.rows_done * cols;
        let rows = parse_map_csv(&partial)?;
        if rows.len() < keep {
            return Ok(None);
        }
        for (k, row) in rows.iter().take(keep).enumerate() {
            let (r, c) = (k / cols, k % cols);
            if row.q1.to_bits() != grid.q1_axis[c].to_bits()
                || row.p1.to_bits() != grid.p1_axis[r].to_bits()
            {
                return Err(Error::Io(format!(
                    "checkpoint {} does not match the lattice",
                    self.csv.display()
                )));
            }
            grid.mask[[r, c]] = !row.masked;
            grid.values[[r, c]] = if row.masked { 0.0 } else { row.value };
        }
        // drop any row appended after the last progress record
        let mut text = format!("{MAP_HEADER}\n");
        for line in partial.lines().skip(1).take(keep) {
            text.push_str(line);
            text.push('\n');
        }
        write_atomic(&self.csv, text.as_bytes())?;
        Ok(Some(Resumed {
            rows_done: progress.rows_done,
            failures: progress.failures,
            warnings: progress.warnings,
        }))
    }

    pub(crate) fn record_row(
        &self,
        spec: &SweepSpec,
        kind: &str,
        grid: &PhaseGrid,
        row: usize,
        warnings: &[Warning],
        failures: usize,
    ) -> Result<()> {
        let mut text = String::new();
        map_csv_row(grid, row, &mut text);
        let mut f = OpenOptions::new().append(true).open(&self.csv)?;
        f.write_all(text.as_bytes())?;
        f.sync_data()?;
        self.write_progress(&Progress {
            kind: kind.into(),
            fingerprint: fingerprint(spec, kind),
            rows_done: row + 1,
            failures,
            warnings: warnings.to_vec(),
        })
    }

    /// Removes the checkpoint files once the final output is safely written.
    pub fn finish(&self) -> Result<()> {
        for p in [&self.csv, &self.progress] {
            if p.exists() {
                fs::remove_file(p)?;
            }
        }
        Ok(())
    }
}
