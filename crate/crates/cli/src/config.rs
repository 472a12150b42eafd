//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dicke_core::classical::IntegratorConfig;
use dicke_core::io::{fmt_f64, write_atomic};
use dicke_core::parallel::workers_from_env;
use dicke_core::{Error, ModelParams, Result, Variant};

/// Fock cutoff: fixed, or chosen from the energy shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NMax {
    Auto,
    Fixed(usize),
}

/// Initial phase points for `entropy` and `husimi`.
#[derive(Debug, Clone, PartialEq)]
pub enum Seeds {
    /// The most chaotic and the most regular of a `seed_res × seed_res` layout.
    Auto,
    /// Explicit `(q1, p1)` pairs; `(q2, p2)` are solved on the shell.
    Points(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub omega0: f64,
    pub g: f64,
    pub n_atoms: usize,
    pub variant: Variant,
    pub n_max: NMax,
    pub energy: f64,
    pub t_total: f64,
    pub dt: f64,
    pub t_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub map_res: usize,
    pub husimi_res: usize,
    pub section_res: usize,
    pub max_crossings: usize,
    pub seed_res: usize,
    pub seeds: Seeds,
    pub husimi_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub with_chaos: bool,
    pub out_dir: PathBuf,
    pub rescale: bool,
    pub workers: Option<usize>,
}

/// Every accepted key with its default, in serialization order.
pub const KEYS: [(&str, &str); 25] = [
    ("omega", "1.0"),
    ("omega0", "2.0"),
    ("g", "0.3"),
    ("n_atoms", "10"),
    ("variant", "TwoPhoton"),
    ("n_max", "auto"),
    ("E", "10.0"),
    ("T", "30.0"),
    ("dt", "0.05"),
    ("t_max", "1000.0"),
    ("rel_tol", "1e-11"),
    ("abs_tol", "1e-13"),
    ("max_step", "10.0"),
    ("map_res", "51"),
    ("husimi_res", "101"),
    ("section_res", "20"),
    ("max_crossings", "200"),
    ("seed_res", "12"),
    ("seeds", "auto"),
    ("husimi_dt", "0.5"),
    ("snapshot_times", "0.0, 2.0, 5.0, 10.0, 20.0, 30.0"),
    ("with_chaos", "true"),
    ("out_dir", "out"),
    ("rescale", "false"),
    ("workers", "auto"),
];

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = RunConfig {
            omega: 0.0,
            omega0: 0.0,
            g: 0.0,
            n_atoms: 0,
            variant: Variant::TwoPhoton,
            n_max: NMax::Auto,
            energy: 0.0,
            t_total: 0.0,
            dt: 0.0,
            t_max: 0.0,
            rel_tol: 0.0,
            abs_tol: 0.0,
            max_step: 0.0,
            map_res: 0,
            husimi_res: 0,
            section_res: 0,
            max_crossings: 0,
            seed_res: 0,
            seeds: Seeds::Auto,
            husimi_dt: 0.0,
            snapshot_times: Vec::new(),
            with_chaos: false,
            out_dir: PathBuf::new(),
            rescale: false,
            workers: None,
        };
        for (k, v) in KEYS {
            c.set(k, v).expect("defaults parse");
        }
        c
    }
}

fn type_err(key: &str, expected: &'static str, value: &str) -> Error {
    Error::Type {
        key: key.to_string(),
        expected,
        value: value.to_string(),
    }
}

fn real(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| type_err(key, "a finite number", v))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| type_err(key, "a non-negative integer", v))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(type_err(key, "a boolean", v)),
    }
}

fn reals(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| real(key, s.trim()))
        .collect()
}

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Assigns one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "omega" => self.omega = real(key, v)?,
            "omega0" => self.omega0 = real(key, v)?,
            "g" => self.g = real(key, v)?,
            "n_atoms" => self.n_atoms = count(key, v)?,
            "variant" => {
                self.variant = v
                    .parse()
                    .map_err(|_| type_err(key, "TwoPhoton or OnePhoton", v))?
            }
            "n_max" => {
                self.n_max = if v == "auto" {
                    NMax::Auto
                } else {
                    NMax::Fixed(count(key, v)?)
                }
            }
            "E" => self.energy = real(key, v)?,
            "T" => self.t_total = real(key, v)?,
            "dt" => self.dt = real(key, v)?,
            "t_max" => self.t_max = real(key, v)?,
            "rel_tol" => self.rel_tol = real(key, v)?,
            "abs_tol" => self.abs_tol = real(key, v)?,
            "max_step" => self.max_step = real(key, v)?,
            "map_res" => self.map_res = count(key, v)?,
            "husimi_res" => self.husimi_res = count(key, v)?,
            "section_res" => self.section_res = count(key, v)?,
            "max_crossings" => self.max_crossings = count(key, v)?,
            "seed_res" => self.seed_res = count(key, v)?,
            "seeds" => {
                self.seeds = if v == "auto" {
                    Seeds::Auto
                } else {
                    let pts = v
                        .split(';')
                        .filter(|s| !s.trim().is_empty())
                        .map(|pair| match pair.split_once(':') {
                            Some((q, p)) => Ok((real(key, q.trim())?, real(key, p.trim())?)),
                            None => Err(type_err(key, "`auto` or `q1:p1; q1:p1; ...`", v)),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Seeds::Points(pts)
                }
            }
            "husimi_dt" => self.husimi_dt = real(key, v)?,
            "snapshot_times" => self.snapshot_times = reals(key, v)?,
            "with_chaos" => self.with_chaos = flag(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "rescale" => self.rescale = flag(key, v)?,
            "workers" => {
                self.workers = match v {
                    "auto" => None,
                    _ => match v.parse::<usize>() {
                        Ok(n) if n > 0 => Some(n),
                        _ => return Err(type_err(key, "a positive integer or `auto`", v)),
                    },
                }
            }
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "omega" => fmt_f64(self.omega),
            "omega0" => fmt_f64(self.omega0),
            "g" => fmt_f64(self.g),
            "n_atoms" => self.n_atoms.to_string(),
            "variant" => self.variant.name().to_string(),
            "n_max" => match self.n_max {
                NMax::Auto => "auto".into(),
                NMax::Fixed(n) => n.to_string(),
            },
            "E" => fmt_f64(self.energy),
            "T" => fmt_f64(self.t_total),
            "dt" => fmt_f64(self.dt),
            "t_max" => fmt_f64(self.t_max),
            "rel_tol" => fmt_f64(self.rel_tol),
            "abs_tol" => fmt_f64(self.abs_tol),
            "max_step" => fmt_f64(self.max_step),
            "map_res" => self.map_res.to_string(),
            "husimi_res" => self.husimi_res.to_string(),
            "section_res" => self.section_res.to_string(),
            "max_crossings" => self.max_crossings.to_string(),
            "seed_res" => self.seed_res.to_string(),
            "seeds" => match &self.seeds {
                Seeds::Auto => "auto".into(),
                Seeds::Points(p) => p
                    .iter()
                    .map(|(q, p)| format!("{}:{}", fmt_f64(*q), fmt_f64(*p)))
                    .collect::<Vec<_>>()
                    .join("; "),
            },
            "husimi_dt" => fmt_f64(self.husimi_dt),
            "snapshot_times" => join(self.snapshot_times.iter().map(|t| fmt_f64(*t))),
            "with_chaos" => self.with_chaos.to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "rescale" => self.rescale.to_string(),
            "workers" => self.workers.map_or("auto".into(), |n| n.to_string()),
            _ => return None,
        })
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!(
                    "config line {}: expected `key = value`, got `{line}`",
                    i + 1
                ))
            })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        c.check()?;
        Ok(c)
    }

    /// Defaults, then the file at `path` if any, then `overrides` in order.
    pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut c = RunConfig::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            c.apply_text(&text)?;
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        if c.workers.is_none() {
            c.workers = workers_from_env();
        }
        c.check()?;
        Ok(c)
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        KEYS.iter()
            .map(|(k, _)| (k.to_string(), self.get(k).expect("known key")))
            .collect()
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Echoes the configuration to `<out_dir>/resolved-config`.
    pub fn write_resolved(&self) -> Result<PathBuf> {
        let path = self.out_dir.join("resolved-config");
        write_atomic(&path, self.serialize().as_bytes())?;
        Ok(path)
    }

    /// Cross-field constraints.
    pub fn check(&self) -> Result<()> {
        if self.variant == Variant::TwoPhoton && self.omega > 0.0 && self.g >= self.omega / 2.0 {
            return Err(Error::Constraint(format!(
                "g = {} reaches the two-photon spectral-collapse bound omega/2 = {}",
                self.g,
                self.omega / 2.0
            )));
        }
        self.base_params()?
            .validate()
            .map_err(|e| Error::Constraint(e.to_string()))?;
        self.integrator()
            .validate()
            .map_err(|e| Error::Constraint(e.to_string()))?;
        if !(self.dt > 0.0 && self.t_total > 0.0 && self.husimi_dt > 0.0) {
            return Err(Error::Constraint(
                "T, dt and husimi_dt must be positive".into(),
            ));
        }
        Ok(())
    }

    fn base_params(&self) -> Result<ModelParams> {
        let n = match self.n_max {
            NMax::Fixed(n) => n,
            NMax::Auto => 2,
        };
        Ok(ModelParams {
            omega: self.omega,
            omega0: self.omega0,
            g: self.g,
            n_atoms: self.n_atoms,
            variant: self.variant,
            n_max: n,
        })
    }

    /// Model parameters with the cutoff resolved for shell `E`.
    pub fn params(&self) -> Result<ModelParams> {
        let p = self.base_params()?;
        let p = match self.n_max {
            NMax::Fixed(_) => p,
            NMax::Auto => p.with_n_max(p.suggested_n_max(self.energy)),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            t_max: self.t_max,
            max_step: self.max_step,
        }
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::from_text("").unwrap();
        assert_eq!(
            (c.omega, c.omega0, c.g, c.n_atoms, c.variant),
            (1.0, 2.0, 0.3, 10, Variant::TwoPhoton)
        );
    }

    #[test]
    fn serialization_round_trips() {
        let mut c = RunConfig::default();
        c.apply_text("g = 0.1234567890123\nseeds = 0.1:-2; 3:4.5\nn_max = 77\nworkers = 3\nvariant = OnePhoton\n E = 1e-3").unwrap();
        assert_eq!(RunConfig::from_text(&c.serialize()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(RunConfig::from_text(&d.serialize()).unwrap(), d);
    }

    #[test]
    fn comments_and_whitespace_are_ignored() {
        let c = RunConfig::from_text("# header\n  g=0.2   # trailing\n\nE = 3").unwrap();
        assert_eq!((c.g, c.energy), (0.2, 3.0));
    }

    #[test]
    fn collapse_bound_is_a_constraint_error() {
        let e = RunConfig::from_text("g = 0.6").unwrap_err();
        assert!(
            matches!(&e, Error::Constraint(m) if m.contains("omega/2 = 0.5")),
            "{e}"
        );
        assert!(RunConfig::from_text("g = 0.6\nvariant = OnePhoton").is_ok());
    }

    #[test]
    fn unknown_and_mistyped_keys_fail() {
        assert_eq!(
            RunConfig::from_text("gg = 1").unwrap_err(),
            Error::UnknownKey("gg".into())
        );
        assert_eq!(
            RunConfig::from_text("E = ten").unwrap_err().code(),
            "TypeError"
        );
        assert_eq!(
            RunConfig::from_text("n_atoms = 2.5").unwrap_err().code(),
            "TypeError"
        );
        assert_eq!(
            RunConfig::from_text("workers = 0").unwrap_err().code(),
            "TypeError"
        );
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "E = 1\ng = 0.2\n").unwrap();
        let c = RunConfig::resolve(Some(&path), &[("E".into(), "10".into())]).unwrap();
        assert_eq!((c.energy, c.g), (10.0, 0.2));
    }
}
