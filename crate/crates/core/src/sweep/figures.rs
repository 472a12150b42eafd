//! Parameter sets behind each figure and a driver that regenerates them.

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    chaos_map_with, correspondence_score, entropy_map_with, Checkpoint, MapPair, RankedSeeds,
    SweepSpec,
};
use crate::classical::{
    poincare_section, section_seeds, ClassicalState, IntegratorConfig, LyapunovEstimate,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::io::{map_csv, sections_csv, series_csv, Artifact, Manifest};
use crate::model::{ModelParams, Variant};
use crate::quantum::{sample_times, QuantumModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
    Fig11,
}

impl FigureId {
    pub const ALL: [FigureId; 11] = [
        FigureId::Fig1,
        FigureId::Fig2,
        FigureId::Fig3,
        FigureId::Fig4,
        FigureId::Fig5,
        FigureId::Fig6,
        FigureId::Fig7,
        FigureId::Fig8,
        FigureId::Fig9,
        FigureId::Fig10,
        FigureId::Fig11,
    ];

    pub fn name(self) -> String {
        format!("fig{}", self as usize + 1)
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::Usage(format!("unknown figure `{s}`; expected one of fig1..fig11"))
            })
    }
}

/// Knobs that trade fidelity for run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub map_res: usize,
    pub husimi_res: usize,
    pub t_total: f64,
    pub dt: f64,
    /// Fixed Fock cutoff; `None` picks one per parameter set.
    pub n_max: Option<usize>,
    pub integrator: IntegratorConfig,
    /// Seeds per axis for Poincaré sections.
    pub section_res: usize,
    pub max_crossings: usize,
    /// Seeds per axis when ranking candidates for representative trajectories.
    pub seed_res: usize,
    pub husimi_dt: f64,
    pub snapshot_times: Vec<f64>,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            map_res: super::DEFAULT_MAP_RES,
            husimi_res: crate::husimi::DEFAULT_HUSIMI_RES,
            t_total: super::DEFAULT_T,
            dt: super::DEFAULT_DT,
            n_max: None,
            integrator: IntegratorConfig::default(),
            section_res: 20,
            max_crossings: 200,
            seed_res: 12,
            husimi_dt: 0.5,
            snapshot_times: vec![0.0, 2.0, 5.0, 10.0, 20.0, 30.0],
            workers: 1,
        }
    }
}

/// One physical configuration appearing in a figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigureSet {
    pub variant: Variant,
    pub g: f64,
    pub n_atoms: usize,
    pub energy: f64,
    pub rescale: bool,
}

impl FigureSet {
    fn two(g: f64, n_atoms: usize, energy: f64) -> Self {
        FigureSet {
            variant: Variant::TwoPhoton,
            g,
            n_atoms,
            energy,
            rescale: false,
        }
    }

    fn one(n_atoms: usize, energy: f64) -> Self {
        FigureSet {
            variant: Variant::OnePhoton,
            g: 0.5,
            n_atoms,
            energy,
            rescale: false,
        }
    }

    fn rescaled(self) -> Self {
        FigureSet {
            rescale: true,
            ..self
        }
    }

    pub fn label(&self) -> String {
        let v = match self.variant {
            Variant::TwoPhoton => "two",
            Variant::OnePhoton => "one",
        };
        format!("{v}_g{}_N{}_E{}", self.g, self.n_atoms, self.energy)
    }

    /// Model parameters with `ω = 1` and `ω₀ = 2` (two-photon) or `ω₀ = 1` (one-photon).
    pub fn params(&self, n_max: Option<usize>) -> Result<ModelParams> {
        let base = match self.variant {
            Variant::TwoPhoton => ModelParams::two_photon(self.g, self.n_atoms, 2)?,
            Variant::OnePhoton => ModelParams::one_photon(self.g, self.n_atoms, 2)?,
        };
        let p = base.with_n_max(n_max.unwrap_or_else(|| base.suggested_n_max(self.energy)));
        p.validate()?;
        Ok(p)
    }
}

/// What a figure consists of.
#[derive(Debug, Clone, PartialEq)]
pub enum FigurePlan {
    /// Sections plus chaotic and regular entropy series on each shell.
    SectionsAndSeries(Vec<FigureSet>),
    /// Section, Lyapunov map and time-averaged entropy map per set.
    Maps(Vec<FigureSet>),
    /// Husimi snapshots and variance decay for a chaotic and a regular seed.
    Husimi(FigureSet),
}

pub fn figure_plan(id: FigureId) -> FigurePlan {
    use FigureId::*;
    let two = FigureSet::two;
    let one = FigureSet::one;
    match id {
        Fig1 => FigurePlan::SectionsAndSeries(vec![
            two(0.3, 10, 1.0),
            two(0.3, 10, 5.0),
            two(0.3, 10, 10.0),
        ]),
        Fig2 => FigurePlan::Maps(vec![
            two(0.1, 10, 1.0),
            two(0.25, 10, 1.0),
            two(0.4, 10, 1.0),
        ]),
        Fig3 => FigurePlan::Maps(vec![
            two(0.1, 10, 10.0),
            two(0.25, 10, 10.0),
            two(0.4, 10, 10.0),
        ]),
        Fig4 => FigurePlan::Maps(
            [two(0.3, 5, 5.5), two(0.3, 15, 16.5), two(0.3, 30, 33.0)]
                .map(FigureSet::rescaled)
                .to_vec(),
        ),
        Fig5 => FigurePlan::Maps(vec![
            two(0.3, 10, 7.0),
            two(0.3, 10, 12.0),
            two(0.3, 10, 17.0),
        ]),
        Fig6 => FigurePlan::Maps(vec![
            two(0.3, 4, 12.0),
            two(0.3, 15, 12.0),
            two(0.3, 30, 12.0),
        ]),
        Fig7 => FigurePlan::Maps(
            [one(5, 2.0), one(15, 6.0), one(30, 12.0)]
                .map(FigureSet::rescaled)
                .to_vec(),
        ),
        Fig8 => FigurePlan::Maps(vec![one(10, 1.0), one(10, 4.0), one(10, 7.0)]),
        Fig9 => FigurePlan::Maps(vec![one(5, 4.0), one(15, 4.0), one(30, 4.0)]),
        Fig10 => FigurePlan::Husimi(two(0.3, 10, 1.0)),
        Fig11 => FigurePlan::Husimi(two(0.3, 10, 10.0)),
    }
}

fn seed_json(s: &ClassicalState, l: &LyapunovEstimate) -> serde_json::Value {
    json!({"q1": s.q1, "p1": s.p1, "q2": s.q2, "p2": s.p2, "lambda": l.lambda, "lambda_stderr": l.stderr})
}

struct SuiteRun<'a> {
    out_dir: &'a Path,
    opts: &'a SuiteOptions,
    manifest: Manifest,
    manifest_path: std::path::PathBuf,
    started: Instant,
}

impl SuiteRun<'_> {
    fn artifact(&mut self, name: &str, kind: &str, contents: &str) -> Result<()> {
        let a = Artifact::write(self.out_dir, name, kind, contents)?;
        self.manifest.artifacts.retain(|x| x.path != a.path);
        self.manifest.artifacts.push(a);
        Ok(())
    }

    fn warn(&mut self, w: impl ToString) {
        self.manifest.warnings_count += 1;
        if self.manifest.warnings.len() < 200 {
            self.manifest.warnings.push(w.to_string());
        }
    }

    fn push_detail(&mut self, v: serde_json::Value) -> Result<()> {
        if let Some(sets) = self
            .manifest
            .details
            .get_mut("sets")
            .and_then(|s| s.as_array_mut())
        {
            sets.push(v);
        }
        self.flush()
    }

    fn flush(&mut self) -> Result<()> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest.write(&self.manifest_path)
    }

    fn sections(&mut self, set: &FigureSet, p: &ModelParams, name: &str) -> Result<usize> {
        let seeds = section_seeds(p, set.energy, self.opts.section_res);
        let batch = poincare_section(
            &seeds,
            p,
            &self.opts.integrator,
            self.opts.max_crossings,
            self.opts.workers,
        )?;
        for (id, e) in &batch.failures {
            self.warn(format!("section seed {id} of {}: {e}", set.label()));
        }
        let mut points = batch.points;
        if set.rescale {
            let s = p.j().sqrt();
            points.iter_mut().for_each(|pt| {
                pt.q1 /= s;
                pt.p1 /= s;
            });
        }
        self.artifact(name, "sections", &sections_csv(&points))?;
        Ok(points.len())
    }

    fn series_set(&mut self, set: &FigureSet) -> Result<()> {
        let p = set.params(self.opts.n_max)?;
        let tag = set.label();
        let n_points = self.sections(set, &p, &format!("{tag}_sections.csv"))?;
        let ranked = RankedSeeds::classify(
            &p,
            set.energy,
            self.opts.seed_res,
            &self.opts.integrator,
            self.opts.workers,
        )?;
        let model = QuantumModel::new(&p)?;
        let mut seeds = Vec::new();
        for (role, (s, l)) in [
            ("chaotic", ranked.most_chaotic(1)[0]),
            ("regular", ranked.most_regular(1)[0]),
        ] {
            let series = model.entropy_series(&s, self.opts.t_total, self.opts.dt)?;
            for w in &series.warnings {
                self.warn(format!("{tag} {role}: {w}"));
            }
            self.artifact(
                &format!("{tag}_{role}_entropy.csv"),
                "entropy_series",
                &series_csv("t,S", &series.times, &series.values),
            )?;
            seeds.push(
                json!({"role": role, "seed": seed_json(&s, &l), "max_leakage": series.max_leakage}),
            );
        }
        self.push_detail(json!({
            "label": tag, "params": p, "energy": set.energy, "section_points": n_points,
            "chaotic_fraction": ranked.chaotic_fraction(), "seeds": seeds,
        }))
    }

    fn map_set(&mut self, set: &FigureSet) -> Result<()> {
        let p = set.params(self.opts.n_max)?;
        let tag = set.label();
        let spec = SweepSpec {
            grid: GridSpec::new(self.opts.map_res),
            t_total: self.opts.t_total,
            dt: self.opts.dt,
            rescale: set.rescale,
            integrator: self.opts.integrator,
            workers: self.opts.workers,
            ..SweepSpec::new(p, set.energy, self.opts.map_res)
        };
        self.sections(set, &p, &format!("{tag}_sections.csv"))?;
        let entropy_ck = Checkpoint::new(&self.out_dir.join(format!("{tag}_entropy_map.csv")));
        let chaos_ck = Checkpoint::new(&self.out_dir.join(format!("{tag}_lyapunov_map.csv")));
        let model = QuantumModel::new(&p)?;
        let entropy = entropy_map_with(&model, &spec, Some(&entropy_ck))?;
        drop(model);
        let chaos = chaos_map_with(&spec, Some(&chaos_ck))?;
        for w in entropy.warnings.iter().chain(&chaos.warnings) {
            self.warn(format!("{tag}: {w}"));
        }
        self.artifact(
            &format!("{tag}_entropy_map.csv"),
            "entropy_map",
            &map_csv(&entropy.output_grid(&spec)),
        )?;
        self.artifact(
            &format!("{tag}_lyapunov_map.csv"),
            "lyapunov_map",
            &map_csv(&chaos.output_grid(&spec)),
        )?;
        let pair = MapPair::new(entropy.grid.clone(), chaos.grid.clone())?;
        let score = correspondence_score(&pair);
        if let Err(e) = &score {
            self.warn(format!("{tag}: {e}"));
        }
        let (mean_s, _) = pair.entropy.mean_and_variance();
        self.push_detail(json!({
            "label": tag, "params": p, "energy": set.energy, "grid_res": spec.grid.res, "rescale": set.rescale,
            "t_total": spec.t_total, "dt": spec.dt, "points": pair.samples().len(),
            "chaotic_fraction": pair.chaotic_fraction(), "mean_entropy": mean_s,
            "score": score.as_ref().ok(), "failures": entropy.failures + chaos.failures,
        }))?;
        entropy_ck.finish()?;
        chaos_ck.finish()
    }

    fn husimi_set(&mut self, set: &FigureSet) -> Result<()> {
        let p = set.params(self.opts.n_max)?;
        let tag = set.label();
        let ranked = RankedSeeds::classify(
            &p,
            set.energy,
            self.opts.seed_res,
            &self.opts.integrator,
            self.opts.workers,
        )?;
        let model = QuantumModel::new(&p)?;
        let times = sample_times(self.opts.t_total, self.opts.husimi_dt)?;
        let keep: Vec<usize> = self
            .opts
            .snapshot_times
            .iter()
            .filter_map(|&t| times.iter().position(|&x| (x - t).abs() < 1e-9))
            .collect();
        let spec = GridSpec::new(self.opts.husimi_res);
        let mut seeds = Vec::new();
        for (role, (s, l)) in [
            ("chaotic", ranked.most_chaotic(1)[0]),
            ("regular", ranked.most_regular(1)[0]),
        ] {
            let series = model.husimi_series(&s, &times, &spec, &keep)?;
            self.artifact(
                &format!("{tag}_{role}_husimi_variance.csv"),
                "husimi_variance",
                &series_csv("t,variance", &series.times, &series.variances),
            )?;
            for (t, grid) in &series.snapshots {
                self.artifact(
                    &format!("{tag}_{role}_husimi_t{t}.csv"),
                    "husimi_grid",
                    &map_csv(grid),
                )?;
            }
            seeds.push(json!({"role": role, "seed": seed_json(&s, &l), "half_decay_time": half_decay_time(&series.times, &series.variances)}));
        }
        self.push_detail(json!({"label": tag, "params": p, "energy": set.energy, "husimi_res": spec.res, "seeds": seeds}))
    }
}

/// First sampled time at which `v` falls below half its initial value.
pub fn half_decay_time(times: &[f64], v: &[f64]) -> Option<f64> {
    let v0 = *v.first()?;
    times
        .iter()
        .zip(v)
        .find(|(_, &x)| x < 0.5 * v0)
        .map(|(&t, _)| t)
}

/// Regenerates one figure's data under `out_dir`, writing `manifest.json`
/// after every completed parameter set. Map sweeps checkpoint per row, so an
/// interrupted run resumes where it stopped.
pub fn run_figure_suite(
    id: FigureId,
    opts: &SuiteOptions,
    out_dir: &Path,
    config: Vec<(String, String)>,
) -> Result<Manifest> {
    std::fs::create_dir_all(out_dir)?;
    let mut run = SuiteRun {
        out_dir,
        opts,
        manifest: Manifest {
            command: format!("figure {}", id.name()),
            complete: false,
            config,
            details: json!({"figure": id.name(), "options": opts, "sets": []}),
            ..Manifest::default()
        },
        manifest_path: out_dir.join("manifest.json"),
        started: Instant::now(),
    };
    run.flush()?;
    match figure_plan(id) {
        FigurePlan::SectionsAndSeries(sets) => sets.iter().try_for_each(|s| run.series_set(s))?,
        FigurePlan::Maps(sets) => sets.iter().try_for_each(|s| run.map_set(s))?,
        FigurePlan::Husimi(set) => run.husimi_set(&set)?,
    }
    run.manifest.complete = true;
    run.flush()?;
    Ok(run.manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_parse_and_reject_unknown() {
        assert_eq!("fig7".parse::<FigureId>().unwrap(), FigureId::Fig7);
        assert_eq!("FIG11".parse::<FigureId>().unwrap(), FigureId::Fig11);
        assert!(matches!("fig12".parse::<FigureId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn plans_follow_the_captions() {
        let FigurePlan::Maps(sets) = figure_plan(FigureId::Fig2) else {
            panic!()
        };
        assert_eq!(
            sets.iter().map(|s| s.g).collect::<Vec<_>>(),
            vec![0.1, 0.25, 0.4]
        );
        assert!(sets.iter().all(|s| s.energy == 1.0 && s.n_atoms == 10));
        let FigurePlan::Maps(sets) = figure_plan(FigureId::Fig6) else {
            panic!()
        };
        assert_eq!(
            sets.iter().map(|s| s.n_atoms).collect::<Vec<_>>(),
            vec![4, 15, 30]
        );
        assert!(sets.iter().all(|s| s.energy == 12.0 && s.g == 0.3));
        let FigurePlan::Maps(sets) = figure_plan(FigureId::Fig4) else {
            panic!()
        };
        assert!(sets
            .iter()
            .all(|s| s.rescale && (s.energy / s.n_atoms as f64 - 1.1).abs() < 1e-12));
        let FigurePlan::Maps(sets) = figure_plan(FigureId::Fig7) else {
            panic!()
        };
        assert!(sets.iter().all(|s| s.variant == Variant::OnePhoton
            && (s.energy / s.n_atoms as f64 - 0.4).abs() < 1e-12));
    }

    #[test]
    fn half_decay_picks_first_crossing() {
        assert_eq!(
            half_decay_time(&[0.0, 1.0, 2.0, 3.0], &[4.0, 3.0, 1.9, 0.5]),
            Some(2.0)
        );
        assert_eq!(half_decay_time(&[0.0, 1.0], &[4.0, 3.0]), None);
    }
}
