//! One function per subcommand. Each writes its artifacts and a
//! `manifest.json` under the configured output directory.

use std::time::Instant;

use serde_json::json;

use dicke_core::classical::{
    poincare_section, section_seeds, solve_energy_shell, ClassicalState, LyapunovEstimate,
};
use dicke_core::grid::GridSpec;
use dicke_core::io::{map_csv, sections_csv, series_csv, Artifact, Manifest};
use dicke_core::quantum::{sample_times, time_averaged_entropy, QuantumModel};
use dicke_core::sweep::figures::{run_figure_suite, FigureId, SuiteOptions};
use dicke_core::sweep::{
    chaos_map_with, correspondence_score, entropy_map_with, Checkpoint, MapPair, RankedSeeds,
    SweepSpec,
};
use dicke_core::{Error, ModelParams, Result};

use crate::config::{NMax, RunConfig, Seeds};

struct Job<'a> {
    cfg: &'a RunConfig,
    manifest: Manifest,
    started: Instant,
}

impl<'a> Job<'a> {
    fn start(cfg: &'a RunConfig, command: &str) -> Result<Self> {
        std::fs::create_dir_all(&cfg.out_dir)?;
        cfg.write_resolved()?;
        let manifest = Manifest {
            command: command.to_string(),
            config: cfg.pairs(),
            details: json!({}),
            ..Manifest::default()
        };
        Ok(Job {
            cfg,
            manifest,
            started: Instant::now(),
        })
    }

    fn artifact(&mut self, name: &str, kind: &str, contents: &str) -> Result<()> {
        let a = Artifact::write(&self.cfg.out_dir, name, kind, contents)?;
        self.manifest.artifacts.push(a);
        Ok(())
    }

    fn warn(&mut self, w: impl ToString) {
        self.manifest.warnings_count += 1;
        self.manifest.warnings.push(w.to_string());
    }

    fn finish(mut self, details: serde_json::Value) -> Result<Manifest> {
        self.manifest.details = details;
        self.manifest.complete = true;
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest
            .write(&self.cfg.out_dir.join("manifest.json"))?;
        Ok(self.manifest)
    }
}

/// Seeds named by role, with their Lyapunov estimate when they were ranked.
fn resolve_seeds(
    cfg: &RunConfig,
    p: &ModelParams,
) -> Result<Vec<(String, ClassicalState, Option<LyapunovEstimate>)>> {
    match &cfg.seeds {
        Seeds::Auto => {
            let ranked = RankedSeeds::classify(
                p,
                cfg.energy,
                cfg.seed_res,
                &cfg.integrator(),
                cfg.worker_count(),
            )?;
            let (c, lc) = ranked.most_chaotic(1)[0];
            let (r, lr) = ranked.most_regular(1)[0];
            Ok(vec![
                ("chaotic".into(), c, Some(lc)),
                ("regular".into(), r, Some(lr)),
            ])
        }
        Seeds::Points(pts) => pts
            .iter()
            .enumerate()
            .map(|(k, &(q1, p1))| {
                let s = solve_energy_shell(q1, p1, cfg.energy, p)?.ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "no point of the shell E = {} above (q1, p1) = ({q1}, {p1})",
                        cfg.energy
                    ))
                })?;
                Ok((format!("seed{k}"), s, None))
            })
            .collect(),
    }
}

fn seed_json(role: &str, s: &ClassicalState, l: &Option<LyapunovEstimate>) -> serde_json::Value {
    json!({"role": role, "q1": s.q1, "p1": s.p1, "q2": s.q2, "p2": s.p2, "lambda": l.map(|l| l.lambda)})
}

pub fn cmd_poincare(cfg: &RunConfig) -> Result<Manifest> {
    let mut job = Job::start(cfg, "poincare")?;
    let p = cfg.params()?;
    let seeds = section_seeds(&p, cfg.energy, cfg.section_res);
    let batch = poincare_section(
        &seeds,
        &p,
        &cfg.integrator(),
        cfg.max_crossings,
        cfg.worker_count(),
    )?;
    for (id, e) in &batch.failures {
        job.warn(format!("seed {id}: {e}"));
    }
    job.artifact("sections.csv", "sections", &sections_csv(&batch.points))?;
    job.finish(json!({"params": p, "energy": cfg.energy, "seeds": seeds.len(), "points": batch.points.len()}))
}

pub fn cmd_entropy(cfg: &RunConfig) -> Result<Manifest> {
    let mut job = Job::start(cfg, "entropy")?;
    let p = cfg.params()?;
    let model = QuantumModel::new(&p)?;
    let mut seeds = Vec::new();
    for (role, s, l) in resolve_seeds(cfg, &p)? {
        let series = model.entropy_series(&s, cfg.t_total, cfg.dt)?;
        for w in &series.warnings {
            job.warn(format!("{role}: {w}"));
        }
        job.artifact(
            &format!("entropy_{role}.csv"),
            "entropy_series",
            &series_csv("t,S", &series.times, &series.values),
        )?;
        let mut d = seed_json(&role, &s, &l);
        d["time_averaged_entropy"] = json!(time_averaged_entropy(&series)?);
        d["max_leakage"] = json!(series.max_leakage);
        seeds.push(d);
    }
    job.finish(json!({"params": p, "energy": cfg.energy, "seeds": seeds}))
}

fn sweep_spec(cfg: &RunConfig, p: ModelParams) -> SweepSpec {
    SweepSpec {
        t_total: cfg.t_total,
        dt: cfg.dt,
        rescale: cfg.rescale,
        integrator: cfg.integrator(),
        workers: cfg.worker_count(),
        ..SweepSpec::new(p, cfg.energy, cfg.map_res)
    }
}

pub fn cmd_entropy_map(cfg: &RunConfig) -> Result<Manifest> {
    let mut job = Job::start(cfg, "entropy-map")?;
    let p = cfg.params()?;
    let spec = sweep_spec(cfg, p);
    spec.validate()?;
    let entropy_ck = Checkpoint::new(&cfg.out_dir.join("entropy_map.csv"));
    let entropy = entropy_map_with(&QuantumModel::new(&p)?, &spec, Some(&entropy_ck))?;
    for w in &entropy.warnings {
        job.warn(w);
    }
    job.artifact(
        "entropy_map.csv",
        "entropy_map",
        &map_csv(&entropy.output_grid(&spec)),
    )?;
    let mut details = json!({
        "params": p, "energy": cfg.energy, "grid_res": spec.grid.res, "rescale": spec.rescale,
        "mean_entropy": entropy.grid.mean_and_variance().0, "failures": entropy.failures,
    });
    let mut checkpoints = vec![entropy_ck];
    if cfg.with_chaos {
        let chaos_ck = Checkpoint::new(&cfg.out_dir.join("lyapunov_map.csv"));
        let chaos = chaos_map_with(&spec, Some(&chaos_ck))?;
        for w in &chaos.warnings {
            job.warn(w);
        }
        job.artifact(
            "lyapunov_map.csv",
            "lyapunov_map",
            &map_csv(&chaos.output_grid(&spec)),
        )?;
        let pair = MapPair::new(entropy.grid, chaos.grid)?;
        details["chaotic_fraction"] = json!(pair.chaotic_fraction());
        details["score"] = match correspondence_score(&pair) {
            Ok(s) => json!(s),
            Err(e) => {
                job.warn(&e);
                json!(null)
            }
        };
        checkpoints.push(chaos_ck);
    }
    let m = job.finish(details)?;
    checkpoints.iter().try_for_each(Checkpoint::finish)?;
    Ok(m)
}

pub fn cmd_husimi(cfg: &RunConfig) -> Result<Manifest> {
    let mut job = Job::start(cfg, "husimi")?;
    let p = cfg.params()?;
    let model = QuantumModel::new(&p)?;
    let times = sample_times(cfg.t_total, cfg.husimi_dt)?;
    let keep: Vec<usize> = cfg
        .snapshot_times
        .iter()
        .map(|&t| {
            times
                .iter()
                .position(|&x| (x - t).abs() < 1e-9)
                .ok_or_else(|| {
                    Error::Constraint(format!(
                        "snapshot time {t} is not a multiple of husimi_dt = {} within [0, T]",
                        cfg.husimi_dt
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let spec = GridSpec::new(cfg.husimi_res);
    let mut seeds = Vec::new();
    for (role, s, l) in resolve_seeds(cfg, &p)? {
        let series = model.husimi_series(&s, &times, &spec, &keep)?;
        job.artifact(
            &format!("husimi_{role}_variance.csv"),
            "husimi_variance",
            &series_csv("t,variance", &series.times, &series.variances),
        )?;
        for (t, grid) in &series.snapshots {
            let grid = if cfg.rescale {
                grid.rescaled(&p)
            } else {
                grid.clone()
            };
            job.artifact(
                &format!("husimi_{role}_t{t}.csv"),
                "husimi_grid",
                &map_csv(&grid),
            )?;
        }
        seeds.push(seed_json(&role, &s, &l));
    }
    job.finish(json!({"params": p, "energy": cfg.energy, "husimi_res": spec.res, "seeds": seeds}))
}

pub fn suite_options(cfg: &RunConfig) -> SuiteOptions {
    SuiteOptions {
        map_res: cfg.map_res,
        husimi_res: cfg.husimi_res,
        t_total: cfg.t_total,
        dt: cfg.dt,
        n_max: match cfg.n_max {
            NMax::Auto => None,
            NMax::Fixed(n) => Some(n),
        },
        integrator: cfg.integrator(),
        section_res: cfg.section_res,
        max_crossings: cfg.max_crossings,
        seed_res: cfg.seed_res,
        husimi_dt: cfg.husimi_dt,
        snapshot_times: cfg.snapshot_times.clone(),
        workers: cfg.worker_count(),
    }
}

/// Figure runs take their physical parameters from the figure itself; the
/// configuration supplies resolution, horizon and tolerances.
pub fn cmd_figure(cfg: &RunConfig, id: FigureId) -> Result<Manifest> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    cfg.write_resolved()?;
    run_figure_suite(id, &suite_options(cfg), &cfg.out_dir, cfg.pairs())
}
