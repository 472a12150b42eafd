//! Phase-space sweeps: time-averaged entropy maps, Lyapunov maps on the same
//! energy-shell seeds, and the statistic that compares them.

mod checkpoint;
pub mod figures;

pub use checkpoint::Checkpoint;

use serde::{Deserialize, Serialize};

use crate::classical::{
    check_interior, lyapunov_exponent, section_seeds, solve_energy_shell, ClassicalState,
    IntegratorConfig, LyapunovEstimate, CHAOS_THRESHOLD,
};
use crate::error::{Error, Result, Warning};
use crate::grid::{population_stats, GridSpec, PhaseGrid};
use crate::model::ModelParams;
use crate::parallel::par_map;
use crate::quantum::{time_averaged_entropy, QuantumModel};

pub const DEFAULT_MAP_RES: usize = 51;
pub const DEFAULT_T: f64 = 30.0;
pub const DEFAULT_DT: f64 = 0.05;

/// On-shell seed of each unmasked cell as `(row, col, state)`.
pub type ShellSeeds = Vec<(usize, usize, ClassicalState)>;

/// Everything that determines one map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub params: ModelParams,
    pub energy: f64,
    pub grid: GridSpec,
    pub t_total: f64,
    pub dt: f64,
    /// Divide output axes by `√j`.
    pub rescale: bool,
    pub integrator: IntegratorConfig,
    pub workers: usize,
}

impl SweepSpec {
    pub fn new(params: ModelParams, energy: f64, res: usize) -> Self {
        SweepSpec {
            params,
            energy,
            grid: GridSpec::new(res),
            t_total: DEFAULT_T,
            dt: DEFAULT_DT,
            rescale: false,
            integrator: IntegratorConfig::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.grid.validate()?;
        self.integrator.validate()?;
        if !self.energy.is_finite() {
            return Err(Error::InvalidParams("shell energy must be finite".into()));
        }
        if !(self.t_total > 0.0 && self.dt > 0.0) {
            return Err(Error::InvalidParams("T and dt must be positive".into()));
        }
        if self.dt > self.t_total / 10.0 {
            return Err(Error::InvalidParams(format!(
                "dt = {} exceeds T/10 = {}",
                self.dt,
                self.t_total / 10.0
            )));
        }
        Ok(())
    }

    /// Disk lattice with off-shell points masked, plus the on-shell seed of
    /// every unmasked cell as `(row, col, state)`.
    pub fn shell_grid(&self) -> Result<(PhaseGrid, ShellSeeds)> {
        self.validate()?;
        let mut grid = self.grid.disk_grid(&self.params)?;
        let mut seeds = Vec::new();
        for (r, c, q1, p1) in grid.active_points() {
            let probe = ClassicalState::new(q1, p1, 0.0, 0.0);
            let seed = match check_interior(&probe, &self.params) {
                Ok(()) => solve_energy_shell(q1, p1, self.energy, &self.params)?,
                Err(_) => None,
            };
            match seed {
                Some(s) => seeds.push((r, c, s)),
                None => grid.mask[[r, c]] = false,
            }
        }
        Ok((grid, seeds))
    }
}

/// A finished map with the non-fatal issues met along the way.
#[derive(Debug, Clone)]
pub struct MapOutput {
    pub grid: PhaseGrid,
    pub warnings: Vec<Warning>,
    /// Points dropped because their evaluation failed.
    pub failures: usize,
}

impl MapOutput {
    /// Grid with axes divided by `√j` when `rescale` is set.
    pub fn output_grid(&self, spec: &SweepSpec) -> PhaseGrid {
        if spec.rescale {
            self.grid.rescaled(&spec.params)
        } else {
            self.grid.clone()
        }
    }
}

type PointResult = Result<(f64, Vec<Warning>)>;

/// Evaluates `point` at every seed row by row, checkpointing after each row.
fn sweep_rows<F>(
    spec: &SweepSpec,
    kind: &str,
    checkpoint: Option<&Checkpoint>,
    point: F,
) -> Result<MapOutput>
where
    F: Fn(&ClassicalState) -> PointResult + Sync + Send,
{
    let (mut grid, seeds) = spec.shell_grid()?;
    let rows = grid.p1_axis.len();
    let mut warnings = Vec::new();
    let mut failures = 0;
    let mut first_row = 0;
    if let Some(ck) = checkpoint {
        if let Some(resumed) = ck.resume(spec, kind, &mut grid)? {
            first_row = resumed.rows_done;
            warnings = resumed.warnings;
            failures = resumed.failures;
        } else {
            ck.start(spec, kind)?;
        }
    }
    for r in first_row..rows {
        let row_seeds: Vec<&(usize, usize, ClassicalState)> =
            seeds.iter().filter(|(sr, ..)| *sr == r).collect();
        let results = par_map(&row_seeds, spec.workers, |(_, (_, _, s))| point(s))?;
        for (&&(_, c, s), res) in row_seeds.iter().zip(results) {
            match res {
                Ok((v, w)) if v.is_finite() => {
                    grid.values[[r, c]] = v;
                    warnings.extend(w);
                }
                Ok((v, _)) => {
                    grid.mask[[r, c]] = false;
                    failures += 1;
                    warnings.push(point_failure(kind, &s, &format!("non-finite value {v}")));
                }
                Err(e) => {
                    grid.mask[[r, c]] = false;
                    failures += 1;
                    warnings.push(point_failure(kind, &s, &e.to_string()));
                }
            }
        }
        if let Some(ck) = checkpoint {
            ck.record_row(spec, kind, &grid, r, &warnings, failures)?;
        }
    }
    Ok(MapOutput {
        grid,
        warnings,
        failures,
    })
}

fn point_failure(kind: &str, s: &ClassicalState, message: &str) -> Warning {
    Warning::PointFailure {
        context: format!("{kind} at q1 = {}, p1 = {}", s.q1, s.p1),
        message: message.to_string(),
    }
}

/// Time-averaged linear entropy `S_m` at every on-shell lattice point.
pub fn entropy_map(spec: &SweepSpec) -> Result<MapOutput> {
    spec.validate()?;
    entropy_map_with(&QuantumModel::new(&spec.params)?, spec, None)
}

/// As [`entropy_map`] with a prebuilt model and optional checkpointing.
pub fn entropy_map_with(
    model: &QuantumModel,
    spec: &SweepSpec,
    checkpoint: Option<&Checkpoint>,
) -> Result<MapOutput> {
    if model.params != spec.params {
        return Err(Error::InvalidParams(
            "model parameters differ from the sweep parameters".into(),
        ));
    }
    sweep_rows(spec, "entropy", checkpoint, |s| {
        let series = model.entropy_series(s, spec.t_total, spec.dt)?;
        Ok((time_averaged_entropy(&series)?, series.warnings))
    })
}

/// Largest Lyapunov exponent at every on-shell lattice point.
pub fn chaos_map(spec: &SweepSpec) -> Result<MapOutput> {
    chaos_map_with(spec, None)
}

pub fn chaos_map_with(spec: &SweepSpec, checkpoint: Option<&Checkpoint>) -> Result<MapOutput> {
    sweep_rows(spec, "lyapunov", checkpoint, |s| {
        Ok((
            lyapunov_exponent(s, &spec.params, &spec.integrator)?.lambda,
            Vec::new(),
        ))
    })
}

/// Entropy and chaos maps over one lattice with a common mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPair {
    pub entropy: PhaseGrid,
    pub chaos: PhaseGrid,
}

impl MapPair {
    /// Joins two maps, masking any point missing from either.
    pub fn new(entropy: PhaseGrid, chaos: PhaseGrid) -> Result<Self> {
        if entropy.q1_axis != chaos.q1_axis || entropy.p1_axis != chaos.p1_axis {
            return Err(Error::InvalidParams(
                "entropy and chaos maps use different lattices".into(),
            ));
        }
        let mask = ndarray::Zip::from(&entropy.mask)
            .and(&chaos.mask)
            .map_collect(|&a, &b| a && b);
        let entropy = PhaseGrid {
            mask: mask.clone(),
            ..entropy
        };
        let chaos = PhaseGrid { mask, ..chaos };
        Ok(MapPair { entropy, chaos })
    }

    /// `(S_m, chaotic)` for every unmasked point.
    pub fn samples(&self) -> Vec<(f64, bool)> {
        self.entropy
            .active_values()
            .into_iter()
            .zip(self.chaos.active_values())
            .map(|(s, l)| (s, l > CHAOS_THRESHOLD))
            .collect()
    }

    pub fn chaotic_fraction(&self) -> f64 {
        let s = self.samples();
        s.iter().filter(|x| x.1).count() as f64 / s.len().max(1) as f64
    }
}

/// Point-biserial correlation between the chaos label and `S_m`.
///
/// Fails with [`Error::DegenerateLabels`] when every point carries the same
/// label; returns 0 when `S_m` has no spread.
pub fn correspondence_score(pair: &MapPair) -> Result<f64> {
    point_biserial(&pair.samples())
}

pub fn point_biserial(samples: &[(f64, bool)]) -> Result<f64> {
    let n1 = samples.iter().filter(|s| s.1).count();
    let n0 = samples.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::DegenerateLabels);
    }
    let values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (_, var) = population_stats(&values);
    if var <= 0.0 {
        return Ok(0.0);
    }
    let mean_of = |label: bool| {
        let xs: Vec<f64> = samples
            .iter()
            .filter(|s| s.1 == label)
            .map(|s| s.0)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    };
    let (p, q) = (
        n1 as f64 / samples.len() as f64,
        n0 as f64 / samples.len() as f64,
    );
    Ok(((mean_of(true) - mean_of(false)) / var.sqrt() * (p * q).sqrt()).clamp(-1.0, 1.0))
}

/// Fraction of unmasked points with `λ > λ_c`.
pub fn chaotic_fraction(chaos: &PhaseGrid) -> f64 {
    let v = chaos.active_values();
    v.iter().filter(|&&l| l > CHAOS_THRESHOLD).count() as f64 / v.len().max(1) as f64
}

/// On-shell seeds ranked by their Lyapunov exponent, most regular first.
#[derive(Debug, Clone)]
pub struct RankedSeeds {
    pub seeds: Vec<(ClassicalState, LyapunovEstimate)>,
}

impl RankedSeeds {
    /// Classifies a `res × res` section-seed layout on the shell `energy`.
    pub fn classify(
        params: &ModelParams,
        energy: f64,
        res: usize,
        cfg: &IntegratorConfig,
        workers: usize,
    ) -> Result<Self> {
        let candidates = section_seeds(params, energy, res);
        let estimates = par_map(&candidates, workers, |(_, s)| {
            lyapunov_exponent(s, params, cfg)
        })?;
        let mut seeds: Vec<_> = candidates
            .into_iter()
            .zip(estimates)
            .filter_map(|(s, e)| e.ok().map(|e| (s, e)))
            .collect();
        seeds.sort_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda));
        if seeds.is_empty() {
            return Err(Error::InvalidParams(format!(
                "no classifiable seeds on the shell E = {energy}"
            )));
        }
        Ok(RankedSeeds { seeds })
    }

    pub fn most_chaotic(&self, k: usize) -> Vec<(ClassicalState, LyapunovEstimate)> {
        self.seeds.iter().rev().take(k).copied().collect()
    }

    pub fn most_regular(&self, k: usize) -> Vec<(ClassicalState, LyapunovEstimate)> {
        self.seeds.iter().take(k).copied().collect()
    }

    pub fn chaotic_fraction(&self) -> f64 {
        self.seeds.iter().filter(|s| s.1.is_chaotic()).count() as f64 / self.seeds.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_of(values: &[f64]) -> PhaseGrid {
        let n = values.len();
        PhaseGrid {
            q1_axis: (0..n).map(|k| k as f64).collect(),
            p1_axis: vec![0.0],
            values: ndarray::Array2::from_shape_vec((1, n), values.to_vec()).unwrap(),
            mask: ndarray::Array2::from_elem((1, n), true),
        }
    }

    #[test]
    fn score_of_identical_labels_and_values_is_one() {
        let labels = [0.0, 1.0, 1.0, 0.0, 1.0];
        let lam: Vec<f64> = labels
            .iter()
            .map(|&l| if l > 0.5 { 0.3 } else { 0.0 })
            .collect();
        let pair = MapPair::new(grid_of(&labels), grid_of(&lam)).unwrap();
        assert!((correspondence_score(&pair).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_entropy_scores_zero() {
        let pair = MapPair::new(grid_of(&[0.4; 4]), grid_of(&[0.0, 0.2, 0.0, 0.2])).unwrap();
        assert_eq!(correspondence_score(&pair).unwrap(), 0.0);
    }

    #[test]
    fn single_label_is_degenerate() {
        let pair = MapPair::new(grid_of(&[0.1, 0.2]), grid_of(&[0.0, 0.0])).unwrap();
        assert_eq!(correspondence_score(&pair), Err(Error::DegenerateLabels));
    }

    #[test]
    fn score_matches_pearson_with_binary_variable() {
        let s = [0.1, 0.5, 0.35, 0.05, 0.6, 0.2, 0.45];
        let l = [false, true, true, false, true, false, false];
        let samples: Vec<(f64, bool)> = s.iter().copied().zip(l.iter().copied()).collect();
        let x: Vec<f64> = l.iter().map(|&b| f64::from(u8::from(b))).collect();
        let (mx, vx) = population_stats(&x);
        let (my, vy) = population_stats(&s);
        let cov = x
            .iter()
            .zip(&s)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / s.len() as f64;
        let pearson = cov / (vx * vy).sqrt();
        assert!((point_biserial(&samples).unwrap() - pearson).abs() < 1e-14);
    }

    #[test]
    fn pair_intersects_masks() {
        let mut a = grid_of(&[0.1, 0.2, 0.3]);
        let mut b = grid_of(&[0.0, 0.5, 0.0]);
        a.mask[[0, 0]] = false;
        b.mask[[0, 2]] = false;
        let pair = MapPair::new(a, b).unwrap();
        assert_eq!(pair.entropy.mask, pair.chaos.mask);
        assert_eq!(pair.samples(), vec![(0.2, true)]);
    }

    #[test]
    fn spec_rejects_coarse_sampling() {
        let p = ModelParams::two_photon(0.3, 2, 10).unwrap();
        let mut spec = SweepSpec::new(p, 1.0, 5);
        spec.dt = 5.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn shell_mask_matches_negative_numerator() {
        let p = ModelParams::two_photon(0.3, 10, 10).unwrap();
        let spec = SweepSpec::new(p, 1.0, 21);
        let (grid, seeds) = spec.shell_grid().unwrap();
        let disk = spec.grid.disk_grid(&p).unwrap();
        for (r, c, q1, p1) in disk.active_points() {
            let numerator = 1.0 - 0.5 * p.omega0 * (q1 * q1 + p1 * p1 - 2.0 * p.j());
            assert_eq!(grid.mask[[r, c]], numerator >= 0.0, "({q1}, {p1})");
        }
        assert_eq!(seeds.len(), grid.active_count());
    }

    #[test]
    fn decoupled_maps_vanish_and_share_mask() {
        let p = ModelParams::two_photon(0.0, 2, 24).unwrap();
        let mut spec = SweepSpec::new(p, 1.0, 7);
        spec.t_total = 5.0;
        spec.dt = 0.1;
        spec.integrator = spec.integrator.with_t_max(200.0);
        let e = entropy_map(&spec).unwrap();
        let l = chaos_map(&spec).unwrap();
        assert_eq!(e.grid.mask, l.grid.mask);
        assert!(e.grid.active_values().iter().all(|&v| v.abs() <= 1e-12));
        assert!(l.grid.active_values().iter().all(|&v| v.abs() <= 1e-3));
        assert_eq!(e.failures + l.failures, 0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = ModelParams::two_photon(0.3, 2, 20).unwrap();
        let mut spec = SweepSpec::new(p, 1.0, 6);
        spec.t_total = 3.0;
        spec.dt = 0.1;
        let serial = entropy_map(&spec).unwrap().grid;
        spec.workers = 3;
        let parallel = entropy_map(&spec).unwrap().grid;
        assert_eq!(crate::io::map_csv(&serial), crate::io::map_csv(&parallel));
    }
}
