use serde::{Deserialize, Serialize};

use super::ode::Dop853;
use super::{check_interior, rhs, solve_energy_shell, ClassicalState, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::parallel::par_map;

/// One crossing of the section plane `p2 = 0` with `ṗ2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub q1: f64,
    pub p1: f64,
    pub t_cross: f64,
    pub seed_id: usize,
}

/// Section points of a batch of seeds plus per-seed failures.
#[derive(Debug, Clone, Default)]
pub struct SectionBatch {
    pub points: Vec<SectionPoint>,
    pub failures: Vec<(usize, Error)>,
}

const ROOT_TOL: f64 = 1e-10;

/// Seeds for a section plot: a `res × res` grid over the atomic disk, keeping
/// points strictly inside the disk that lie on the energy shell.
pub fn section_seeds(params: &ModelParams, energy: f64, res: usize) -> Vec<ClassicalState> {
    let radius = (4.0 * params.j()).sqrt();
    let axis = crate::grid::uniform_axis(-radius, radius, res);
    let mut seeds = Vec::new();
    for &p1 in &axis {
        for &q1 in &axis {
            let probe = ClassicalState::new(q1, p1, 0.0, 0.0);
            if check_interior(&probe, params).is_err()
                || probe.radius_sq() >= 4.0 * params.j() * 0.999
            {
                continue;
            }
            if let Ok(Some(s)) = solve_energy_shell(q1, p1, energy, params) {
                seeds.push(s);
            }
        }
    }
    seeds
}

fn single_seed(
    seed_id: usize,
    s0: &ClassicalState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    max_crossings: usize,
) -> Result<Vec<SectionPoint>> {
    check_interior(s0, params)?;
    let mut stepper = Dop853::new(
        rhs(params),
        0.0,
        s0.to_array(),
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_step,
    )?;
    let mut points = Vec::new();
    let mut prev_p2 = s0.p2;
    while stepper.t() < cfg.t_max && points.len() < max_crossings {
        stepper.step(cfg.t_max)?;
        let p2 = stepper.y()[3];
        if prev_p2 < 0.0 && p2 >= 0.0 {
            let dense = stepper.dense_step()?;
            // bracketed root of p2(t) on [t0, t0 + h]
            let (mut lo, mut hi) = (dense.t0, dense.t0 + dense.h);
            let (mut f_lo, mut f_hi) = (prev_p2, p2);
            let mut t_root = hi;
            let mut state = *stepper.y();
            for _ in 0..200 {
                // Illinois-style regula falsi with a bisection fallback
                let mut t = hi - f_hi * (hi - lo) / (f_hi - f_lo);
                if !(t > lo && t < hi) {
                    t = 0.5 * (lo + hi);
                }
                state = dense.eval(t);
                t_root = t;
                let f = state[3];
                if f.abs() <= ROOT_TOL {
                    break;
                }
                if f < 0.0 {
                    lo = t;
                    f_lo = f;
                    f_hi *= 0.5;
                } else {
                    hi = t;
                    f_hi = f;
                    f_lo *= 0.5;
                }
            }
            points.push(SectionPoint {
                q1: state[0],
                p1: state[1],
                t_cross: t_root,
                seed_id,
            });
        }
        prev_p2 = p2;
    }
    Ok(points)
}

/// Records section crossings for every seed. Seeds are processed
/// independently on `workers` threads; output order follows seed order.
pub fn poincare_section(
    seeds: &[ClassicalState],
    params: &ModelParams,
    cfg: &IntegratorConfig,
    max_crossings: usize,
    workers: usize,
) -> Result<SectionBatch> {
    cfg.validate()?;
    params.validate()?;
    let energies = seeds
        .iter()
        .map(|s| super::classical_hamiltonian(s, params))
        .collect::<Result<Vec<_>>>()?;
    if let Some(&e0) = energies.first() {
        if let Some(bad) = energies
            .iter()
            .find(|&&e| (e - e0).abs() > 1e-10 * e0.abs().max(1.0))
        {
            return Err(Error::InvalidParams(format!(
                "section seeds lie on different energy shells ({e0} vs {bad})"
            )));
        }
    }
    let results = par_map(seeds, workers, |(id, s)| {
        single_seed(id, s, params, cfg, max_crossings)
    })?;
    let mut batch = SectionBatch::default();
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(pts) => batch.points.extend(pts),
            Err(e) => batch.failures.push((id, e)),
        }
    }
    Ok(batch)
}
