use serde::{Deserialize, Serialize};

use super::ode::Dop853;
use super::{check_interior, equations_of_motion, hessian, ClassicalState, IntegratorConfig};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Exponents above this value label a seed as chaotic.
pub const CHAOS_THRESHOLD: f64 = 0.01;

/// Tangent vectors are renormalized after every interval of this length.
pub const RENORM_INTERVAL: f64 = 1.0;

/// Largest Lyapunov exponent with a first-half/second-half error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub stderr: f64,
    pub first_half: f64,
    pub second_half: f64,
}

impl LyapunovEstimate {
    pub fn is_chaotic(&self) -> bool {
        chaos_label(self.lambda)
    }
}

pub fn chaos_label(lambda: f64) -> bool {
    lambda > CHAOS_THRESHOLD
}

/// Linearized flow `δ̇ = Ω · Hess(H) · δ` in `[q1, p1, q2, p2]` order.
fn tangent(h: &[[f64; 4]; 4], d: &[f64]) -> [f64; 4] {
    let row = |r: usize| (0..4).map(|c| h[r][c] * d[c]).sum::<f64>();
    [row(1), -row(0), row(3), -row(2)]
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Gram–Schmidt on `K` packed 4-vectors in place; returns the log of each
/// vector's norm after projecting out its predecessors.
fn orthonormalize<const K: usize>(v: &mut [f64], t: f64) -> Result<[f64; K]> {
    let mut stretch = [0.0; K];
    for (k, log_norm) in stretch.iter_mut().enumerate() {
        let off = 4 * k;
        for prev in 0..k {
            let poff = 4 * prev;
            let dot: f64 = (0..4).map(|i| v[off + i] * v[poff + i]).sum();
            for i in 0..4 {
                v[off + i] -= dot * v[poff + i];
            }
        }
        let n = norm(&v[off..off + 4]);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::StepFailure {
                t,
                reason: "degenerate tangent vector".into(),
            });
        }
        *log_norm = n.ln();
        for x in &mut v[off..off + 4] {
            *x /= n;
        }
    }
    Ok(stretch)
}

/// Evolves the base trajectory with `K` tangent vectors, Gram–Schmidt
/// orthonormalizing them every [`RENORM_INTERVAL`]. Returns the per-interval
/// log stretch factors of each vector.
fn evolve_tangents<const K: usize, const M: usize>(
    s0: &ClassicalState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    init: [[f64; 4]; K],
) -> Result<Vec<[f64; K]>> {
    debug_assert_eq!(M, 4 + 4 * K);
    cfg.validate()?;
    check_interior(s0, params)?;
    let f = |_t: f64, y: &[f64; M]| -> Result<[f64; M]> {
        let base = ClassicalState::new(y[0], y[1], y[2], y[3]);
        let flow = equations_of_motion(&base, params)?;
        let h = hessian(&base, params)?;
        let mut out = [0.0; M];
        out[..4].copy_from_slice(&flow.to_array());
        for k in 0..K {
            let off = 4 + 4 * k;
            out[off..off + 4].copy_from_slice(&tangent(&h, &y[off..off + 4]));
        }
        Ok(out)
    };
    let mut y0 = [0.0; M];
    y0[..4].copy_from_slice(&s0.to_array());
    for (k, v) in init.iter().enumerate() {
        y0[4 + 4 * k..8 + 4 * k].copy_from_slice(v);
    }
    orthonormalize::<K>(&mut y0[4..], 0.0)?;
    let mut stepper = Dop853::new(
        f,
        0.0,
        y0,
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_step.min(RENORM_INTERVAL),
    )?;
    let intervals = (cfg.t_max / RENORM_INTERVAL).round() as usize;
    let mut logs = Vec::with_capacity(intervals);
    for n in 1..=intervals {
        let t_next = n as f64 * RENORM_INTERVAL;
        while stepper.t() < t_next {
            stepper.step(t_next)?;
        }
        let mut y = *stepper.y();
        logs.push(orthonormalize::<K>(&mut y[4..], t_next)?);
        stepper.reset(y)?;
    }
    Ok(logs)
}

const INITIAL_TANGENT: [f64; 4] = [0.5, 0.5, 0.5, 0.5];

/// Largest Lyapunov exponent by tangent-space renormalization over `cfg.t_max`.
pub fn lyapunov_exponent(
    s0: &ClassicalState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<LyapunovEstimate> {
    let logs = evolve_tangents::<1, 8>(s0, params, cfg, [INITIAL_TANGENT])?;
    if logs.len() < 2 {
        return Err(Error::InvalidParams(format!(
            "t_max = {} too short for the renormalization interval",
            cfg.t_max
        )));
    }
    let half = logs.len() / 2;
    let rate = |xs: &[[f64; 1]]| {
        xs.iter().map(|x| x[0]).sum::<f64>() / (xs.len() as f64 * RENORM_INTERVAL)
    };
    let lambda = rate(&logs);
    let first_half = rate(&logs[..half]);
    let second_half = rate(&logs[half..]);
    Ok(LyapunovEstimate {
        lambda,
        stderr: 0.5 * (second_half - first_half).abs(),
        first_half,
        second_half,
    })
}

/// All four exponents via Gram–Schmidt on a full tangent frame, in
/// descending order of the frame (not sorted). Used to check that the
/// exponents of a Hamiltonian flow sum to zero.
pub fn lyapunov_spectrum(
    s0: &ClassicalState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<[f64; 4]> {
    let frame = [
        [1.0, 0.3, -0.2, 0.1],
        [0.2, 1.0, 0.4, -0.3],
        [-0.1, 0.25, 1.0, 0.35],
        [0.3, -0.15, 0.2, 1.0],
    ];
    let logs = evolve_tangents::<4, 20>(s0, params, cfg, frame)?;
    let total = logs.len() as f64 * RENORM_INTERVAL;
    let mut out = [0.0; 4];
    for l in &logs {
        for k in 0..4 {
            out[k] += l[k];
        }
    }
    Ok(out.map(|x| x / total))
}
