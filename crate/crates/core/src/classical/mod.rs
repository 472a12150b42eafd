//! Classical limit of the Dicke models.
//!
//! Phase space is `(q1, p1)` for the collective spin (restricted to the disk
//! `q1² + p1² ≤ 4j`) and `(q2, p2)` for the field. The classical Hamiltonian is
//! the coherent-state expectation of the quantum one, which splits as
//!
//! ```text
//! H = (ω₀/2)(q1² + p1² − 2j) + (ω/2)(q2² + p2²) + κ · F(q1, p1) · W(q2, p2)
//! F = q1 √(4j − q1² − p1²)
//! ```
//!
//! with `κ = g/(2j)`, `W = q2² − p2²` for the two-photon coupling and
//! `κ = g/√j`, `W = q2` for the one-photon coupling.

mod lyapunov;
pub mod ode;
mod poincare;

pub use lyapunov::{
    chaos_label, lyapunov_exponent, lyapunov_spectrum, LyapunovEstimate, CHAOS_THRESHOLD,
};
pub use poincare::{poincare_section, section_seeds, SectionBatch, SectionPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};
use ode::{DenseStep, Dop853};

/// Relative distance from the disk edge at which trajectories are stopped.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// A point `(q1, p1, q2, p2)` of classical phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q1: f64,
    pub p1: f64,
    pub q2: f64,
    pub p2: f64,
}

impl ClassicalState {
    pub fn new(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        ClassicalState { q1, p1, q2, p2 }
    }

    pub fn radius_sq(&self) -> f64 {
        self.q1 * self.q1 + self.p1 * self.p1
    }

    /// Packs as `[q1, p1, q2, p2]`.
    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.p1, self.q2, self.p2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        ClassicalState {
            q1: a[0],
            p1: a[1],
            q2: a[2],
            p2: a[3],
        }
    }
}

/// Tolerances and horizon for classical integrations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            t_max: 1000.0,
            max_step: 10.0,
        }
    }
}

impl IntegratorConfig {
    pub fn with_t_max(self, t_max: f64) -> Self {
        IntegratorConfig { t_max, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParams(
                "integrator tolerances must be positive".into(),
            ));
        }
        if !(self.t_max > 0.0 && self.max_step > 0.0) {
            return Err(Error::InvalidParams(
                "t_max and max_step must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Coupling prefactor κ and the field factor `W` with its derivatives.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    kappa: f64,
    variant: Variant,
}

impl Coupling {
    fn new(params: &ModelParams) -> Self {
        let j = params.j();
        let kappa = match params.variant {
            Variant::TwoPhoton => params.g / (2.0 * j),
            Variant::OnePhoton => params.g / j.sqrt(),
        };
        Coupling {
            kappa,
            variant: params.variant,
        }
    }

    /// `(W, ∂W/∂q2, ∂W/∂p2, ∂²W/∂q2², ∂²W/∂p2²)`; the mixed derivative vanishes.
    fn field(&self, q2: f64, p2: f64) -> (f64, f64, f64, f64, f64) {
        match self.variant {
            Variant::TwoPhoton => (q2 * q2 - p2 * p2, 2.0 * q2, -2.0 * p2, 2.0, -2.0),
            Variant::OnePhoton => (q2, 1.0, 0.0, 0.0, 0.0),
        }
    }
}

/// `F = q1·s` with `s = √(4j − q1² − p1²)` and its first and second derivatives.
struct SpinFactor {
    f: f64,
    f_q: f64,
    f_p: f64,
    f_qq: f64,
    f_qp: f64,
    f_pp: f64,
}

impl SpinFactor {
    fn new(q1: f64, p1: f64, j: f64) -> Self {
        let r = 4.0 * j - q1 * q1 - p1 * p1;
        let s = r.max(0.0).sqrt();
        let s3 = s * s * s;
        SpinFactor {
            f: q1 * s,
            f_q: (r - q1 * q1) / s,
            f_p: -q1 * p1 / s,
            f_qq: -3.0 * q1 / s - q1 * q1 * q1 / s3,
            f_qp: -p1 / s - q1 * q1 * p1 / s3,
            f_pp: -q1 / s - q1 * p1 * p1 / s3,
        }
    }
}

fn check_disk(s: &ClassicalState, params: &ModelParams) -> Result<()> {
    let limit = 4.0 * params.j();
    let r2 = s.radius_sq();
    if r2.is_nan() || r2 > limit {
        return Err(Error::Domain {
            radius_sq: r2,
            limit,
        });
    }
    Ok(())
}

pub(crate) fn check_interior(s: &ClassicalState, params: &ModelParams) -> Result<()> {
    let limit = 4.0 * params.j();
    let r2 = s.radius_sq();
    if r2.is_nan() || r2 >= limit * (1.0 - BOUNDARY_GUARD) {
        return Err(Error::Domain {
            radius_sq: r2,
            limit,
        });
    }
    Ok(())
}

/// Classical energy of a phase-space point.
pub fn classical_hamiltonian(s: &ClassicalState, params: &ModelParams) -> Result<f64> {
    check_disk(s, params)?;
    let j = params.j();
    let c = Coupling::new(params);
    let spin = s.q1 * (4.0 * j - s.radius_sq()).max(0.0).sqrt();
    let (w, ..) = c.field(s.q2, s.p2);
    Ok(0.5 * params.omega0 * (s.radius_sq() - 2.0 * j)
        + 0.5 * params.omega * (s.q2 * s.q2 + s.p2 * s.p2)
        + c.kappa * spin * w)
}

/// Hamilton's equations: returns `(q̇1, ṗ1, q̇2, ṗ2)` packed as a state.
pub fn equations_of_motion(s: &ClassicalState, params: &ModelParams) -> Result<ClassicalState> {
    check_interior(s, params)?;
    let c = Coupling::new(params);
    let sp = SpinFactor::new(s.q1, s.p1, params.j());
    let (w, w_q, w_p, _, _) = c.field(s.q2, s.p2);
    let dh_dq1 = params.omega0 * s.q1 + c.kappa * w * sp.f_q;
    let dh_dp1 = params.omega0 * s.p1 + c.kappa * w * sp.f_p;
    let dh_dq2 = params.omega * s.q2 + c.kappa * sp.f * w_q;
    let dh_dp2 = params.omega * s.p2 + c.kappa * sp.f * w_p;
    Ok(ClassicalState {
        q1: dh_dp1,
        p1: -dh_dq1,
        q2: dh_dp2,
        p2: -dh_dq2,
    })
}

/// Hessian of the classical Hamiltonian in `[q1, p1, q2, p2]` order.
pub fn hessian(s: &ClassicalState, params: &ModelParams) -> Result<[[f64; 4]; 4]> {
    check_interior(s, params)?;
    let c = Coupling::new(params);
    let k = c.kappa;
    let sp = SpinFactor::new(s.q1, s.p1, params.j());
    let (w, w_q, w_p, w_qq, w_pp) = c.field(s.q2, s.p2);
    let mut h = [[0.0; 4]; 4];
    h[0][0] = params.omega0 + k * w * sp.f_qq;
    h[0][1] = k * w * sp.f_qp;
    h[1][1] = params.omega0 + k * w * sp.f_pp;
    h[0][2] = k * sp.f_q * w_q;
    h[0][3] = k * sp.f_q * w_p;
    h[1][2] = k * sp.f_p * w_q;
    h[1][3] = k * sp.f_p * w_p;
    h[2][2] = params.omega + k * sp.f * w_qq;
    h[3][3] = params.omega + k * sp.f * w_pp;
    for (r, c) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        h[c][r] = h[r][c];
    }
    Ok(h)
}

/// Finds the point on the section plane `p2 = 0` with the given `(q1, p1)` and
/// energy `E`, taking the non-negative `q2` branch. `Ok(None)` when the energy
/// shell does not reach that `(q1, p1)`.
pub fn solve_energy_shell(
    q1: f64,
    p1: f64,
    energy: f64,
    params: &ModelParams,
) -> Result<Option<ClassicalState>> {
    let probe = ClassicalState::new(q1, p1, 0.0, 0.0);
    check_disk(&probe, params)?;
    let j = params.j();
    let c = Coupling::new(params);
    let spin = q1 * (4.0 * j - probe.radius_sq()).max(0.0).sqrt();
    let atomic = 0.5 * params.omega0 * (probe.radius_sq() - 2.0 * j);
    let q2 = match params.variant {
        Variant::TwoPhoton => {
            let numerator = energy - atomic;
            let denominator = 0.5 * params.omega + c.kappa * spin;
            if numerator < 0.0 || denominator <= 0.0 {
                return Ok(None);
            }
            (numerator / denominator).sqrt()
        }
        Variant::OnePhoton => {
            // (ω/2) q2² + κF q2 + (atomic − E) = 0, larger root
            let b = c.kappa * spin;
            let disc = b * b - 2.0 * params.omega * (atomic - energy);
            if disc < 0.0 {
                return Ok(None);
            }
            (-b + disc.sqrt()) / params.omega
        }
    };
    Ok(Some(ClassicalState::new(q1, p1, q2, 0.0)))
}

pub(crate) fn rhs(params: &ModelParams) -> impl Fn(f64, &[f64; 4]) -> Result<[f64; 4]> + '_ {
    move |_t, y| equations_of_motion(&ClassicalState::from_array(*y), params).map(|d| d.to_array())
}

/// Dense trajectory produced by [`integrate`].
#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: Vec<DenseStep<4>>,
    initial: ClassicalState,
}

impl Trajectory {
    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t0 + s.h)
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// State at any `t ∈ [0, t_end]` by dense interpolation.
    pub fn state_at(&self, t: f64) -> Result<ClassicalState> {
        if t == 0.0 || self.steps.is_empty() {
            return Ok(self.initial);
        }
        if !(0.0..=self.t_end()).contains(&t) {
            return Err(Error::InvalidParams(format!(
                "t = {t} outside [0, {}]",
                self.t_end()
            )));
        }
        let k = self.steps.partition_point(|s| s.t0 + s.h < t);
        Ok(ClassicalState::from_array(
            self.steps[k.min(self.steps.len() - 1)].eval(t),
        ))
    }
}

/// Integrates Hamilton's equations from `s0` to `cfg.t_max` with an adaptive
/// 8(5,3) Dormand–Prince pair and keeps the dense output of every step.
pub fn integrate(
    s0: &ClassicalState,
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    check_interior(s0, params)?;
    let mut stepper = Dop853::new(
        rhs(params),
        0.0,
        s0.to_array(),
        cfg.rel_tol,
        cfg.abs_tol,
        cfg.max_step,
    )?;
    let mut steps = Vec::new();
    while stepper.t() < cfg.t_max {
        stepper.step(cfg.t_max)?;
        steps.push(stepper.dense_step()?);
    }
    Ok(Trajectory {
        steps,
        initial: *s0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> ModelParams {
        ModelParams::two_photon(0.3, 10, 20).unwrap()
    }

    #[test]
    fn origin_energy_is_minus_omega0_j() {
        let h = classical_hamiltonian(&ClassicalState::default(), &reference()).unwrap();
        assert_eq!(h, -10.0);
    }

    #[test]
    fn substitution_value() {
        let s = ClassicalState::new(10f64.sqrt(), 0.0, 1.0, 0.0);
        let h = classical_hamiltonian(&s, &reference()).unwrap();
        assert!((h - 0.8).abs() < 1e-14, "{h}");
    }

    #[test]
    fn field_at_rest_makes_energy_independent_of_g() {
        let s = ClassicalState::new(1.3, -0.4, 0.0, 0.0);
        let a = classical_hamiltonian(&s, &ModelParams::two_photon(0.0, 10, 20).unwrap()).unwrap();
        let b = classical_hamiltonian(&s, &ModelParams::two_photon(0.45, 10, 20).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outside_disk_is_domain_error() {
        let s = ClassicalState::new(4.0, 3.0, 0.0, 0.0);
        assert!(matches!(
            classical_hamiltonian(&s, &reference()),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            equations_of_motion(&s, &reference()),
            Err(Error::Domain { .. })
        ));
        let edge = ClassicalState::new(4.0, 2.0, 1.0, 0.0);
        assert!(classical_hamiltonian(&edge, &reference()).is_ok());
        assert!(equations_of_motion(&edge, &reference()).is_err());
    }

    #[test]
    fn decoupled_motion_is_harmonic() {
        let p = ModelParams::two_photon(0.0, 10, 20).unwrap();
        let s = ClassicalState::new(0.7, -1.1, 2.0, 0.5);
        let d = equations_of_motion(&s, &p).unwrap();
        assert_eq!(d.q1, 2.0 * s.p1);
        assert_eq!(d.p1, -2.0 * s.q1);
        assert_eq!(d.q2, s.p2);
        assert_eq!(d.p2, -s.q2);
    }

    #[test]
    fn balanced_field_quadratures_cancel_spin_force() {
        let s = ClassicalState::new(0.0, 0.0, 1.0, 1.0);
        let d = equations_of_motion(&s, &reference()).unwrap();
        assert_eq!(d.p1, 0.0);
    }

    fn random_interior(rng: &mut ChaCha8Rng, j: f64) -> ClassicalState {
        loop {
            let q1 = rng.gen_range(-2.0..2.0) * j.sqrt();
            let p1 = rng.gen_range(-2.0..2.0) * j.sqrt();
            if q1 * q1 + p1 * p1 < 4.0 * j * 0.95 {
                return ClassicalState::new(
                    q1,
                    p1,
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(-4.0..4.0),
                );
            }
        }
    }

    fn central_gradient(s: &ClassicalState, p: &ModelParams, h: f64) -> [f64; 4] {
        let mut g = [0.0; 4];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut plus = s.to_array();
            let mut minus = s.to_array();
            plus[k] += h;
            minus[k] -= h;
            *gk = (classical_hamiltonian(&ClassicalState::from_array(plus), p).unwrap()
                - classical_hamiltonian(&ClassicalState::from_array(minus), p).unwrap())
                / (2.0 * h);
        }
        g
    }

    #[test]
    fn equations_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [reference(), ModelParams::one_photon(0.5, 10, 20).unwrap()] {
            for _ in 0..100 {
                let s = random_interior(&mut rng, p.j());
                let grad = central_gradient(&s, &p, 1e-6);
                let d = equations_of_motion(&s, &p).unwrap();
                let expected = [grad[1], -grad[0], grad[3], -grad[2]];
                for (a, b) in d.to_array().iter().zip(expected.iter()) {
                    assert!((a - b).abs() <= 1e-7, "{a} vs {b} at {s:?}");
                }
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_flow() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [reference(), ModelParams::one_photon(0.5, 6, 20).unwrap()] {
            for _ in 0..50 {
                let s = random_interior(&mut rng, p.j());
                let h = hessian(&s, &p).unwrap();
                for k in 0..4 {
                    let step = 1e-6;
                    let mut plus = s.to_array();
                    let mut minus = s.to_array();
                    plus[k] += step;
                    minus[k] -= step;
                    let fp = equations_of_motion(&ClassicalState::from_array(plus), &p)
                        .unwrap()
                        .to_array();
                    let fm = equations_of_motion(&ClassicalState::from_array(minus), &p)
                        .unwrap()
                        .to_array();
                    // flow = (H_p1, −H_q1, H_p2, −H_q2)
                    let col = [h[1][k], -h[0][k], h[3][k], -h[2][k]];
                    for r in 0..4 {
                        let fd = (fp[r] - fm[r]) / (2.0 * step);
                        assert!(
                            (fd - col[r]).abs() <= 1e-6 * (1.0 + col[r].abs()),
                            "{fd} vs {}",
                            col[r]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn energy_shell_examples() {
        let p = reference();
        let s = solve_energy_shell(0.0, 0.0, -10.0, &p).unwrap().unwrap();
        assert_eq!(s.q2, 0.0);
        let s = solve_energy_shell(0.0, 0.0, 10.0, &p).unwrap().unwrap();
        assert!((s.q2 - 40f64.sqrt()).abs() < 1e-14);
        // atomic energy (ω₀/2)(r² − 2j) = 8 > E = 3
        assert_eq!(solve_energy_shell(3.0, 3.0, 3.0, &p).unwrap(), None);
        assert!(solve_energy_shell(4.0, 4.0, 3.0, &p).is_err());
    }

    #[test]
    fn energy_shell_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [reference(), ModelParams::one_photon(0.5, 10, 20).unwrap()] {
            let mut hits = 0;
            for _ in 0..500 {
                let s = random_interior(&mut rng, p.j());
                let e = rng.gen_range(-5.0..15.0);
                if let Some(on) = solve_energy_shell(s.q1, s.p1, e, &p).unwrap() {
                    hits += 1;
                    if p.variant == Variant::TwoPhoton {
                        assert!(on.q2 >= 0.0);
                    }
                    let back = classical_hamiltonian(&on, &p).unwrap();
                    assert!(
                        (back - e).abs() <= 1e-12 * e.abs().max(1.0),
                        "{back} vs {e}"
                    );
                }
            }
            assert!(hits > 100);
        }
    }

    #[test]
    fn decoupled_trajectory_is_analytic() {
        let p = ModelParams::two_photon(0.0, 10, 20).unwrap();
        let s0 = ClassicalState::new(1.0, 0.5, 2.0, -1.0);
        let traj = integrate(&s0, &p, &IntegratorConfig::default().with_t_max(100.0)).unwrap();
        for k in 0..=200 {
            let t = k as f64 * 0.5;
            let s = traj.state_at(t).unwrap();
            let (c0, s0w) = ((2.0 * t).cos(), (2.0 * t).sin());
            let (c1, s1w) = (t.cos(), t.sin());
            let exact = [
                c0 + 0.5 * s0w,
                0.5 * c0 - s0w,
                2.0 * c1 - s1w,
                -c1 - 2.0 * s1w,
            ];
            for (a, b) in s.to_array().iter().zip(exact.iter()) {
                assert!((a - b).abs() <= 1e-8, "t = {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let p = reference();
        let s0 = solve_energy_shell(0.5, 1.0, 1.0, &p).unwrap().unwrap();
        let cfg = IntegratorConfig::default().with_t_max(50.0);
        let fwd = integrate(&s0, &p, &cfg).unwrap().state_at(50.0).unwrap();
        // H is even in both momenta
        let rev = ClassicalState::new(fwd.q1, -fwd.p1, fwd.q2, -fwd.p2);
        let back = integrate(&rev, &p, &cfg).unwrap().state_at(50.0).unwrap();
        let back = ClassicalState::new(back.q1, -back.p1, back.q2, -back.p2);
        for (a, b) in back.to_array().iter().zip(s0.to_array().iter()) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }
}
