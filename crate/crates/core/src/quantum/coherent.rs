use ndarray::Array1;
use num_complex::Complex64 as C64;

use super::QuantumState;
use crate::error::{Error, Result, Warning};
use crate::model::ModelParams;

/// Largest truncated weight tolerated before a cutoff warning is raised.
pub const CUTOFF_BUDGET: f64 = 1e-8;

/// `ln k!` for `k = 0..=n`.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Builds `Σ_k exp(log_mag[k] + i·phase·k)` normalized, working in log space so
/// large `|τ|` or `|β|` do not overflow.
fn normalize_log_amplitudes(log_mag: &[f64], phase: f64) -> Array1<C64> {
    let top = log_mag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut v: Array1<C64> = log_mag
        .iter()
        .enumerate()
        .map(|(k, &l)| C64::from_polar((l - top).exp(), phase * k as f64))
        .collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.mapv_inplace(|a| a / n);
    v
}

/// Normalized SU(2) coherent state `∝ e^{τJ₊}|j,−j⟩` with
/// `τ = (q1 + i p1)/√(4j − q1² − p1²)`, indexed by `m_index = j + m`.
pub fn atomic_coherent_amplitudes(q1: f64, p1: f64, n_atoms: usize) -> Result<Array1<C64>> {
    let j = n_atoms as f64 / 2.0;
    let r2 = q1 * q1 + p1 * p1;
    if r2.is_nan() || r2 >= 4.0 * j {
        return Err(Error::Domain {
            radius_sq: r2,
            limit: 4.0 * j,
        });
    }
    if r2 == 0.0 {
        let mut v = Array1::zeros(n_atoms + 1);
        v[0] = C64::new(1.0, 0.0);
        return Ok(v);
    }
    let tau = C64::new(q1, p1) / (4.0 * j - r2).sqrt();
    let (ln_tau, arg) = (tau.norm().ln(), tau.arg());
    let lf = ln_factorials(n_atoms);
    let log_mag: Vec<f64> = (0..=n_atoms)
        .map(|k| 0.5 * (lf[n_atoms] - lf[k] - lf[n_atoms - k]) + k as f64 * ln_tau)
        .collect();
    Ok(normalize_log_amplitudes(&log_mag, arg))
}

/// Glauber state `∝ Σ βⁿ/√n! |n⟩` with `β = (q2 + i p2)/√2`, truncated at
/// `n_max` and renormalized. Also returns the Poisson weight lost beyond the cutoff.
pub fn bosonic_coherent_amplitudes(q2: f64, p2: f64, n_max: usize) -> (Array1<C64>, f64) {
    let beta = C64::new(q2, p2) / 2f64.sqrt();
    let mu = beta.norm_sqr();
    if mu == 0.0 {
        let mut v = Array1::zeros(n_max + 1);
        v[0] = C64::new(1.0, 0.0);
        return (v, 0.0);
    }
    let lf = ln_factorials(n_max);
    let ln_b = beta.norm().ln();
    let log_mag: Vec<f64> = (0..=n_max).map(|n| n as f64 * ln_b - 0.5 * lf[n]).collect();
    (
        normalize_log_amplitudes(&log_mag, beta.arg()),
        poisson_tail(mu, n_max),
    )
}

/// `P(n > n_max)` for a Poisson distribution of mean `mu`.
fn poisson_tail(mu: f64, n_max: usize) -> f64 {
    let ln_mu = mu.ln();
    let mut ln_fact: f64 = (1..=n_max + 1).map(|k| (k as f64).ln()).sum();
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = (-mu + n as f64 * ln_mu - ln_fact).exp();
        tail += term;
        if (n as f64 > mu && term <= 1e-18 * tail.max(1e-300)) || n > n_max + 100_000 {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
    }
    tail.min(1.0)
}

/// Product coherent state `|τ⟩ ⊗ |β⟩` and its cutoff diagnostics.
#[derive(Debug, Clone)]
pub struct CoherentState {
    pub state: QuantumState,
    /// Photon-number weight beyond `n_max` before renormalization.
    pub tail_weight: f64,
}

impl CoherentState {
    pub fn warning(&self) -> Option<Warning> {
        (self.tail_weight > CUTOFF_BUDGET).then(|| Warning::Cutoff {
            context: "initial coherent state".into(),
            weight: self.tail_weight,
        })
    }
}

/// Coherent initial state centred on the classical point `(q1, p1, q2, p2)`.
pub fn coherent_state(
    q1: f64,
    p1: f64,
    q2: f64,
    p2: f64,
    params: &ModelParams,
) -> Result<CoherentState> {
    params.validate()?;
    let atomic = atomic_coherent_amplitudes(q1, p1, params.n_atoms)?;
    let (field, tail_weight) = bosonic_coherent_amplitudes(q2, p2, params.n_max);
    let mut amps = Array1::zeros(params.dim());
    let f = params.fock_dim();
    for (mi, a) in atomic.iter().enumerate() {
        for (n, b) in field.iter().enumerate() {
            amps[mi * f + n] = a * b;
        }
    }
    Ok(CoherentState {
        state: QuantumState::normalized(amps, params)?,
        tail_weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_operators;
    use crate::quantum::quantum_expectation;

    #[test]
    fn origin_is_ground_product_state() {
        let p = ModelParams::two_photon(0.3, 6, 12).unwrap();
        let c = coherent_state(0.0, 0.0, 0.0, 0.0, &p).unwrap();
        assert_eq!(c.state.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(
            c.state
                .amplitudes()
                .iter()
                .filter(|a| a.norm() > 0.0)
                .count(),
            1
        );
        assert_eq!(c.tail_weight, 0.0);
    }

    #[test]
    fn spin_projection_matches_classical_radius() {
        let p = ModelParams::two_photon(0.3, 10, 40).unwrap();
        let ops = build_operators(&p).unwrap();
        for (q1, p1) in [(0.3, 0.2), (1.5, -2.0), (-3.0, 2.5), (4.0, -1.5)] {
            let c = coherent_state(q1, p1, 1.0, 0.5, &p).unwrap();
            let jz = quantum_expectation(&c.state, &ops.jz).unwrap();
            let expected = 0.5 * (q1 * q1 + p1 * p1) - p.j();
            assert!((jz.re - expected).abs() <= 1e-10, "{} vs {expected}", jz.re);
        }
    }

    #[test]
    fn photon_number_is_poissonian_mean() {
        let p = ModelParams::two_photon(0.3, 2, 80).unwrap();
        let ops = build_operators(&p).unwrap();
        let n_op = ops.a_dag.matmul(&ops.a).unwrap();
        for (q2, p2) in [(1.0, 0.0), (3.0, -2.0), (5.0, 4.0)] {
            let c = coherent_state(0.5, 0.5, q2, p2, &p).unwrap();
            assert!(c.tail_weight < 1e-10);
            let n = quantum_expectation(&c.state, &n_op).unwrap().re;
            assert!((n - 0.5 * (q2 * q2 + p2 * p2)).abs() <= 1e-8);
        }
    }

    #[test]
    fn cutoff_warning_on_heavy_tail() {
        let p = ModelParams::two_photon(0.3, 2, 10).unwrap();
        let c = coherent_state(0.0, 0.0, 6.0, 0.0, &p).unwrap();
        assert!(c.tail_weight > 0.1);
        assert!(matches!(c.warning(), Some(Warning::Cutoff { .. })));
        assert!((c.state.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn poisson_tail_matches_direct_sum() {
        let mu: f64 = 7.5;
        let direct: f64 = (0..=12)
            .map(|n| (-mu + n as f64 * mu.ln() - ln_factorials(n)[n]).exp())
            .sum();
        assert!((poisson_tail(mu, 12) - (1.0 - direct)).abs() < 1e-14);
    }

    #[test]
    fn near_boundary_is_finite() {
        let a = atomic_coherent_amplitudes(4.4721, 0.0, 10).unwrap();
        assert!(a.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
        assert!(atomic_coherent_amplitudes(5.0, 0.0, 10).is_err());
    }
}
