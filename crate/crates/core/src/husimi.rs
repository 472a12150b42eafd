//! Atomic Husimi distribution `Q(q1, p1) = (1/π)⟨q1,p1|ρ₁|q1,p1⟩` on a
//! phase-space lattice, and its grid variance along a quantum evolution.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::classical::ClassicalState;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, PhaseGrid};
use crate::model::ModelParams;
use crate::quantum::{atomic_coherent_amplitudes, QuantumModel, ReducedDensity};

/// Default lattice resolution per axis.
pub const DEFAULT_HUSIMI_RES: usize = 101;

/// Coherent-state amplitudes for every unmasked lattice point, computed once
/// and reused for any number of density matrices.
#[derive(Debug, Clone)]
pub struct HusimiEvaluator {
    template: PhaseGrid,
    cells: Vec<(usize, usize)>,
    /// Row `k` holds the atomic coherent state of `cells[k]`.
    probes: Array2<C64>,
    conj_probes: Array2<C64>,
}

impl HusimiEvaluator {
    pub fn new(spec: &GridSpec, params: &ModelParams) -> Result<Self> {
        let template = spec.disk_grid(params)?;
        let points = template.active_points();
        let spin_dim = params.spin_dim();
        let mut probes = Array2::zeros((points.len(), spin_dim));
        for (k, &(_, _, q1, p1)) in points.iter().enumerate() {
            probes
                .row_mut(k)
                .assign(&atomic_coherent_amplitudes(q1, p1, params.n_atoms)?);
        }
        let conj_probes = probes.mapv(|z| z.conj());
        let cells = points.iter().map(|&(r, c, ..)| (r, c)).collect();
        Ok(HusimiEvaluator {
            template,
            cells,
            probes,
            conj_probes,
        })
    }

    pub fn point_count(&self) -> usize {
        self.cells.len()
    }

    /// Q values at the unmasked points, in the order of `active_points()`.
    pub fn values(&self, rho: &ReducedDensity) -> Result<Array1<f64>> {
        if rho.dim() != self.probes.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.probes.ncols(),
                got: rho.dim(),
            });
        }
        let b = self.conj_probes.dot(&rho.matrix);
        Ok((&b * &self.probes)
            .sum_axis(ndarray::Axis(1))
            .mapv(|z| (z.re / PI).max(0.0)))
    }

    pub fn evaluate(&self, rho: &ReducedDensity) -> Result<PhaseGrid> {
        let vals = self.values(rho)?;
        let mut grid = self.template.clone();
        for (&(r, c), &v) in self.cells.iter().zip(vals.iter()) {
            grid.values[[r, c]] = v;
        }
        Ok(grid)
    }

    /// Population variance of Q over the unmasked points.
    pub fn variance(&self, rho: &ReducedDensity) -> Result<f64> {
        let vals = self.values(rho)?;
        Ok(crate::grid::population_stats(vals.as_slice().expect("contiguous")).1)
    }
}

/// Husimi distribution of an atomic density matrix on the disk lattice.
pub fn husimi_q(rho: &ReducedDensity, spec: &GridSpec, params: &ModelParams) -> Result<PhaseGrid> {
    HusimiEvaluator::new(spec, params)?.evaluate(rho)
}

/// Grid variance of Q at each time, with optional full snapshots at the
/// time indices listed in `keep`.
#[derive(Debug, Clone)]
pub struct HusimiSeries {
    pub times: Vec<f64>,
    pub variances: Vec<f64>,
    pub snapshots: Vec<(f64, PhaseGrid)>,
}

impl QuantumModel {
    pub fn husimi_series(
        &self,
        s: &ClassicalState,
        times: &[f64],
        spec: &GridSpec,
        keep: &[usize],
    ) -> Result<HusimiSeries> {
        let eval = HusimiEvaluator::new(spec, &self.params)?;
        let psi0 = self.coherent(s)?.state;
        let mut variances = Vec::with_capacity(times.len());
        let mut snapshots = Vec::new();
        self.for_each_evolved(&psi0, times, |k, psi| {
            let rho = crate::quantum::reduced_density_of(psi);
            variances.push(eval.variance(&rho)?);
            if keep.contains(&k) {
                snapshots.push((times[k], eval.evaluate(&rho)?));
            }
            Ok(())
        })?;
        Ok(HusimiSeries {
            times: times.to_vec(),
            variances,
            snapshots,
        })
    }
}

/// Variance of the atomic Husimi distribution over the lattice at each time.
pub fn husimi_variance_series(
    s: &ClassicalState,
    params: &ModelParams,
    times: &[f64],
    spec: &GridSpec,
) -> Result<Vec<f64>> {
    Ok(QuantumModel::new(params)?
        .husimi_series(s, times, spec, &[])?
        .variances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{coherent_state, reduced_density};

    fn pure_atomic(q1: f64, p1: f64, n: usize) -> ReducedDensity {
        let a = atomic_coherent_amplitudes(q1, p1, n).unwrap();
        let m = Array2::from_shape_fn((n + 1, n + 1), |(i, k)| a[i] * a[k].conj());
        ReducedDensity::new(m).unwrap()
    }

    fn tau(q1: f64, p1: f64, j: f64) -> C64 {
        C64::new(q1, p1) / (4.0 * j - q1 * q1 - p1 * p1).sqrt()
    }

    #[test]
    fn south_pole_peaks_at_origin() {
        let p = ModelParams::two_photon(0.3, 10, 4).unwrap();
        let g = husimi_q(&pure_atomic(0.0, 0.0, 10), &GridSpec::new(21), &p).unwrap();
        assert!((g.values[[10, 10]] - 1.0 / PI).abs() < 1e-15);
        let max = g.values.iter().copied().fold(0.0, f64::max);
        assert_eq!(max, g.values[[10, 10]]);
    }

    #[test]
    fn maximally_mixed_is_flat() {
        let p = ModelParams::two_photon(0.3, 6, 4).unwrap();
        let rho = ReducedDensity::new(Array2::from_diag(&Array1::from_elem(
            7,
            C64::new(1.0 / 7.0, 0.0),
        )))
        .unwrap();
        let g = husimi_q(&rho, &GridSpec::new(31), &p).unwrap();
        for v in g.active_values() {
            assert!((v - 1.0 / (7.0 * PI)).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_closed_form_overlap() {
        let n = 8;
        let j = n as f64 / 2.0;
        let p = ModelParams::two_photon(0.3, n, 4).unwrap();
        let (q0, p0) = (1.2, -0.7);
        let rho = pure_atomic(q0, p0, n);
        let eval = HusimiEvaluator::new(&GridSpec::new(41), &p).unwrap();
        let vals = eval.values(&rho).unwrap();
        let pts = eval.template.active_points();
        let t0 = tau(q0, p0, j);
        for k in [
            0,
            pts.len() / 5,
            pts.len() / 3,
            pts.len() / 2,
            pts.len() - 1,
        ] {
            let (.., q1, p1) = pts[k];
            let t = tau(q1, p1, j);
            let overlap = (1.0 + t.conj() * t0).norm().powf(4.0 * j)
                / ((1.0 + t0.norm_sqr()).powf(2.0 * j) * (1.0 + t.norm_sqr()).powf(2.0 * j));
            assert!(
                (vals[k] - overlap / PI).abs() <= 1e-13,
                "{} vs {}",
                vals[k],
                overlap / PI
            );
        }
    }

    #[test]
    fn linear_and_bounded() {
        let n = 5;
        let p = ModelParams::two_photon(0.3, n, 4).unwrap();
        let (a, b) = (pure_atomic(0.5, 0.5, n), pure_atomic(-1.5, 2.0, n));
        let alpha = 0.3;
        let mix =
            ReducedDensity::new(&a.matrix * C64::from(alpha) + &b.matrix * C64::from(1.0 - alpha))
                .unwrap();
        let spec = GridSpec::new(25);
        let (ga, gb, gm) = (
            husimi_q(&a, &spec, &p).unwrap(),
            husimi_q(&b, &spec, &p).unwrap(),
            husimi_q(&mix, &spec, &p).unwrap(),
        );
        for ((x, y), z) in ga.values.iter().zip(gb.values.iter()).zip(gm.values.iter()) {
            assert!((alpha * x + (1.0 - alpha) * y - z).abs() <= 1e-12);
            assert!((0.0..=1.0 / PI + 1e-12).contains(z));
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let p = ModelParams::two_photon(0.3, 4, 4).unwrap();
        assert!(husimi_q(&pure_atomic(0.0, 0.0, 3), &GridSpec::new(11), &p).is_err());
    }

    #[test]
    fn variance_starts_at_maximum_for_coupled_evolution() {
        let p = ModelParams::two_photon(0.3, 4, 40).unwrap();
        let s = crate::classical::solve_energy_shell(0.5, 0.5, 4.0, &p)
            .unwrap()
            .unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        let v = husimi_variance_series(&s, &p, &times, &GridSpec::new(41)).unwrap();
        assert!(v.iter().skip(1).all(|&x| x < v[0]));
        let rho = reduced_density(&coherent_state(s.q1, s.p1, s.q2, s.p2, &p).unwrap().state);
        let direct = HusimiEvaluator::new(&GridSpec::new(41), &p)
            .unwrap()
            .variance(&rho)
            .unwrap();
        assert!((direct - v[0]).abs() <= 1e-15);
    }
}
