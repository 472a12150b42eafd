use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::{EighInto, UPLO};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::coherent::CUTOFF_BUDGET;
use super::spectral::QuantumModel;
use super::{top_fock_population, QuantumState};
use crate::classical::ClassicalState;
use crate::error::{Error, Result, Warning};
use crate::model::ModelParams;

/// Eigenvalues in `[−NEGATIVE_CLAMP, 0)` are treated as round-off and set to zero.
const NEGATIVE_CLAMP: f64 = 1e-10;

/// Highest photon layers watched for truncation leakage.
const LEAKAGE_LAYERS: usize = 2;

/// Density matrix of one subsystem after tracing out the other.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    pub matrix: Array2<C64>,
}

impl ReducedDensity {
    /// Checks Hermiticity, unit trace and positivity before wrapping.
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(Error::DimensionMismatch {
                expected: r,
                got: c,
            });
        }
        let herm = (0..r)
            .flat_map(|i| (0..r).map(move |k| (i, k)))
            .map(|(i, k)| (matrix[[i, k]] - matrix[[k, i]].conj()).norm())
            .fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidParams(format!(
                "density matrix not Hermitian (defect {herm:e})"
            )));
        }
        let tr: f64 = (0..r).map(|i| matrix[[i, i]].re).sum();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let rho = ReducedDensity { matrix };
        let min = rho
            .raw_eigenvalues()?
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_CLAMP {
            return Err(Error::InvalidParams(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn raw_eigenvalues(&self) -> Result<Array1<f64>> {
        let (vals, _) = self
            .matrix
            .clone()
            .eigh_into(UPLO::Lower)
            .map_err(|e| Error::DiagonalizationFailure(e.to_string()))?;
        Ok(vals)
    }

    /// Ascending eigenvalues with round-off negativity clamped to zero.
    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        Ok(self.raw_eigenvalues()?.mapv(|x| {
            if (-NEGATIVE_CLAMP..0.0).contains(&x) {
                0.0
            } else {
                x
            }
        }))
    }

    /// `Tr ρ²`, computed as the squared Frobenius norm.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `Ψ Ψ†` for a `spin × fock` amplitude matrix.
fn gram(psi: ArrayView2<'_, C64>) -> Array2<C64> {
    let rows = psi.nrows();
    let mut out = Array2::zeros((rows, rows));
    for a in 0..rows {
        for b in a..rows {
            let v: C64 = psi
                .row(a)
                .iter()
                .zip(psi.row(b).iter())
                .map(|(x, y)| x * y.conj())
                .sum();
            out[[a, b]] = v;
            out[[b, a]] = v.conj();
        }
    }
    out
}

/// Atomic density matrix `ρ₁[m, m'] = Σ_n ψ[m, n] ψ*[m', n]`.
pub fn reduced_density(psi: &QuantumState) -> ReducedDensity {
    ReducedDensity {
        matrix: gram(psi.as_matrix()),
    }
}

pub(crate) fn reduced_density_of(psi: ArrayView2<'_, C64>) -> ReducedDensity {
    ReducedDensity { matrix: gram(psi) }
}

/// Field density matrix, tracing out the atoms.
pub fn field_reduced_density(psi: &QuantumState) -> ReducedDensity {
    ReducedDensity {
        matrix: gram(psi.as_matrix().t()),
    }
}

/// `S = 1 − Tr ρ²`, clamped to `[0, 1]`.
pub fn linear_entropy(rho: &ReducedDensity) -> f64 {
    (1.0 - rho.purity()).clamp(0.0, 1.0)
}

/// Purity of the atomic subsystem straight from the amplitude matrix,
/// contracting over whichever factor is smaller.
pub(crate) fn purity_of(psi: ArrayView2<'_, C64>) -> f64 {
    let g = if psi.nrows() <= psi.ncols() {
        gram(psi)
    } else {
        gram(psi.t())
    };
    g.iter().map(|z| z.norm_sqr()).sum()
}

/// Sampled linear entropy `S(t)` with cutoff diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest population seen in the top two photon layers.
    pub max_leakage: f64,
    pub warnings: Vec<Warning>,
}

/// `0, dt, 2dt, …, T`; `T` must be a whole number of steps.
pub fn sample_times(t_total: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "total time must be positive, got {t_total}"
        )));
    }
    if !(dt > 0.0 && dt <= t_total) {
        return Err(Error::InvalidParams(format!(
            "time step must lie in (0, T], got {dt}"
        )));
    }
    let steps = (t_total / dt).round();
    if (steps * dt - t_total).abs() > 1e-9 * t_total {
        return Err(Error::InvalidParams(format!(
            "T = {t_total} is not a whole multiple of dt = {dt}"
        )));
    }
    Ok((0..=steps as usize).map(|k| k as f64 * dt).collect())
}

impl QuantumModel {
    /// Entropy series of an already-built initial state.
    pub fn entropy_series_from(&self, psi0: &QuantumState, times: &[f64]) -> Result<EntropySeries> {
        let mut values = Vec::with_capacity(times.len());
        let mut max_leakage: f64 = 0.0;
        self.for_each_evolved(psi0, times, |_, psi| {
            max_leakage = max_leakage.max(top_fock_population(psi, LEAKAGE_LAYERS));
            values.push((1.0 - purity_of(psi)).clamp(0.0, 1.0));
            Ok(())
        })?;
        let mut warnings = Vec::new();
        if max_leakage > CUTOFF_BUDGET {
            warnings.push(Warning::Cutoff {
                context: "evolved state, top photon layers".into(),
                weight: max_leakage,
            });
        }
        Ok(EntropySeries {
            times: times.to_vec(),
            values,
            max_leakage,
            warnings,
        })
    }

    pub fn entropy_series(
        &self,
        s: &ClassicalState,
        t_total: f64,
        dt: f64,
    ) -> Result<EntropySeries> {
        let times = sample_times(t_total, dt)?;
        let coherent = self.coherent(s)?;
        let mut series = self.entropy_series_from(&coherent.state, &times)?;
        if let Some(w) = coherent.warning() {
            series.warnings.insert(0, w);
        }
        Ok(series)
    }
}

/// `S(t)` on `t = 0, dt, …, T` for the coherent state centred on `s`.
/// Diagonalizes the Hamiltonian; reuse a [`QuantumModel`] for repeated calls.
pub fn entropy_series(
    s: &ClassicalState,
    params: &ModelParams,
    t_total: f64,
    dt: f64,
) -> Result<EntropySeries> {
    QuantumModel::new(params)?.entropy_series(s, t_total, dt)
}

/// `(1/T) ∫ S dt` by the composite trapezoid rule on a uniform series.
pub fn time_averaged_entropy(series: &EntropySeries) -> Result<f64> {
    let (t, v) = (&series.times, &series.values);
    if t.is_empty() || t.len() != v.len() {
        return Err(Error::InvalidParams(
            "entropy series is empty or ragged".into(),
        ));
    }
    if t.len() == 1 {
        return Ok(v[0]);
    }
    let span = t[t.len() - 1] - t[0];
    let dt = span / (t.len() - 1) as f64;
    if t.windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0))
    {
        return Err(Error::InvalidParams(
            "entropy series is not uniformly sampled".into(),
        ));
    }
    let inner: f64 = v[1..v.len() - 1].iter().sum();
    Ok(dt * (0.5 * (v[0] + v[v.len() - 1]) + inner) / span)
}
