//! Quantum dynamics: coherent initial states, spectral propagation, reduced
//! density matrices and linear entanglement entropy.

mod coherent;
mod entropy;
mod spectral;

pub use coherent::{
    atomic_coherent_amplitudes, bosonic_coherent_amplitudes, coherent_state, CoherentState,
    CUTOFF_BUDGET,
};
pub(crate) use entropy::reduced_density_of;
pub use entropy::{
    entropy_series, field_reduced_density, linear_entropy, reduced_density, sample_times,
    time_averaged_entropy, EntropySeries, ReducedDensity,
};
pub use spectral::{propagate, QuantumModel, SpectralDecomposition};

use ndarray::{Array1, ArrayView2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::operator::OperatorMatrix;

/// Normalized amplitudes over the spin ⊗ Fock product basis, flat index
/// `m_index · (n_max + 1) + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Array1<C64>,
    spin_dim: usize,
    fock_dim: usize,
}

pub const NORM_TOL: f64 = 1e-12;

impl QuantumState {
    /// Wraps amplitudes, checking dimension and unit norm.
    pub fn new(amplitudes: Array1<C64>, params: &ModelParams) -> Result<Self> {
        let s = Self::from_parts(amplitudes, params.spin_dim(), params.fock_dim())?;
        let n = s.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParams(format!(
                "state norm {n} differs from 1"
            )));
        }
        Ok(s)
    }

    /// Wraps amplitudes and rescales them to unit norm.
    pub fn normalized(amplitudes: Array1<C64>, params: &ModelParams) -> Result<Self> {
        let mut s = Self::from_parts(amplitudes, params.spin_dim(), params.fock_dim())?;
        let n = s.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParams(
                "cannot normalize a zero or non-finite state".into(),
            ));
        }
        s.amplitudes.mapv_inplace(|a| a / n);
        Ok(s)
    }

    pub(crate) fn from_parts(
        amplitudes: Array1<C64>,
        spin_dim: usize,
        fock_dim: usize,
    ) -> Result<Self> {
        if amplitudes.len() != spin_dim * fock_dim {
            return Err(Error::DimensionMismatch {
                expected: spin_dim * fock_dim,
                got: amplitudes.len(),
            });
        }
        Ok(QuantumState {
            amplitudes,
            spin_dim,
            fock_dim,
        })
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Amplitudes as a `spin_dim × fock_dim` matrix.
    pub fn as_matrix(&self) -> ArrayView2<'_, C64> {
        self.amplitudes
            .view()
            .into_shape_with_order((self.spin_dim, self.fock_dim))
            .expect("contiguous state")
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &QuantumState) -> Result<C64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Population of the highest `layers` photon numbers kept by the cutoff.
    pub fn top_fock_population(&self, layers: usize) -> f64 {
        top_fock_population(self.as_matrix(), layers)
    }
}

pub(crate) fn top_fock_population(psi: ArrayView2<'_, C64>, layers: usize) -> f64 {
    let f = psi.ncols();
    let start = f.saturating_sub(layers);
    psi.rows()
        .into_iter()
        .map(|row| row.iter().skip(start).map(|a| a.norm_sqr()).sum::<f64>())
        .sum()
}

/// `⟨ψ|O|ψ⟩`.
pub fn quantum_expectation(psi: &QuantumState, op: &OperatorMatrix) -> Result<C64> {
    let v = op.matvec(psi.amplitudes())?;
    Ok(psi
        .amplitudes()
        .iter()
        .zip(v.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}
