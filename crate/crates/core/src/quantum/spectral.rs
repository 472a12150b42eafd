use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;

use super::coherent::{coherent_state, CoherentState};
use super::QuantumState;
use crate::classical::ClassicalState;
use crate::error::{Error, Result};
use crate::model::{build_hamiltonian, build_parity, ModelParams};
use crate::operator::OperatorMatrix;

/// Eigen-components whose overlap with the initial state is below this
/// magnitude are skipped during propagation.
const DROP_TOL: f64 = 1e-15;

/// Number of output times evaluated per matrix product.
const TIME_CHUNK: usize = 256;

/// One block of a block-diagonal Hermitian matrix and its eigenpairs.
#[derive(Debug, Clone)]
struct Sector {
    indices: Vec<usize>,
    eigenvalues: Array1<f64>,
    vectors: Array2<f64>,
}

/// Eigendecomposition `H = V Λ Vᵀ` of a real symmetric operator.
///
/// The operator is split into the connected components of its sparsity
/// pattern (for the Dicke Hamiltonians these are the parity sectors) and each
/// component is diagonalized densely.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    dim: usize,
    sectors: Vec<Sector>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn connected_components(h: &OperatorMatrix) -> Vec<Vec<usize>> {
    let d = h.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    for (r, c, _) in h.entries() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..d {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

impl SpectralDecomposition {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        if !h.is_real() {
            return Err(Error::DiagonalizationFailure(
                "operator has complex entries; expected real symmetric".into(),
            ));
        }
        let scale = h.max_abs().max(1.0);
        if h.hermiticity_defect() > 1e-13 * scale {
            return Err(Error::DiagonalizationFailure(
                "operator is not symmetric".into(),
            ));
        }
        let mut sectors = Vec::new();
        for indices in connected_components(h) {
            let n = indices.len();
            let mut local = vec![usize::MAX; h.dim()];
            for (k, &i) in indices.iter().enumerate() {
                local[i] = k;
            }
            let mut block = Array2::<f64>::zeros((n, n));
            for (k, &i) in indices.iter().enumerate() {
                for (c, v) in h.row(i) {
                    block[[k, local[c]]] = v.re;
                }
            }
            let (eigenvalues, vectors) = block
                .eigh(UPLO::Lower)
                .map_err(|e| Error::DiagonalizationFailure(e.to_string()))?;
            if eigenvalues.iter().any(|x| !x.is_finite()) {
                return Err(Error::DiagonalizationFailure(
                    "non-finite eigenvalue".into(),
                ));
            }
            sectors.push(Sector {
                indices,
                eigenvalues,
                vectors,
            });
        }
        Ok(SpectralDecomposition {
            dim: h.dim(),
            sectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    /// `(eigenvalue, sector, column)` sorted ascending by eigenvalue.
    fn ordering(&self) -> Vec<(f64, usize, usize)> {
        let mut all: Vec<(f64, usize, usize)> = self
            .sectors
            .iter()
            .enumerate()
            .flat_map(|(s, sec)| {
                sec.eigenvalues
                    .iter()
                    .enumerate()
                    .map(move |(k, &e)| (e, s, k))
            })
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        all
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Array1<f64> {
        self.ordering().into_iter().map(|(e, ..)| e).collect()
    }

    /// Dense orthogonal eigenvector matrix; column `k` belongs to `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> Array2<f64> {
        let mut v = Array2::zeros((self.dim, self.dim));
        for (col, (_, s, k)) in self.ordering().into_iter().enumerate() {
            let sec = &self.sectors[s];
            for (r, &i) in sec.indices.iter().enumerate() {
                v[[i, col]] = sec.vectors[[r, k]];
            }
        }
        v
    }

    /// Evolved amplitudes `V e^{−iΛt} Vᵀ ψ₀` for each time, one row per time.
    pub fn evolve_batch(&self, psi0: &Array1<C64>, times: &[f64]) -> Result<Array2<C64>> {
        if psi0.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: psi0.len(),
            });
        }
        let nt = times.len();
        let mut out = Array2::<C64>::zeros((nt, self.dim));
        for sec in &self.sectors {
            let re: Array1<f64> = sec.indices.iter().map(|&i| psi0[i].re).collect();
            let im: Array1<f64> = sec.indices.iter().map(|&i| psi0[i].im).collect();
            let c_re = sec.vectors.t().dot(&re);
            let c_im = sec.vectors.t().dot(&im);
            let kept: Vec<usize> = (0..c_re.len())
                .filter(|&k| c_re[k].hypot(c_im[k]) > DROP_TOL)
                .collect();
            if kept.is_empty() {
                continue;
            }
            let vk = sec.vectors.select(Axis(1), &kept);
            let mut ph_re = Array2::<f64>::zeros((kept.len(), nt));
            let mut ph_im = Array2::<f64>::zeros((kept.len(), nt));
            for (r, &k) in kept.iter().enumerate() {
                let c = C64::new(c_re[k], c_im[k]);
                let e = sec.eigenvalues[k];
                for (col, &t) in times.iter().enumerate() {
                    let z = c * C64::from_polar(1.0, -e * t);
                    ph_re[[r, col]] = z.re;
                    ph_im[[r, col]] = z.im;
                }
            }
            let a_re = vk.dot(&ph_re);
            let a_im = vk.dot(&ph_im);
            for (r, &i) in sec.indices.iter().enumerate() {
                for col in 0..nt {
                    out[[col, i]] = C64::new(a_re[[r, col]], a_im[[r, col]]);
                }
            }
        }
        Ok(out)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParams("output times must be finite".into()));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParams(
            "output times must start at t >= 0".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams(
            "output times must be ascending".into(),
        ));
    }
    Ok(())
}

/// `|ψ(t)⟩ = e^{−iHt}|ψ₀⟩` at each requested time.
pub fn propagate(
    psi0: &QuantumState,
    h: &OperatorMatrix,
    times: &[f64],
) -> Result<Vec<QuantumState>> {
    check_times(times)?;
    let spectral = SpectralDecomposition::new(h)?;
    let rows = spectral.evolve_batch(psi0.amplitudes(), times)?;
    rows.outer_iter()
        .map(|r| QuantumState::from_parts(r.to_owned(), psi0.spin_dim(), psi0.fock_dim()))
        .collect()
}

/// Hamiltonian, parity and cached spectral decomposition for one parameter set.
///
/// Building this is the expensive step; everything else reuses it read-only.
#[derive(Debug, Clone)]
pub struct QuantumModel {
    pub params: ModelParams,
    pub hamiltonian: OperatorMatrix,
    pub parity: OperatorMatrix,
    pub spectral: SpectralDecomposition,
}

impl QuantumModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let hamiltonian = build_hamiltonian(params)?;
        let parity = build_parity(params)?;
        let spectral = SpectralDecomposition::new(&hamiltonian)?;
        Ok(QuantumModel {
            params: *params,
            hamiltonian,
            parity,
            spectral,
        })
    }

    pub fn coherent(&self, s: &ClassicalState) -> Result<CoherentState> {
        coherent_state(s.q1, s.p1, s.q2, s.p2, &self.params)
    }

    pub fn propagate(&self, psi0: &QuantumState, times: &[f64]) -> Result<Vec<QuantumState>> {
        check_times(times)?;
        let rows = self.spectral.evolve_batch(psi0.amplitudes(), times)?;
        rows.outer_iter()
            .map(|r| QuantumState::from_parts(r.to_owned(), psi0.spin_dim(), psi0.fock_dim()))
            .collect()
    }

    /// Streams the evolved state at each time as a `spin × fock` matrix,
    /// evaluating times in bounded chunks.
    pub fn for_each_evolved<F>(
        &self,
        psi0: &QuantumState,
        times: &[f64],
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(usize, ArrayView2<'_, C64>) -> Result<()>,
    {
        check_times(times)?;
        let (sd, fd) = (psi0.spin_dim(), psi0.fock_dim());
        for (chunk_idx, chunk) in times.chunks(TIME_CHUNK).enumerate() {
            let rows = self.spectral.evolve_batch(psi0.amplitudes(), chunk)?;
            for (k, row) in rows.outer_iter().enumerate() {
                let m = row.into_shape_with_order((sd, fd)).expect("contiguous row");
                visit(chunk_idx * TIME_CHUNK + k, m.slice(s![.., ..]))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::quantum_expectation;

    #[test]
    fn reconstruction_and_orthogonality() {
        let p = ModelParams::two_photon(0.3, 3, 10).unwrap();
        let h = build_hamiltonian(&p).unwrap();
        let sd = SpectralDecomposition::new(&h).unwrap();
        assert_eq!(sd.sector_count(), 4);
        let v = sd.eigenvectors();
        let lam = sd.eigenvalues();
        assert!(lam.windows(2).into_iter().all(|w| w[0] <= w[1]));
        let rec = v.dot(&Array2::from_diag(&lam)).dot(&v.t());
        let dense = h.to_dense().mapv(|z| z.re);
        let hmax = dense.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let err = (&rec - &dense).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(err <= 1e-10 * hmax, "{err}");
        let gram = v.t().dot(&v) - Array2::<f64>::eye(p.dim());
        assert!(gram.iter().fold(0.0f64, |a, x| a.max(x.abs())) <= 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let p = ModelParams::two_photon(0.3, 2, 8).unwrap();
        let m = QuantumModel::new(&p).unwrap();
        let psi0 = coherent_state(0.4, 0.2, 1.0, -0.5, &p).unwrap().state;
        let out = m.propagate(&psi0, &[0.0]).unwrap();
        for (a, b) in out[0].amplitudes().iter().zip(psi0.amplitudes().iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn eigenstate_only_acquires_phase() {
        let p = ModelParams::two_photon(0.3, 2, 8).unwrap();
        let m = QuantumModel::new(&p).unwrap();
        let v = m.spectral.eigenvectors();
        let psi0 = QuantumState::new(v.column(5).mapv(|x| C64::new(x, 0.0)), &p).unwrap();
        for state in m.propagate(&psi0, &[0.5, 3.0, 17.0]).unwrap() {
            assert!((psi0.overlap(&state).unwrap().norm() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn norm_and_energy_are_conserved() {
        let p = ModelParams::two_photon(0.3, 4, 30).unwrap();
        let m = QuantumModel::new(&p).unwrap();
        let psi0 = coherent_state(1.0, -0.5, 2.0, 0.3, &p).unwrap().state;
        let e0 = quantum_expectation(&psi0, &m.hamiltonian).unwrap().re;
        for s in m.propagate(&psi0, &[1.0, 10.0, 30.0]).unwrap() {
            assert!((s.norm() - 1.0).abs() <= 1e-10);
            let e = quantum_expectation(&s, &m.hamiltonian).unwrap().re;
            assert!((e - e0).abs() <= 1e-9 * e0.abs().max(1.0));
        }
    }

    #[test]
    fn bad_time_grids_are_rejected() {
        let p = ModelParams::two_photon(0.3, 1, 4).unwrap();
        let m = QuantumModel::new(&p).unwrap();
        let psi0 = coherent_state(0.0, 0.0, 0.0, 0.0, &p).unwrap().state;
        assert!(m.propagate(&psi0, &[1.0, 0.5]).is_err());
        assert!(m.propagate(&psi0, &[-1.0]).is_err());
    }

    #[test]
    fn decoupled_hamiltonian_splits_into_singletons() {
        let p = ModelParams::two_photon(0.0, 2, 5).unwrap();
        let sd = SpectralDecomposition::new(&build_hamiltonian(&p).unwrap()).unwrap();
        assert_eq!(sd.sector_count(), p.dim());
    }
}
