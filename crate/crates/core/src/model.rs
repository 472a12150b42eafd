//! Model parameters, the spin ⊗ Fock product basis, and the Dicke Hamiltonians.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;

/// Which light–matter coupling the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `(g/N)(J₊+J₋)(a² + a†²)`
    TwoPhoton,
    /// `(g/√N)(J₊+J₋)(a + a†)`
    OnePhoton,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::TwoPhoton => "TwoPhoton",
            Variant::OnePhoton => "OnePhoton",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "twophoton" | "two-photon" | "two_photon" | "2" => Ok(Variant::TwoPhoton),
            "onephoton" | "one-photon" | "one_photon" | "1" => Ok(Variant::OnePhoton),
            _ => Err(()),
        }
    }
}

/// Physical constants and truncation for one run. `j = n_atoms / 2` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega: f64,
    pub omega0: f64,
    pub g: f64,
    pub n_atoms: usize,
    pub variant: Variant,
    pub n_max: usize,
}

impl ModelParams {
    pub fn new(
        omega: f64,
        omega0: f64,
        g: f64,
        n_atoms: usize,
        variant: Variant,
        n_max: usize,
    ) -> Result<Self> {
        let p = ModelParams {
            omega,
            omega0,
            g,
            n_atoms,
            variant,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    /// Two-photon model at resonance `ω₀ = 2ω` with `ω = 1`.
    pub fn two_photon(g: f64, n_atoms: usize, n_max: usize) -> Result<Self> {
        Self::new(1.0, 2.0, g, n_atoms, Variant::TwoPhoton, n_max)
    }

    /// One-photon model with `ω = ω₀ = 1`.
    pub fn one_photon(g: f64, n_atoms: usize, n_max: usize) -> Result<Self> {
        Self::new(1.0, 1.0, g, n_atoms, Variant::OnePhoton, n_max)
    }

    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn spin_dim(&self) -> usize {
        self.n_atoms + 1
    }

    pub fn fock_dim(&self) -> usize {
        self.n_max + 1
    }

    /// Full product-space dimension `(N+1)(n_max+1)`.
    pub fn dim(&self) -> usize {
        self.spin_dim() * self.fock_dim()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.omega0, self.g]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams(
                "frequencies and coupling must be finite".into(),
            ));
        }
        if self.omega <= 0.0 || self.omega0 <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "omega and omega0 must be positive (omega = {}, omega0 = {})",
                self.omega, self.omega0
            )));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!(
                "g must be non-negative, got {}",
                self.g
            )));
        }
        if self.n_atoms < 1 {
            return Err(Error::InvalidParams("n_atoms must be at least 1".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidParams(format!(
                "n_max must be at least 2, got {}",
                self.n_max
            )));
        }
        if self.variant == Variant::TwoPhoton && self.g >= self.omega / 2.0 {
            return Err(Error::CollapseRegime {
                g: self.g,
                bound: self.omega / 2.0,
            });
        }
        Ok(())
    }

    /// Same parameters with a different Fock cutoff.
    pub fn with_n_max(&self, n_max: usize) -> Self {
        ModelParams { n_max, ..*self }
    }

    /// Largest mean photon number reachable on the classical shell of energy
    /// `energy`, from `|κF| ≤ g` (two-photon) or `|κF| ≤ 2g√j` (one-photon).
    pub fn photon_bound(&self, energy: f64) -> f64 {
        let budget = (energy + self.omega0 * self.j()).max(0.0);
        match self.variant {
            Variant::TwoPhoton => budget / (self.omega - 2.0 * self.g),
            Variant::OnePhoton => {
                let b = 2.0 * self.g * self.j().sqrt();
                let x = (b + (b * b + 2.0 * self.omega * budget).sqrt()) / self.omega;
                0.5 * x * x
            }
        }
    }

    /// Fock cutoff comfortably above [`photon_bound`](Self::photon_bound),
    /// leaving room for the quantum spread of coherent states on that shell.
    ///
    /// Photon tails of the two-photon model decay more slowly as `g`
    /// approaches the collapse point, so the margin widens with
    /// `1 / (1 − 2g/ω)`; small spins fluctuate more and widen it further.
    pub fn suggested_n_max(&self, energy: f64) -> usize {
        let n = self.photon_bound(energy);
        let collapse = match self.variant {
            Variant::TwoPhoton => (0.45 / (1.0 - 2.0 * self.g / self.omega)).max(1.0),
            Variant::OnePhoton => 1.0,
        };
        let stretch = collapse * (5.0 / self.j()).sqrt().max(1.0);
        (n + (8.0 * n.sqrt() + 24.0) * stretch).ceil() as usize
    }
}

/// Position of `|j, m⟩ ⊗ |n⟩` in the flattened product basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisIndex {
    pub m_index: usize,
    pub n_photon: usize,
    pub flat: usize,
}

impl BasisIndex {
    pub fn new(m_index: usize, n_photon: usize, params: &ModelParams) -> Self {
        debug_assert!(m_index <= params.n_atoms && n_photon <= params.n_max);
        BasisIndex {
            m_index,
            n_photon,
            flat: m_index * params.fock_dim() + n_photon,
        }
    }

    pub fn from_flat(flat: usize, params: &ModelParams) -> Self {
        let f = params.fock_dim();
        BasisIndex {
            m_index: flat / f,
            n_photon: flat % f,
            flat,
        }
    }

    /// Spin projection `m = m_index − j`.
    pub fn m(&self, params: &ModelParams) -> f64 {
        self.m_index as f64 - params.j()
    }
}

/// Iterates the product basis in flat order.
pub fn basis(params: &ModelParams) -> impl Iterator<Item = BasisIndex> + '_ {
    (0..params.dim()).map(move |k| BasisIndex::from_flat(k, params))
}

/// Field and collective-spin operators on the product space.
#[derive(Debug, Clone)]
pub struct Operators {
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub jz: OperatorMatrix,
    pub jp: OperatorMatrix,
    pub jm: OperatorMatrix,
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Ladder coefficient `√(j(j+1) − m(m+1))` for `J₊|j,m⟩`.
fn raise_coeff(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

pub fn build_operators(params: &ModelParams) -> Result<Operators> {
    params.validate()?;
    let d = params.dim();
    let j = params.j();
    let idx = |mi: usize, n: usize| BasisIndex::new(mi, n, params).flat;

    let mut a = Vec::new();
    let mut jz = Vec::new();
    let mut jp = Vec::new();
    for b in basis(params) {
        let (mi, n) = (b.m_index, b.n_photon);
        if n >= 1 {
            a.push((idx(mi, n - 1), b.flat, real((n as f64).sqrt())));
        }
        jz.push((b.flat, b.flat, real(b.m(params))));
        if mi < params.n_atoms {
            jp.push((idx(mi + 1, n), b.flat, real(raise_coeff(j, b.m(params)))));
        }
    }
    let a = OperatorMatrix::from_triplets(d, a, false);
    let jp = OperatorMatrix::from_triplets(d, jp, false);
    Ok(Operators {
        a_dag: a.adjoint(),
        a,
        jz: OperatorMatrix::from_triplets(d, jz, true),
        jm: jp.adjoint(),
        jp,
    })
}

/// Truncated Hamiltonian of the selected variant.
pub fn build_hamiltonian(params: &ModelParams) -> Result<OperatorMatrix> {
    let ops = build_operators(params)?;
    hamiltonian_from(&ops, params)
}

pub(crate) fn hamiltonian_from(ops: &Operators, params: &ModelParams) -> Result<OperatorMatrix> {
    let n = params.n_atoms as f64;
    let number = ops.a_dag.matmul(&ops.a)?;
    let free = number
        .scale(real(params.omega))
        .add(&ops.jz.scale(real(params.omega0)))?;
    let jx2 = ops.jp.add(&ops.jm)?;
    let (field, coupling) = match params.variant {
        Variant::TwoPhoton => (
            ops.a.matmul(&ops.a)?.add(&ops.a_dag.matmul(&ops.a_dag)?)?,
            params.g / n,
        ),
        Variant::OnePhoton => (ops.a.add(&ops.a_dag)?, params.g / n.sqrt()),
    };
    let interaction = jx2.matmul(&field)?.scale(real(coupling));
    let h = free.add(&interaction)?;
    Ok(OperatorMatrix::from_triplets(h.dim(), h.entries(), true))
}

/// Symmetry sector of a basis state under the model's parity.
///
/// Two-photon: sector `k ∈ {0,1,2,3}` with parity eigenvalue `iᵏ`, where
/// `k = (2(m+j) + n) mod 4`. One-photon: sector `(m+j+n) mod 2` with
/// eigenvalue `(−1)ᵏ`.
pub fn parity_sector(b: &BasisIndex, variant: Variant) -> usize {
    match variant {
        Variant::TwoPhoton => (2 * b.m_index + b.n_photon) % 4,
        Variant::OnePhoton => (b.m_index + b.n_photon) % 2,
    }
}

/// Number of parity sectors of the variant.
pub fn parity_sector_count(variant: Variant) -> usize {
    match variant {
        Variant::TwoPhoton => 4,
        Variant::OnePhoton => 2,
    }
}

/// Parity eigenvalue of a sector.
pub fn parity_eigenvalue(sector: usize, variant: Variant) -> C64 {
    match variant {
        Variant::TwoPhoton => [
            real(1.0),
            C64::new(0.0, 1.0),
            real(-1.0),
            C64::new(0.0, -1.0),
        ][sector % 4],
        Variant::OnePhoton => real(if sector.is_multiple_of(2) { 1.0 } else { -1.0 }),
    }
}

/// Diagonal parity operator: `(−1)^(m+j) iⁿ` (two-photon) or `(−1)^(m+j+n)` (one-photon).
/// The global `(−1)^N` factor is omitted.
pub fn build_parity(params: &ModelParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let diag = basis(params)
        .map(|b| parity_eigenvalue(parity_sector(&b, params.variant), params.variant))
        .collect();
    Ok(OperatorMatrix::diagonal(diag, false))
}
