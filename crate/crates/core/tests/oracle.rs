//! Spectral propagation against a dense Padé scaling-and-squaring exponential.

use nalgebra::DMatrix;
use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicke_core::model::build_hamiltonian;
use dicke_core::quantum::{propagate, QuantumState};
use dicke_core::{ModelParams, Variant};

fn random_state(p: &ModelParams, rng: &mut ChaCha8Rng) -> QuantumState {
    let amps: Array1<C64> = (0..p.dim())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    QuantumState::normalized(amps, p).unwrap()
}

fn oracle(h: &DMatrix<C64>, psi: &Array1<C64>, t: f64) -> Vec<C64> {
    let u = (h * C64::new(0.0, -t)).exp();
    let v = u * DMatrix::from_iterator(psi.len(), 1, psi.iter().copied());
    v.iter().copied().collect()
}

fn check(p: ModelParams, seed: u64) {
    let h = build_hamiltonian(&p).unwrap();
    let dense = h.to_dense();
    let hm = DMatrix::from_fn(p.dim(), p.dim(), |r, c| dense[[r, c]]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = [0.1, 1.0, 10.0];
    for _ in 0..3 {
        let psi0 = random_state(&p, &mut rng);
        let evolved = propagate(&psi0, &h, &times).unwrap();
        for (psi_t, &t) in evolved.iter().zip(&times) {
            let want = oracle(&hm, psi0.amplitudes(), t);
            let err = psi_t
                .amplitudes()
                .iter()
                .zip(&want)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(
                err <= 1e-9,
                "{:?} t = {t}: max amplitude error {err:e}",
                p.variant
            );
        }
    }
}

#[test]
fn two_photon_matches_dense_exponential() {
    check(ModelParams::two_photon(0.3, 2, 8).unwrap(), 1);
    check(ModelParams::two_photon(0.45, 2, 8).unwrap(), 2);
}

#[test]
fn one_photon_matches_dense_exponential() {
    check(ModelParams::one_photon(0.5, 2, 8).unwrap(), 3);
    check(
        ModelParams::new(1.0, 2.0, 1.3, 3, Variant::OnePhoton, 8).unwrap(),
        4,
    );
}
