use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicke_core::classical::{
    classical_hamiltonian, integrate, solve_energy_shell, ClassicalState, IntegratorConfig,
};
use dicke_core::quantum::{
    coherent_state, quantum_expectation, sample_times, time_averaged_entropy, QuantumModel,
};
use dicke_core::{ModelParams, Variant};

fn random_interior(p: &ModelParams, rng: &mut ChaCha8Rng) -> ClassicalState {
    let r_max = (4.0 * p.j()).sqrt();
    loop {
        let (q1, p1) = (rng.gen_range(-r_max..r_max), rng.gen_range(-r_max..r_max));
        if q1 * q1 + p1 * p1 < 0.95 * r_max * r_max {
            return ClassicalState::new(q1, p1, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        }
    }
}

#[test]
fn coherent_expectation_reproduces_classical_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for variant in [Variant::TwoPhoton, Variant::OnePhoton] {
        let p = match variant {
            Variant::TwoPhoton => ModelParams::two_photon(0.3, 10, 60).unwrap(),
            Variant::OnePhoton => ModelParams::one_photon(0.5, 10, 60).unwrap(),
        };
        let model = QuantumModel::new(&p).unwrap();
        for _ in 0..100 {
            let s = random_interior(&p, &mut rng);
            let cs = model.coherent(&s).unwrap();
            assert!(cs.tail_weight < 1e-10);
            let e_q = quantum_expectation(&cs.state, &model.hamiltonian)
                .unwrap()
                .re;
            let e_c = classical_hamiltonian(&s, &p).unwrap();
            assert!(
                (e_q - e_c).abs() <= 1e-6,
                "{variant:?} {s:?}: {e_q} vs {e_c}"
            );
        }
    }
}

#[test]
fn quantum_evolution_conserves_norm_energy_and_parity() {
    let p = ModelParams::two_photon(0.3, 10, 141).unwrap();
    let model = QuantumModel::new(&p).unwrap();
    let s = solve_energy_shell(1.0, -1.5, 10.0, &p).unwrap().unwrap();
    let psi0 = model.coherent(&s).unwrap().state;
    let e0 = quantum_expectation(&psi0, &model.hamiltonian).unwrap().re;
    let pi0 = quantum_expectation(&psi0, &model.parity).unwrap();
    let times = sample_times(30.0, 0.5).unwrap();
    for psi in model.propagate(&psi0, &times).unwrap() {
        assert!((psi.norm() - 1.0).abs() <= 1e-10);
        let e = quantum_expectation(&psi, &model.hamiltonian).unwrap().re;
        assert!((e - e0).abs() <= 1e-9 * e0.abs());
        assert!((quantum_expectation(&psi, &model.parity).unwrap() - pi0).norm() <= 1e-9);
    }
}

#[test]
fn classical_energy_drift_over_long_horizon() {
    let p = ModelParams::two_photon(0.3, 10, 2).unwrap();
    let s = solve_energy_shell(1.0, -1.5, 10.0, &p).unwrap().unwrap();
    let traj = integrate(&s, &p, &IntegratorConfig::default()).unwrap();
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let e = classical_hamiltonian(&traj.state_at(k as f64).unwrap(), &p).unwrap();
        worst = worst.max((e - 10.0).abs() / 10.0);
    }
    assert!(worst <= 1e-8, "relative drift {worst:e}");
}

#[test]
fn entropy_is_stable_under_cutoff_and_sampling_refinement() {
    let p = ModelParams::two_photon(0.3, 4, 2).unwrap();
    let p = p.with_n_max(p.suggested_n_max(4.0));
    let s = solve_energy_shell(0.8, 0.6, 4.0, &p).unwrap().unwrap();
    let base = QuantumModel::new(&p)
        .unwrap()
        .entropy_series(&s, 30.0, 0.05)
        .unwrap();
    let wide = QuantumModel::new(&p.with_n_max(2 * p.n_max))
        .unwrap()
        .entropy_series(&s, 30.0, 0.05)
        .unwrap();
    let diff = base
        .values
        .iter()
        .zip(&wide.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(diff <= 1e-6, "cutoff doubling moved S by {diff:e}");

    let fine = QuantumModel::new(&p)
        .unwrap()
        .entropy_series(&s, 30.0, 0.025)
        .unwrap();
    let (a, b) = (
        time_averaged_entropy(&base).unwrap(),
        time_averaged_entropy(&fine).unwrap(),
    );
    assert!(
        (a - b).abs() <= 1e-4,
        "dt halving moved the average by {:e}",
        (a - b).abs()
    );
}

#[test]
fn coherent_state_energy_matches_at_origin_for_any_cutoff() {
    let p = ModelParams::two_photon(0.2, 6, 30).unwrap();
    let cs = coherent_state(0.0, 0.0, 0.0, 0.0, &p).unwrap();
    let model = QuantumModel::new(&p).unwrap();
    let e = quantum_expectation(&cs.state, &model.hamiltonian)
        .unwrap()
        .re;
    assert!((e + p.omega0 * p.j()).abs() <= 1e-12);
}
