//! Classical and quantum chaos diagnostics for the one- and two-photon Dicke
//! models: Hamiltonians in a truncated spin ⊗ Fock basis, classical
//! trajectories with Poincaré sections and Lyapunov exponents, coherent-state
//! propagation with linear entanglement entropy, atomic Husimi distributions,
//! and phase-space sweeps that compare the two pictures.

extern crate blas_src;

pub mod classical;
pub mod error;
pub mod grid;
pub mod husimi;
pub mod io;
pub mod model;
pub mod operator;
pub mod parallel;
pub mod quantum;
pub mod sweep;

pub use error::{Error, Result, Warning};
pub use model::{ModelParams, Variant};
