//! Simulation and optimization toolkit for converting a coherent cavity field
//! into a large photon-number (Fock) state through resonant interaction with
//! one to three two-level systems.
//!
//! The crate is organized in layers:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigendecomposition, matrix
//!   functions, Kronecker products, partial trace.
//! - [`hilbert`]: truncated Fock space, atomic registers, canonical operators,
//!   coherent states, displacement operators (two independent routes).
//! - [`dynamics`]: exact unitary propagation, the single-atom closed-form
//!   solution, and a Lindblad integrator for cavity/atomic decay with thermal
//!   photons.
//! - [`metrics`]: fidelity, trace distance, purity, photon distributions,
//!   Wigner functions, and the analytic displaced density-matrix elements.
//! - [`protocol`]: the two-parameter (interaction time, displacement) search
//!   for the optimal Fock-state preparation, branch seeds, post-selection,
//!   robustness sweeps, and a cavity-QED decoherence preset.
//!
//! Times are measured in units of the inverse coupling rate (`gt`), and decay
//! rates in units of the coupling `g`, unless stated otherwise.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod metrics;
pub mod protocol;
pub mod search;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, EigenDecomposition};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
