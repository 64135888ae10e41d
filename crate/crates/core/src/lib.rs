//! Exactly solvable spin-bath dephasing model.
//!
//! A central qubit couples to `N` bath spins through a Hamiltonian that is
//! diagonal in the product basis. This crate evaluates
//!
//! * the decoherence factor `r(t)` governing local (bath-traced) coherence,
//! * the product functions `Gamma_0(t)`, `Gamma_1(t)` and their
//!   energy-diagonal parts for global product observables,
//! * the off-diagonal remainder `Lambda(t) = Gamma(t) - Gamma^d`,
//!
//! at `O(N)` cost per time point in extended-range arithmetic, together with
//! brute-force oracles for small `N` and ensemble drivers.

pub mod error;
pub mod evolution;
pub mod experiments;
pub mod model;
pub mod oracle;
pub mod verify;
pub mod xrange;

pub use error::{Error, Result};
pub use evolution::Branch;
pub use experiments::{EnsembleSummary, RunConfig, RunResult, TimeGrid};
pub use model::{
    BathState, CouplingSet, Instance, ProductObservable, Scenario, SpinBlock, SystemAmplitudes,
};
pub use xrange::ScaledComplex;

pub use num_complex::Complex64;
