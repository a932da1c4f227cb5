//! Partner-pairing heat-bath algorithmic cooling.
//!
//! The simulator works on the diagonal of the joint density matrix of `n`
//! computation qubits and one reset system. Each iteration sorts the diagonal
//! into non-increasing order and then replaces the reset system with its
//! equilibrium populations. On top of the exact dynamics the crate provides
//! closed-form asymptotic limits ([`asymptotics`]) and executable checks of
//! the known properties of the dynamics ([`verification`]).
//!
//! Two numeric backends are available: `f64` and exact [`Rational`]s.

pub mod asymptotics;
pub mod engine;
pub mod error;
pub mod scalar;
pub mod state;
pub mod verification;

pub use engine::{
    is_fixed_point, ppa_iteration, reset_step, run, run_fixed, sort_step, InitialState,
    IterationRecord, RecordMode, RunConfig, Trajectory,
};
pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
pub use state::{
    computation_marginal, make_tensor_reset, make_thermal_reset, maximally_mixed,
    pairwise_distances, qubit_polarization, validate, ComputationMarginal, DiagonalState,
    ResetDistribution, Violation,
};
