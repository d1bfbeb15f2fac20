//! Extended phase space tools for time-dependent Hamiltonians.
//!
//! Time and its conjugate momentum become coordinates, the dynamics becomes a
//! constrained flow with a gauge freedom in the time parametrization, and a
//! canonical map to the Lewis invariant turns a driven quadratic system into an
//! autonomous one. The quantum side builds time-sliced propagators on a grid
//! and checks that the direct kernel factorizes through the invariant's.
//!
//! Modules:
//! - [`core`]: Hamiltonian specs, reduced and extended states, the constraint.
//! - [`dynamics`]: adaptive integration in t and in the extended space under a
//!   gauge, Poisson and Dirac brackets.
//! - [`ermakov`]: the auxiliary equation and the Lewis invariant.
//! - [`transform`]: the canonical map, its coefficients, the new potential,
//!   the boundary term and the flow in the new variables.
//! - [`propagator`]: grids, short-time kernels, composition, the extended and
//!   factorized kernels, wavefunction evolution and the phase map.
//! - [`cli`]: scenarios, checks and reports behind the `extphase` binary.
//!
//! Examples, one per capability (`cargo run --release --example NAME`):
//! - `hamiltonian`: energy, constraint and energy rate.
//! - `trajectories`: one oscillator integrated in t and under two gauges.
//! - `brackets`: Poisson and Dirac brackets, singular velocity Hessian.
//! - `lewis_invariant`: auxiliary solution and invariant drift.
//! - `canonical_map`: coefficients, canonicity, serialization.
//! - `transformed_flow`: the autonomous flow in the new variables.
//! - `kernels`: slice refinement, composition, extended kernel.
//! - `factorization`: direct kernel against the factorized one.
//! - `wavefunction`: packet evolution and the boundary-term phase.
//! - `verify_scenario`: the verification suite on a scenario.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod core;
pub mod error;
pub mod expr;
pub mod jet;
pub mod numeric;

pub use error::{Error, Result};
pub mod dynamics;
pub mod ermakov;
pub mod transform;
pub mod propagator;
pub mod cli;
