//! Numerical toolkit for a coupled forward/backward system on the periodic
//! box: a density transported by a controlled drift with diffusion, and a
//! value function solved backward with a convex Hamiltonian, linked through
//! a (possibly multivalued) monotone coupling between density and cost.
//!
//! The layers build on each other:
//!
//! - [`grid`]: periodic domains, scalar/vector fields, spectral transforms,
//!   heat-kernel operators with exact per-mode time integration, and field
//!   serialization.
//! - [`convex`]: scalar couplings and their Yosida regularizations, monotone
//!   graphs with jump filling, vector integrands with conjugation and
//!   subgradient selection rules.
//! - [`fp`]: the forward transport-diffusion solve, both as a conservative
//!   finite-difference march and as a mild (Duhamel) fixed point.
//! - [`hjb`]: the backward value-function solve as a contraction fixed point
//!   for the value gradient, plus a finite-difference cross-check.
//! - [`mfg`]: the coupled equilibrium iteration with smoothing continuation,
//!   damping, and optimality certificates.
//! - [`particles`]: stochastic particle simulation of the drift-diffusion
//!   flow for cross-validation of the density solver.
//! - [`presets`], [`config`], [`diagnostics`], [`verify`]: named problem
//!   setups, config parsing/validation, run reports, and the self-check
//!   suite behind the `verify` subcommand.

pub mod config;
pub mod convex;
pub mod diagnostics;
pub mod error;
pub mod fp;
pub mod grid;
pub mod hjb;
pub mod mfg;
pub mod particles;
pub mod presets;
pub mod verify;

pub use error::{Error, Result};
