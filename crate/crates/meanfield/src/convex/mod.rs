//! Convex-analysis toolkit: scalar couplings, monotone graphs, Yosida
//! regularization, and vector integrands with conjugation.

pub mod graph;
pub mod integrand;
pub mod scalar;

pub use graph::{GraphNode, JumpPoint, MonotoneGraph1D};
pub use integrand::{
    conjugate_eval, conjugate_eval_lattice, fenchel_residual, hamiltonian_from_lagrangian,
    ConvexIntegrand, GridIndex, SelectionRule, SubgradientSelection,
};
pub use scalar::ScalarConvex;
