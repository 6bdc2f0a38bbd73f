//! Periodic lattice fields and the spectral heat-kernel machinery.

pub mod domain;
pub mod field;
pub mod io;
pub mod kernel;
pub mod ops;
pub mod spectral;

pub use domain::DomainSpec;
pub use field::{
    control_l1_distance, control_sup_magnitude, trajectory_l1_distance, ScalarField, VectorField,
};
pub use kernel::{
    gradient_convolution_bound, gradient_kernel_l1_constant, heat_kernel_field, HeatKernelSpec,
    KernelConvention, KernelOps,
};
pub use ops::{divergence, gradient, inner_product, vector_inner_product};
