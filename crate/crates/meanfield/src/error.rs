//! Error types shared across the solver stack.

use thiserror::Error;

/// Everything that can go wrong while building problems or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain or time-grid parameters are unusable.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// A convex conjugate does not exist (supremum escapes to infinity).
    #[error("conjugate diverges: maximizer escaped to the search boundary at radius {radius}")]
    ConjugateDiverges { radius: f64 },

    /// Subgradient selection was requested where the subdifferential is empty.
    #[error("empty subdifferential at |u| = {at} (effective domain radius {radius})")]
    EmptySubdifferential { at: f64, radius: f64 },

    /// Monotone-graph construction saw a decreasing sample pair.
    #[error("samples not monotone: value drops by {drop} between x = {x_lo} and x = {x_hi}")]
    NotMonotone { x_lo: f64, x_hi: f64, drop: f64 },

    /// Resolvent bisection could not bracket a root.
    #[error("resolvent bracket failure at query {query}")]
    BracketFailure { query: f64 },

    /// Transport CFL sub-stepping would need an absurd number of sub-steps.
    #[error("CFL sub-step count {needed} exceeds the cap {cap}; control magnitude {sup_u} is too large for dx = {dx}")]
    CflExceeded {
        needed: usize,
        cap: usize,
        sup_u: f64,
        dx: f64,
    },

    /// A Picard / fixed-point iteration stopped making progress.
    #[error("fixed-point iteration stalled: residual {residual} after {iterations} iterations (tolerance {tolerance})")]
    FixedPointStalled {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// The mild-solution sweep stopped contracting within its budget.
    #[error("Duhamel iteration stalled: increment {residual} after {iterations} iterations (tolerance {tolerance})")]
    DuhamelStalled {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// The coupled solver exhausted its iteration budget.
    #[error("solver did not converge: residual {residual} after {iterations} outer iterations (tolerance {tolerance})")]
    NonConvergence {
        residual: f64,
        iterations: usize,
        tolerance: f64,
    },

    /// A running cost evaluated to +inf on a cell carrying mass.
    #[error("infeasible control: running cost is +inf on a cell with density {density} > floor")]
    InfeasibleControl { density: f64 },

    /// Configuration file problems; every violation is listed.
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    ConfigViolations(Vec<String>),

    /// Field-file parsing problems.
    #[error("field format: {0}")]
    FieldFormat(String),

    /// Mismatched grids between fields that must share a domain.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
