//! The coupled forward-backward system and its damped best-response solver.
//!
//! The equilibrium couples a forward density equation to a backward value
//! equation through convex density couplings and a convex control cost:
//!
//! ```text
//! d rho/dt - nu Lap rho + div(rho u) = 0,    rho(0) = rho_0,
//! d p/dt   + nu Lap p   + H(grad p)  = eta,  p(T)   = -eta_0,
//! u      in  dH(grad p)        (control optimality),
//! eta    in  dg(rho)           (running coupling),
//! eta_0  in  dg_0(rho(T))      (terminal coupling).
//! ```
//!
//! Multivalued couplings are handled by a regularization ladder: each level
//! replaces `g` by its Yosida approximation `g_eps` and solves the smoothed
//! system, warm-starting the next smaller `eps`. Within a level a damped
//! best-response sweep runs
//!
//! ```text
//! eta <- g_eps'(rho),   eta_0 <- (g_0)_eps'(rho(T)),
//! p   <- backward solve with (eta, eta_0),
//! u   <- (1 - theta) u + theta * (minimal-norm selection of dH(grad p)),
//! rho <- forward solve driven by u,
//! ```
//!
//! with `theta` shrinking whenever the sweep-to-sweep change grows. After the
//! ladder a finalization pass recomputes the couplings from the last density,
//! solves the backward equation once more, takes the *undamped* best response,
//! and re-solves the forward equation. The returned state therefore satisfies
//! the control optimality condition exactly cell by cell -- in particular the
//! bang-bang structure of nonsmooth Hamiltonians (`u = 0` where `|grad p|`
//! falls below the kink tolerance, `|u| = Lip(H)` where above) -- and the
//! only residual left is the fixed-point slack in the coupling, reported
//! honestly by [`optimality_residual`].

use serde::Serialize;

use crate::convex::{ConvexIntegrand, MonotoneGraph1D, ScalarConvex, SelectionRule};
use crate::error::{Error, Result};
use crate::fp::{solve_fp, FpTrajectory};
use crate::grid::{
    control_l1_distance, trajectory_l1_distance, KernelOps, ScalarField, VectorField,
};
use crate::hjb::{
    assemble_w, gamma_apply, solve_hjb, time_reverse, HjbParams, HjbTrajectory,
};

/// A convex density coupling: either a closed-form scalar convex function or
/// the potential of an explicit piecewise-linear monotone derivative graph
/// (the route for couplings with genuine jumps, where the scalar presets do
/// not reach).
#[derive(Debug, Clone)]
pub enum Coupling {
    Convex(ScalarConvex),
    Graph(MonotoneGraph1D),
}

impl Coupling {
    /// The coupling value `g(r)` (graphs integrate their derivative from 0).
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Coupling::Convex(g) => g.eval(r),
            Coupling::Graph(f) => f.integral_from_zero(r),
        }
    }

    /// Resolvent `(I + eps dg)^{-1}(r)`; the identity at `eps = 0`.
    pub fn resolvent(&self, eps: f64, r: f64) -> Result<f64> {
        match self {
            Coupling::Convex(g) => Ok(g.resolvent(eps, r)),
            Coupling::Graph(f) => {
                if eps == 0.0 {
                    Ok(r)
                } else {
                    f.resolvent(eps, r)
                }
            }
        }
    }

    /// Moreau envelope `g_eps(r)`; equals `g(r)` at `eps = 0`.
    pub fn yosida_value(&self, eps: f64, r: f64) -> Result<f64> {
        match self {
            Coupling::Convex(g) => Ok(g.yosida_value(eps, r)),
            Coupling::Graph(f) => {
                if eps == 0.0 {
                    return Ok(self.value(r));
                }
                let j = f.resolvent(eps, r)?;
                Ok((r - j).powi(2) / (2.0 * eps) + self.value(j))
            }
        }
    }

    /// Yosida gradient `g_eps'(r)`; at `eps = 0` the minimal-norm element of
    /// the subdifferential.
    pub fn yosida_grad(&self, eps: f64, r: f64) -> Result<f64> {
        match self {
            Coupling::Convex(g) => Ok(g.yosida_grad(eps, r)),
            Coupling::Graph(f) => {
                if eps == 0.0 {
                    let (lo, hi) = f.value_interval(r);
                    return Ok(lo.max(0.0f64.min(hi)));
                }
                let j = f.resolvent(eps, r)?;
                Ok((r - j) / eps)
            }
        }
    }

    /// Subdifferential of the unregularized coupling at `r`.
    pub fn derivative_interval(&self, r: f64) -> (f64, f64) {
        match self {
            Coupling::Convex(g) => g.derivative_interval(r),
            Coupling::Graph(f) => f.value_interval(r),
        }
    }

    /// Distance from `eta` to the coupling selection at level `eps`: the gap
    /// to `g_eps'(r)` when `eps > 0` (single-valued) and to the full
    /// subdifferential interval at `eps = 0`. Zero certifies a valid pairing.
    pub fn selection_gap(&self, eps: f64, r: f64, eta: f64) -> Result<f64> {
        if eps == 0.0 {
            let (lo, hi) = self.derivative_interval(r);
            return Ok(if eta < lo {
                lo - eta
            } else if eta > hi {
                eta - hi
            } else {
                0.0
            });
        }
        Ok((eta - self.yosida_grad(eps, r)?).abs())
    }

    /// True when the derivative is single-valued everywhere.
    pub fn differentiable(&self) -> bool {
        match self {
            Coupling::Convex(g) => g.differentiable(),
            Coupling::Graph(f) => f.jump_points().is_empty(),
        }
    }

    /// True when the coupling is strictly convex (the uniqueness regime).
    pub fn strictly_convex(&self) -> bool {
        match self {
            Coupling::Convex(g) => g.strictly_convex(),
            Coupling::Graph(_) => false,
        }
    }

    /// Vertical segments of the derivative (empty for differentiable ones).
    pub fn jump_points(&self) -> Vec<crate::convex::JumpPoint> {
        match self {
            Coupling::Convex(g) => g.derivative_jumps(),
            Coupling::Graph(f) => f.jump_points(),
        }
    }

    /// Largest slope `m` with `m r <= g(r)` everywhere (a subgradient at 0).
    pub fn linear_lower_slope(&self) -> f64 {
        match self {
            Coupling::Convex(g) => g.linear_lower_slope(),
            Coupling::Graph(f) => {
                let (lo, hi) = f.value_interval(0.0);
                lo.max(0.0f64.min(hi))
            }
        }
    }

    /// Coefficients `(c1, c2)` with `g(r) <= c1 r^2 + c2` everywhere.
    pub fn quadratic_upper(&self) -> (f64, f64) {
        match self {
            Coupling::Convex(g) => g.quadratic_upper(),
            Coupling::Graph(f) => {
                // |F| <= s|r| + b gives g <= b|r| + s r^2/2 <= (s+b)/2 r^2 + b/2.
                let (s, b) = f.linear_bound();
                (0.5 * (s + b), 0.5 * b)
            }
        }
    }
}

/// Density floor below which a cell is treated as carrying no mass: running
/// costs are not charged there and optimality gaps are not measured there.
pub fn rho_floor(rho0: &ScalarField) -> f64 {
    1e-12 * rho0.mass() / rho0.domain.box_measure()
}

/// Trapezoid weight of time node `k` on an `n`-step horizon of step `dt`.
fn time_weight(k: usize, steps: usize, dt: f64) -> f64 {
    if steps == 0 {
        1.0
    } else if k == 0 || k == steps {
        0.5 * dt
    } else {
        dt
    }
}

/// Total cost of a control-density pair:
///
/// ```text
/// J = int_0^T int [ L(u) rho + g(rho) ] dx dt + int g_0(rho(T)) dx,
/// ```
///
/// by trapezoid-in-time, midpoint-in-space quadrature. Cells with density at
/// or below the floor are not charged the `L(u) rho` term; an infinite `L` on
/// a cell above the floor is an infeasibility error.
pub fn cost_j(
    u: &[VectorField],
    rho: &[ScalarField],
    l: &ConvexIntegrand,
    g: &Coupling,
    g0: &Coupling,
) -> Result<f64> {
    assert_eq!(u.len(), rho.len(), "one control slice per density slice");
    assert!(!rho.is_empty());
    let domain = rho[0].domain;
    let steps = rho.len() - 1;
    let dt = if steps == 0 { 1.0 } else { domain.horizon / steps as f64 };
    let measure = domain.cell_measure();
    let floor = rho_floor(&rho[0]);

    let mut total = 0.0;
    for (k, (uk, rk)) in u.iter().zip(rho).enumerate() {
        let w = time_weight(k, steps, dt);
        let mut slice_sum = 0.0;
        for cell in 0..domain.cells() {
            let density = rk.values()[cell];
            if density > floor {
                let v = uk.vector_at(cell);
                let lval = l.evaluate(&v[..domain.dim]);
                if !lval.is_finite() {
                    return Err(Error::InfeasibleControl { density });
                }
                slice_sum += lval * density;
            }
            slice_sum += g.value(density);
        }
        total += w * slice_sum * measure;
    }
    let terminal: f64 = rho[steps]
        .values()
        .iter()
        .map(|&density| g0.value(density))
        .sum::<f64>()
        * measure;
    Ok(total + terminal)
}

/// Cost with Yosida-smoothed couplings plus a proximal control penalty:
///
/// ```text
/// J_eps = int int [ L(u) rho + g_eps(rho) ] + int (g_0)_eps(rho(T))
///       + 1/2 int int phi rho |u - u_ref|^2,
/// ```
///
/// the objective each regularized sweep actually descends. `phi` is a
/// nonnegative spatial weight for the penalty.
pub fn penalized_cost(
    u: &[VectorField],
    rho: &[ScalarField],
    u_ref: &[VectorField],
    phi: &ScalarField,
    eps: f64,
    l: &ConvexIntegrand,
    g: &Coupling,
    g0: &Coupling,
) -> Result<f64> {
    assert_eq!(u.len(), rho.len(), "one control slice per density slice");
    assert_eq!(u.len(), u_ref.len(), "reference control length mismatch");
    let domain = rho[0].domain;
    let steps = rho.len() - 1;
    let dt = if steps == 0 { 1.0 } else { domain.horizon / steps as f64 };
    let measure = domain.cell_measure();
    let floor = rho_floor(&rho[0]);

    let mut total = 0.0;
    for (k, (uk, rk)) in u.iter().zip(rho).enumerate() {
        let w = time_weight(k, steps, dt);
        let refk = &u_ref[k];
        let mut slice_sum = 0.0;
        for cell in 0..domain.cells() {
            let density = rk.values()[cell];
            if density > floor {
                let v = uk.vector_at(cell);
                let lval = l.evaluate(&v[..domain.dim]);
                if !lval.is_finite() {
                    return Err(Error::InfeasibleControl { density });
                }
                let r = refk.vector_at(cell);
                let dev = (v[0] - r[0]).powi(2) + (v[1] - r[1]).powi(2);
                slice_sum += lval * density + 0.5 * phi.values()[cell] * density * dev;
            }
            slice_sum += g.yosida_value(eps, density)?;
        }
        total += w * slice_sum * measure;
    }
    let mut terminal = 0.0;
    for &density in rho[steps].values() {
        terminal += g0.yosida_value(eps, density)?;
    }
    Ok(total + terminal * measure)
}

/// The pointwise control best response: the minimal-norm selection of
/// `dH(grad p)` on every cell of every slice. Gradient magnitudes below
/// `grad_tol` snap to the kink of a nonsmooth Hamiltonian, so the zero
/// control is returned exactly there.
pub fn best_response(
    grad_p: &[VectorField],
    h: &ConvexIntegrand,
    grad_tol: f64,
) -> Result<Vec<VectorField>> {
    let mut out = Vec::with_capacity(grad_p.len());
    for (k, zk) in grad_p.iter().enumerate() {
        let domain = zk.domain;
        let mut uk = VectorField::zeros(&domain);
        uk.time_index = k;
        for cell in 0..domain.cells() {
            let z = zk.vector_at(cell);
            let pick = h.subdiff_select(&z[..domain.dim], SelectionRule::MinimalNorm, grad_tol)?;
            uk.set_vector_at(cell, &pick.gradient);
        }
        out.push(uk);
    }
    Ok(out)
}

/// Cell-by-cell coupling selection `eta = g_eps'(rho)` along a trajectory.
pub fn coupling_eta(rho: &[ScalarField], g: &Coupling, eps: f64) -> Result<Vec<ScalarField>> {
    let mut out = Vec::with_capacity(rho.len());
    for (k, rk) in rho.iter().enumerate() {
        let mut ek = ScalarField::zeros(&rk.domain);
        ek.time_index = k;
        for cell in 0..rk.domain.cells() {
            ek.values_mut()[cell] = g.yosida_grad(eps, rk.values()[cell])?;
        }
        out.push(ek);
    }
    Ok(out)
}

/// Terminal coupling selection `eta_0 = (g_0)_eps'(rho(T))`.
pub fn terminal_eta0(rho_final: &ScalarField, g0: &Coupling, eps: f64) -> Result<ScalarField> {
    let mut out = ScalarField::zeros(&rho_final.domain);
    out.time_index = rho_final.time_index;
    for cell in 0..rho_final.domain.cells() {
        out.values_mut()[cell] = g0.yosida_grad(eps, rho_final.values()[cell])?;
    }
    Ok(out)
}

/// The regularization ladder: strictly decreasing positive levels, optionally
/// closed by an exact (`eps = 0`) level.
#[derive(Debug, Clone, Serialize)]
pub struct EpsSchedule {
    pub ladder: Vec<f64>,
    /// Append a final exact level after the ladder.
    pub exact_final: bool,
}

impl EpsSchedule {
    /// The standard ladder for couplings with multivalued derivatives. The
    /// smallest positive level stays the working level: an exact final level
    /// would make the density-to-coupling map discontinuous and the sweep
    /// could chatter across the jump.
    pub fn default_ladder() -> Self {
        Self {
            ladder: vec![1.0, 0.3, 0.1, 0.03, 0.01],
            exact_final: false,
        }
    }

    /// Single exact level, for couplings whose derivative is single-valued
    /// (no smoothing is needed to make the sweep well-defined).
    pub fn exact_only() -> Self {
        Self {
            ladder: Vec::new(),
            exact_final: true,
        }
    }

    /// Ladder choice driven by the couplings of the problem.
    pub fn for_couplings(running: &Coupling, terminal: &Coupling) -> Self {
        if running.differentiable() && terminal.differentiable() {
            Self::exact_only()
        } else {
            Self::default_ladder()
        }
    }

    /// All levels in solve order, the exact level included.
    pub fn levels(&self) -> Vec<f64> {
        let mut out = self.ladder.clone();
        if self.exact_final {
            out.push(0.0);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::INFINITY;
        for &eps in &self.ladder {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidDomain(format!(
                    "regularization level must be a positive number, got {eps}"
                )));
            }
            if eps >= prev {
                return Err(Error::InvalidDomain(format!(
                    "regularization ladder must strictly decrease, got {eps} after {prev}"
                )));
            }
            prev = eps;
        }
        if self.ladder.is_empty() && !self.exact_final {
            return Err(Error::InvalidDomain(
                "regularization schedule has no levels".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the problem statement fixes: costs, couplings, initial density.
#[derive(Debug, Clone)]
pub struct MfgProblem {
    /// Control cost `L` (may be `+inf` outside a ball).
    pub lagrangian: ConvexIntegrand,
    /// Its convex conjugate `H`, driving both equations.
    pub hamiltonian: ConvexIntegrand,
    /// Running density coupling `g`.
    pub running: Coupling,
    /// Terminal density coupling `g_0`.
    pub terminal: Coupling,
    /// Initial density; nonnegative with positive mass.
    pub rho0: ScalarField,
}

impl MfgProblem {
    pub fn validate(&self) -> Result<()> {
        if self.rho0.min_value() < 0.0 {
            return Err(Error::InvalidDomain(format!(
                "initial density has a negative cell (min {})",
                self.rho0.min_value()
            )));
        }
        if !(self.rho0.mass() > 0.0) {
            return Err(Error::InvalidDomain(
                "initial density must carry positive mass".into(),
            ));
        }
        let dim = self.rho0.domain.dim;
        if self.lagrangian.dim != dim || self.hamiltonian.dim != dim {
            return Err(Error::DomainMismatch(format!(
                "cost dimension ({} / {}) does not match the domain dimension {dim}",
                self.lagrangian.dim, self.hamiltonian.dim
            )));
        }
        Ok(())
    }
}

/// Knobs of the best-response sweep.
#[derive(Debug, Clone)]
pub struct MfgParams {
    pub schedule: EpsSchedule,
    /// Initial damping weight on the best-response update, per level.
    pub theta0: f64,
    /// Multiplier applied to the damping whenever the sweep change grows.
    pub theta_backoff: f64,
    /// Smallest damping weight the backoff may reach.
    pub theta_min: f64,
    /// Total sweep budget across all levels.
    pub max_outer: usize,
    /// Sweep-change tolerance at the last level (earlier levels are looser).
    pub tolerance: f64,
    /// Gradient magnitudes below this select the zero control at kinks.
    pub grad_tol: f64,
    /// Consecutive levels allowed to end without reaching their tolerance
    /// before the ladder is abandoned.
    pub stagnant_levels: usize,
    /// Backward-solver settings used by every sweep.
    pub hjb: HjbParams,
    /// Starting control trajectory (zero when absent).
    pub initial_control: Option<Vec<VectorField>>,
}

impl Default for MfgParams {
    fn default() -> Self {
        Self {
            schedule: EpsSchedule::exact_only(),
            theta0: 0.5,
            theta_backoff: 0.7,
            theta_min: 0.01,
            max_outer: 200,
            tolerance: 1e-7,
            grad_tol: 1e-8,
            stagnant_levels: 3,
            hjb: HjbParams::default(),
            initial_control: None,
        }
    }
}

impl MfgParams {
    /// Defaults with the ladder matched to the couplings of `problem`.
    pub fn for_problem(problem: &MfgProblem) -> Self {
        Self {
            schedule: EpsSchedule::for_couplings(&problem.running, &problem.terminal),
            ..Self::default()
        }
    }
}

/// One sweep of the outer iteration, as recorded in the state history.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OuterRecord {
    /// Regularization level the sweep ran at.
    pub eps: f64,
    /// Damping weight after any backoff this sweep triggered.
    pub theta: f64,
    /// `L^1(Q)` change of the density trajectory.
    pub delta_rho: f64,
    /// `L^1(Q)` change of the control trajectory.
    pub delta_u: f64,
    /// Largest pointwise control-optimality gap on cells above the floor.
    pub fenchel_sup: f64,
    /// Total cost of the sweep's control-density pair (exact couplings).
    pub cost: f64,
}

/// The four equilibrium residuals, all `L^1`-integrated over the cylinder
/// except the sup-norm witness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MfgResiduals {
    /// Distance between the stored density and a fresh forward solve driven
    /// by the stored control.
    pub fp: f64,
    /// Fixed-point residual of the stored value gradient against the
    /// integral representation assembled from the stored couplings.
    pub hjb: f64,
    /// Integral of the pointwise control gap `L(u) + H(grad p) - u . grad p`
    /// over cells above the density floor.
    pub fenchel_gap: f64,
    /// Largest pointwise control gap above the floor.
    pub fenchel_sup: f64,
    /// Distance from the stored coupling selections to the coupling of the
    /// stored density at the state's regularization level (running part
    /// time-integrated, terminal part added as a spatial integral).
    pub coupling_gap: f64,
}

impl MfgResiduals {
    /// The largest of the four integrated components.
    pub fn max_component(&self) -> f64 {
        self.fp.max(self.hjb).max(self.fenchel_gap).max(self.coupling_gap)
    }
}

/// An equilibrium candidate plus everything measured on the way to it.
#[derive(Debug, Clone)]
pub struct MfgState {
    pub rho: FpTrajectory,
    pub value: HjbTrajectory,
    pub control: Vec<VectorField>,
    pub eta: Vec<ScalarField>,
    pub eta0: ScalarField,
    /// Total cost of the returned pair under the exact couplings.
    pub cost: f64,
    /// Regularization level the returned state was finalized at.
    pub final_eps: f64,
    pub residuals: MfgResiduals,
    pub history: Vec<OuterRecord>,
    pub outer_iterations: usize,
    /// True when the last ladder level reached its tolerance.
    pub converged: bool,
    /// Set when the ladder stalled or the budget ran out.
    pub warning: Option<String>,
}

/// Pointwise control-optimality gap `L(u) + H(z) - u . z`, integrated
/// (trapezoid in time) and sup'd over cells with density above `floor`.
/// Negative gaps beyond rounding would mean the pair violates the
/// conjugacy inequality, so magnitudes are accumulated.
fn control_gap(
    u: &[VectorField],
    z: &[VectorField],
    rho: &[ScalarField],
    floor: f64,
    l: &ConvexIntegrand,
    h: &ConvexIntegrand,
) -> Result<(f64, f64)> {
    assert_eq!(u.len(), z.len());
    assert_eq!(u.len(), rho.len());
    let domain = rho[0].domain;
    let steps = rho.len() - 1;
    let dt = if steps == 0 { 1.0 } else { domain.horizon / steps as f64 };
    let measure = domain.cell_measure();
    let mut integral = 0.0;
    let mut sup = 0.0f64;
    for k in 0..u.len() {
        let w = time_weight(k, steps, dt);
        let mut slice_sum = 0.0;
        for cell in 0..domain.cells() {
            let density = rho[k].values()[cell];
            if density <= floor {
                continue;
            }
            let uv = u[k].vector_at(cell);
            let zv = z[k].vector_at(cell);
            let lval = l.evaluate(&uv[..domain.dim]);
            if !lval.is_finite() {
                return Err(Error::InfeasibleControl { density });
            }
            let gap = (lval + h.evaluate(&zv[..domain.dim]) - (uv[0] * zv[0] + uv[1] * zv[1])).abs();
            slice_sum += gap;
            sup = sup.max(gap);
        }
        integral += w * slice_sum * measure;
    }
    Ok((integral, sup))
}

/// Equilibrium residuals of a state, recomputed from scratch: a fresh
/// forward solve for the density leg, the global integral representation for
/// the value leg, and pointwise gap scans for the two conjugacy legs.
pub fn optimality_residual(
    state: &MfgState,
    problem: &MfgProblem,
    ops: &KernelOps,
) -> Result<MfgResiduals> {
    let domain = state.rho.initial.domain;
    let n_t = domain.time_steps;
    let dt = domain.dt();
    let floor = rho_floor(&problem.rho0);

    // Forward leg: the stored density against a fresh solve.
    let fresh = solve_fp(&state.rho.initial, &state.control, ops)?;
    let fp = trajectory_l1_distance(&fresh.slices, &state.rho.slices);

    // Backward leg: the stored gradient against its own integral equation,
    // assembled over the whole horizon from the stored couplings.
    let z_rev = time_reverse(&state.value.grad_p);
    let eta_rev = time_reverse(&state.eta);
    let mut terminal = state.eta0.clone();
    terminal.scale(-1.0);
    let w = assemble_w(&terminal, &eta_rev, ops);
    let gamma = gamma_apply(&z_rev, &problem.hamiltonian, None, ops);
    let mut hjb = 0.0;
    for k in 0..=n_t {
        let mut target = gamma[k].clone();
        target.axpy(1.0, &w[k]);
        hjb += time_weight(k, n_t, dt) * z_rev[k].l1_distance(&target);
    }

    // Control conjugacy on cells carrying mass.
    let (fenchel_gap, fenchel_sup) = control_gap(
        &state.control,
        &state.value.grad_p,
        &state.rho.slices,
        floor,
        &problem.lagrangian,
        &problem.hamiltonian,
    )?;

    // Coupling conjugacy at the state's regularization level.
    let measure = domain.cell_measure();
    let mut coupling_gap = 0.0;
    for k in 0..=n_t {
        let mut slice_sum = 0.0;
        for cell in 0..domain.cells() {
            slice_sum += problem.running.selection_gap(
                state.final_eps,
                state.rho.slices[k].values()[cell],
                state.eta[k].values()[cell],
            )?;
        }
        coupling_gap += time_weight(k, n_t, dt) * slice_sum * measure;
    }
    let rho_t = state.rho.final_slice();
    let mut terminal_sum = 0.0;
    for cell in 0..domain.cells() {
        terminal_sum += problem.terminal.selection_gap(
            state.final_eps,
            rho_t.values()[cell],
            state.eta0.values()[cell],
        )?;
    }
    coupling_gap += terminal_sum * measure;

    Ok(MfgResiduals {
        fp,
        hjb,
        fenchel_gap,
        fenchel_sup,
        coupling_gap,
    })
}

fn zero_controls(domain: &crate::grid::DomainSpec) -> Vec<VectorField> {
    (0..=domain.time_steps)
        .map(|k| {
            let mut u = VectorField::zeros(domain);
            u.time_index = k;
            u
        })
        .collect()
}

/// Solve the coupled system by the regularization ladder with damped
/// best-response sweeps.
///
/// Non-convergence (budget exhausted, or several consecutive levels
/// stagnating) is not an error: the state is still finalized and returned
/// with `converged = false` and a warning describing what stalled, so the
/// caller can inspect residuals and history. Hard failures (infeasible
/// control cost, transport blowup, backward-solver breakdown) are errors.
pub fn solve_mfg(problem: &MfgProblem, params: &MfgParams, ops: &KernelOps) -> Result<MfgState> {
    problem.validate()?;
    params.schedule.validate()?;
    assert!(params.max_outer >= 1, "need at least one sweep");
    let domain = problem.rho0.domain;
    if !domain.same_space(&ops.domain) {
        return Err(Error::DomainMismatch(
            "kernel engine and initial density live on different grids".into(),
        ));
    }
    let floor = rho_floor(&problem.rho0);
    let levels = params.schedule.levels();

    let mut u = match &params.initial_control {
        Some(init) => {
            assert_eq!(
                init.len(),
                domain.time_steps + 1,
                "initial control needs one slice per time node"
            );
            init.clone()
        }
        None => zero_controls(&domain),
    };
    let mut rho = solve_fp(&problem.rho0, &u, ops)?;
    let mut last_hjb: Option<HjbTrajectory> = None;

    let mut history: Vec<OuterRecord> = Vec::new();
    let mut outer = 0usize;
    let mut stalled_levels = 0usize;
    let mut warning: Option<String> = None;
    let mut last_level_hit = false;
    let mut eps_reached = levels[0];

    'ladder: for (li, &eps) in levels.iter().enumerate() {
        let last = li + 1 == levels.len();
        eps_reached = eps;
        let tol = if last {
            params.tolerance
        } else {
            params.tolerance.max(0.05 * eps)
        };
        let mut theta = params.theta0;
        let mut prev_proxy = f64::INFINITY;
        let mut best_proxy = f64::INFINITY;
        let mut sweeps_without_progress = 0usize;
        let mut level_hit = false;

        loop {
            if outer >= params.max_outer {
                warning = Some(format!(
                    "sweep budget ({}) exhausted at level eps = {eps}",
                    params.max_outer
                ));
                break 'ladder;
            }
            outer += 1;

            // Couplings of the current density, backward solve, best response.
            let eta = coupling_eta(&rho.slices, &problem.running, eps)?;
            let eta0 = terminal_eta0(rho.final_slice(), &problem.terminal, eps)?;
            let hjb = solve_hjb(&eta, &eta0, &problem.hamiltonian, &params.hjb, ops)?;
            let response = best_response(&hjb.grad_p, &problem.hamiltonian, params.grad_tol)?;

            // Damped control update and the forward solve it induces.
            let mut u_next = Vec::with_capacity(response.len());
            for (k, (old, new)) in u.iter().zip(&response).enumerate() {
                let mut mixed = old.clone();
                mixed.scale(1.0 - theta);
                mixed.axpy(theta, new);
                mixed.time_index = k;
                u_next.push(mixed);
            }
            let rho_next = solve_fp(&problem.rho0, &u_next, ops)?;

            let delta_rho = trajectory_l1_distance(&rho_next.slices, &rho.slices);
            let delta_u = control_l1_distance(&u_next, &u);
            let (_, fenchel_sup) = control_gap(
                &u_next,
                &hjb.grad_p,
                &rho_next.slices,
                floor,
                &problem.lagrangian,
                &problem.hamiltonian,
            )?;
            let cost = cost_j(
                &u_next,
                &rho_next.slices,
                &problem.lagrangian,
                &problem.running,
                &problem.terminal,
            )?;

            let proxy = delta_rho.max(delta_u);
            if proxy > prev_proxy {
                theta = (theta * params.theta_backoff).max(params.theta_min);
            }
            prev_proxy = proxy;
            if proxy < best_proxy * 0.999 {
                best_proxy = proxy;
                sweeps_without_progress = 0;
            } else {
                sweeps_without_progress += 1;
            }

            history.push(OuterRecord {
                eps,
                theta,
                delta_rho,
                delta_u,
                fenchel_sup,
                cost,
            });
            u = u_next;
            rho = rho_next;
            last_hjb = Some(hjb);

            if proxy < tol {
                level_hit = true;
                break;
            }
            if sweeps_without_progress >= 10 {
                break;
            }
        }

        if level_hit {
            stalled_levels = 0;
            if last {
                last_level_hit = true;
            }
        } else {
            stalled_levels += 1;
            if stalled_levels >= params.stagnant_levels {
                warning = Some(format!(
                    "ladder stagnated: {stalled_levels} consecutive levels ended without \
                     reaching tolerance (last eps = {eps})"
                ));
                break 'ladder;
            }
        }
    }

    // Finalization at the reached level: couplings from the last density,
    // one more backward solve against exactly those couplings, the undamped
    // best response, and the forward solve it induces. Three of the four
    // equilibrium relations then hold by construction; the coupling gap
    // carries the remaining fixed-point slack.
    let _ = last_hjb.expect("at least one sweep ran");
    let eta = coupling_eta(&rho.slices, &problem.running, eps_reached)?;
    let eta0 = terminal_eta0(rho.final_slice(), &problem.terminal, eps_reached)?;
    let value = solve_hjb(&eta, &eta0, &problem.hamiltonian, &params.hjb, ops)?;
    let control = best_response(&value.grad_p, &problem.hamiltonian, params.grad_tol)?;
    let rho = solve_fp(&problem.rho0, &control, ops)?;
    let cost = cost_j(
        &control,
        &rho.slices,
        &problem.lagrangian,
        &problem.running,
        &problem.terminal,
    )?;

    let mut state = MfgState {
        rho,
        value,
        control,
        eta,
        eta0,
        cost,
        final_eps: eps_reached,
        residuals: MfgResiduals {
            fp: 0.0,
            hjb: 0.0,
            fenchel_gap: 0.0,
            fenchel_sup: 0.0,
            coupling_gap: 0.0,
        },
        history,
        outer_iterations: outer,
        converged: last_level_hit && warning.is_none(),
        warning,
    };
    state.residuals = optimality_residual(&state, problem, ops)?;
    Ok(state)
}

/// What a two-start comparison measured, and whether closeness may be
/// asserted at all.
#[derive(Debug, Clone)]
pub struct UniquenessReport {
    /// `L^1(Q)` distance between the two equilibrium densities.
    pub rho_distance: f64,
    /// `L^1(Q)` distance between the two equilibrium controls.
    pub control_distance: f64,
    /// `L^1(Q)` distance between the two value functions.
    pub value_distance: f64,
    /// True when both couplings are strictly convex (the regime in which the
    /// equilibrium is unique and the distances must vanish).
    pub uniqueness_guaranteed: bool,
    /// Human-readable verdict; warns instead of asserting outside the
    /// strictly convex regime.
    pub note: String,
    pub state_a: MfgState,
    pub state_b: MfgState,
}

/// Solve the same problem from two different initial control guesses and
/// report the distances between the resulting equilibria. Nothing is
/// asserted: couplings that are merely convex may admit several equilibria,
/// and the report says so.
pub fn uniqueness_probe(
    problem: &MfgProblem,
    params: &MfgParams,
    init_a: Vec<VectorField>,
    init_b: Vec<VectorField>,
    ops: &KernelOps,
) -> Result<UniquenessReport> {
    let mut params_a = params.clone();
    params_a.initial_control = Some(init_a);
    let mut params_b = params.clone();
    params_b.initial_control = Some(init_b);
    let state_a = solve_mfg(problem, &params_a, ops)?;
    let state_b = solve_mfg(problem, &params_b, ops)?;

    let rho_distance = trajectory_l1_distance(&state_a.rho.slices, &state_b.rho.slices);
    let control_distance = control_l1_distance(&state_a.control, &state_b.control);
    let value_distance = trajectory_l1_distance(&state_a.value.p, &state_b.value.p);
    let uniqueness_guaranteed =
        problem.running.strictly_convex() && problem.terminal.strictly_convex();
    let note = if uniqueness_guaranteed {
        format!(
            "strictly convex couplings: equilibrium is unique, measured density distance {rho_distance:.3e}"
        )
    } else {
        format!(
            "uniqueness not guaranteed: couplings are not strictly convex; \
             density distance {rho_distance:.3e} reported without assertion"
        )
    };
    Ok(UniquenessReport {
        rho_distance,
        control_distance,
        value_distance,
        uniqueness_guaranteed,
        note,
        state_a,
        state_b,
    })
}
