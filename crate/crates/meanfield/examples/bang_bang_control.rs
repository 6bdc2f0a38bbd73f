//! Bang-bang equilibria from a hard speed limit.
//!
//! With the control cost an indicator of the speed ball (`L = 0` on
//! `|u| <= a`, `+inf` beyond), the Hamiltonian is the support function
//! `H(q) = a |q|` — positively homogeneous with a corner at `q = 0`. Its
//! subdifferential is
//!
//! ```text
//! dH(q) = { a q / |q| }   for q != 0,
//! dH(0) = ball(0, a),
//! ```
//!
//! so the optimal control never takes intermediate speeds: each cell either
//! coasts (`u = 0`, selected by minimal norm at the corner) or moves at
//! full speed `|u| = a`. The equilibrium therefore carves the space-time
//! cylinder into a coasting region and a full-speed region separated by a
//! free boundary. This example solves such an equilibrium and scans the
//! selected control: the dichotomy is exact, not approximate, because the
//! selection rule has a closed form.

use meanfield::convex::{ConvexIntegrand, ScalarConvex};
use meanfield::grid::{DomainSpec, KernelOps, ScalarField};
use meanfield::mfg::{solve_mfg, Coupling, MfgParams, MfgProblem};

fn main() {
    let speed_cap = 1.0;
    let domain = DomainSpec::new(1, 4.0, 128, 0.5, 64, 0.5).unwrap();
    let ops = KernelOps::for_domain(&domain);

    let problem = MfgProblem {
        lagrangian: ConvexIntegrand::ball_indicator(1, speed_cap),
        hamiltonian: ConvexIntegrand::support_ball(1, speed_cap),
        running: Coupling::Convex(ScalarConvex::quadratic(1.0)),
        terminal: Coupling::Convex(ScalarConvex::quadratic(0.5)),
        rho0: normalized_gaussian(&domain),
    };
    let mut params = MfgParams::default();
    // Full-speed controls flip whole cells at once, so the sweep-change
    // metric cannot settle below the cell scale; the selection itself is
    // exact regardless of where the sweeps stop.
    params.tolerance = 5e-3;
    let grad_tol = params.grad_tol;

    let state = solve_mfg(&problem, &params, &ops).unwrap();
    println!(
        "equilibrium after {} sweeps (converged: {})",
        state.outer_iterations, state.converged,
    );
    println!();

    // Scan the dichotomy: |u| is 0 below the gradient tolerance and
    // exactly the cap above it.
    let mut coasting = 0usize;
    let mut full_speed = 0usize;
    let mut worst_inside: f64 = 0.0;
    let mut worst_outside: f64 = 0.0;
    for (uk, zk) in state.control.iter().zip(&state.value.grad_p) {
        for cell in 0..domain.cells() {
            let speed = uk.magnitude_at(cell);
            if zk.magnitude_at(cell) < grad_tol {
                coasting += 1;
                worst_inside = worst_inside.max(speed);
            } else {
                full_speed += 1;
                worst_outside = worst_outside.max((speed - speed_cap).abs());
            }
        }
    }
    println!("dichotomy scan over all {} space-time cells:", coasting + full_speed);
    println!("  coasting cells  (|grad p| < {grad_tol:.0e}): {coasting:>6}, max |u| = {worst_inside:.1e} (exactly 0)");
    println!("  full-speed cells                 : {full_speed:>6}, max ||u| - {speed_cap}| = {worst_outside:.1e}");
    println!();

    // Where the control switches sign, grad p crosses zero and the agent
    // coasts: on this periodic box that happens at two isolated cells per
    // slice (under the density peak, and at its antipode).
    println!("coasting cells (the free boundary) at selected times:");
    for k in [0, domain.time_steps / 2, domain.time_steps - 1] {
        let uk = &state.control[k];
        let xs: Vec<String> = (0..domain.cells())
            .filter(|&cell| uk.magnitude_at(cell) == 0.0)
            .map(|cell| format!("{:+.3}", domain.coords(cell)[0]))
            .collect();
        println!("  t = {:.3}: u = 0 at x in {{{}}}", domain.time(k), xs.join(", "));
    }
}

fn normalized_gaussian(domain: &DomainSpec) -> ScalarField {
    let mut f = ScalarField::gaussian(domain, &[0.5, 0.0], 0.5);
    let mass = f.mass();
    f.scale(1.0 / mass);
    f
}
