//! The backward value equation as a contraction fixed point.
//!
//! Given a running source `eta(t, x)` and a terminal payoff `-eta0`, the
//! value function solves, backward in time,
//!
//! ```text
//! -dp/dt - nu Laplacian(p) + H(grad p) = eta,      p(T) = -eta0.
//! ```
//!
//! Instead of time-stepping a nonlinear PDE, the solver works on the
//! gradient `z = grad p` in mild form: `z = Gamma(z) + w` where `Gamma`
//! convolves `H(z)` with the gradient heat kernel. On a short enough slab
//! the map `Gamma` is a strict contraction — its Lipschitz constant is
//! `Lip(H) * omega * sqrt(T_slab)` with `omega` the gradient-kernel
//! constant — so Picard iteration converges geometrically and the horizon
//! is covered slab by slab. This example runs one solve, prints the
//! contraction bookkeeping, and then measures the contraction factor
//! directly on random input pairs.

use meanfield::convex::ConvexIntegrand;
use meanfield::grid::{DomainSpec, KernelOps, ScalarField};
use meanfield::hjb::{contraction_probe, solve_hjb, HjbParams};
use meanfield::mfg::best_response;

fn main() {
    let domain = DomainSpec::new(1, 4.0, 256, 1.0, 128, 0.5).unwrap();
    let ops = KernelOps::for_domain(&domain);
    let hamiltonian = ConvexIntegrand::capped_quadratic_dual(1, 1.0);

    // A smooth manufactured source and terminal payoff.
    let eta: Vec<ScalarField> = (0..=domain.time_steps)
        .map(|k| {
            let t = domain.time(k);
            let mut f = ScalarField::from_fn(&domain, |x| {
                0.4 * (std::f64::consts::PI * x[0] / 4.0).sin() * (1.0 + 0.5 * t)
            });
            f.time_index = k;
            f
        })
        .collect();
    let eta0 = ScalarField::gaussian(&domain, &[0.5, 0.0], 0.8);

    let traj = solve_hjb(&eta, &eta0, &hamiltonian, &HjbParams::default(), &ops).unwrap();
    let d = &traj.diagnostics;
    println!("backward solve over {} steps:", domain.time_steps);
    println!("  slabs               : {:?} steps each", d.slab_steps);
    println!("  slab halvings       : {}", d.halvings);
    println!("  Picard iterations   : {}", d.residual_history.len());
    println!("  contraction ratio   : {:.4} (must stay < 1)", d.contraction_ratio);
    println!("  fixed-point residual: {:.3e}", d.mild_residual);
    println!("  grad(p) vs z gap    : {:.3e}", d.grad_consistency);
    println!();

    // The optimal feedback control is a subgradient selection of H at z.
    let control = best_response(&traj.grad_p, &hamiltonian, 1e-8).unwrap();
    let sup: f64 = control.iter().map(|u| u.sup_magnitude()).fold(0.0, f64::max);
    println!("feedback control u in dH(grad p): sup |u| = {sup:.4} (cap 1.0)");
    println!();

    // Measure the contraction factor of Gamma directly: push random
    // band-limited pairs through one slab and take the worst ratio.
    let slab = d.slab_steps[0];
    for steps in [slab, slab / 2] {
        let probe = contraction_probe(&hamiltonian, &ops, steps, 16, 7);
        println!(
            "measured contraction over {steps:>3} steps: worst ratio {:.4} across {} pairs",
            probe.max_ratio,
            probe.ratios.len(),
        );
    }
    println!("halving the slab tightens the factor like sqrt(T_slab).");
}
