//! Forward transport-diffusion of a density under a given drift.
//!
//! The forward equation
//!
//! ```text
//! d rho/dt - nu Laplacian(rho) + div(rho u) = 0,     rho(0) = rho0,
//! ```
//!
//! is advanced by operator splitting: an exact spectral diffusion half-step
//! around a conservative upwind transport step, with substepping whenever
//! the drift would outrun a cell. Three structural facts hold by
//! construction and are printed along the run:
//!
//! * total mass is conserved to machine precision at every step;
//! * nonnegative data stay nonnegative;
//! * two densities pushed by the same drift cannot separate (the map is an
//!   `L^1` contraction in the initial data).
//!
//! The same trajectory is then recomputed through the Duhamel (mild) form
//! — the fixed point of an integral equation rather than a time-stepper —
//! and the two answers are compared.

use meanfield::fp::{solve_fp, solve_fp_mild};
use meanfield::grid::{DomainSpec, KernelOps, ScalarField, VectorField};

fn main() {
    let domain = DomainSpec::new(1, 4.0, 256, 1.0, 128, 0.5).unwrap();
    let ops = KernelOps::for_domain(&domain);

    // A normalized two-bump initial density and a stationary sine drift.
    let mut rho0 = ScalarField::from_fn(&domain, |x| {
        let a = (-((x[0] + 1.5) / 0.4).powi(2)).exp();
        let b = 0.6 * (-((x[0] - 1.0) / 0.6).powi(2)).exp();
        a + b
    });
    let mass = rho0.mass();
    rho0.scale(1.0 / mass);
    let drift = std::iter::repeat(VectorField::from_fn(&domain, |x| {
        [0.8 * (0.5 * std::f64::consts::PI * x[0] / 4.0).sin(), 0.0]
    }))
    .take(domain.time_steps)
    .collect::<Vec<_>>();

    let traj = solve_fp(&rho0, &drift, &ops).unwrap();
    let d = &traj.diagnostics;
    println!("splitting scheme on a {}-cell grid, {} steps:", domain.cells(), domain.time_steps);
    println!("  mass drift        : {:.3e}", d.mass_drift);
    println!("  minimum density   : {:.3e} (before clamp {:.3e})", traj.final_slice().min_value(), d.min_before_clamp);
    println!("  transport substeps: {} per step at most", d.max_substeps);
    println!();

    // L^1 contraction in the initial data: perturb and push with the same u.
    let mut other = rho0.clone();
    {
        let domain_ref = &domain;
        let bump = ScalarField::from_fn(domain_ref, |x| 0.05 * (-(x[0] / 0.3).powi(2)).exp());
        other.axpy(1.0, &bump);
    }
    let traj_other = solve_fp(&other, &drift, &ops).unwrap();
    let initial_gap = rho0.l1_distance(&other);
    let mut worst_ratio: f64 = 0.0;
    for (a, b) in traj.slices.iter().zip(&traj_other.slices) {
        worst_ratio = worst_ratio.max(a.l1_distance(b) / initial_gap);
    }
    println!("same-drift contraction: |rho_a(t) - rho_b(t)|_1 / |gap(0)|_1 <= {worst_ratio:.12}");
    println!();

    // The mild (Duhamel) solution of the same problem:
    //   rho(t) = S(t) rho0 - int_0^t grad S(t-s) . (rho u)(s) ds.
    let mild = solve_fp_mild(&rho0, &drift, &ops, 1e-10, 200).unwrap();
    let mut gap: f64 = 0.0;
    for (a, b) in traj.slices.iter().zip(&mild.slices) {
        gap = gap.max(a.l1_distance(b));
    }
    println!("splitting vs Duhamel fixed point: max_t L1 gap = {gap:.3e}");
    println!("(two discretizations of the same equation; the gap is the");
    println!(" scheme truncation error, shrinking with dx and dt)");
}
