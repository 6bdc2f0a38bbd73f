//! Property tests for the convex-analysis layer.
//!
//! Two invariants are load-bearing for every solver in the crate and cheap
//! to check over randomized inputs, so they get proptest coverage instead
//! of example tables:
//!
//! * the Fenchel identity `L(u) + H(q) - u . q >= 0`, with equality exactly
//!   when `u` is selected from the subdifferential of `H` at `q` — this is
//!   the optimality certificate the equilibrium residual is built on;
//! * the Yosida machinery on scalar couplings: resolvents are nonexpansive
//!   and the smoothed value never exceeds the original — the two facts that
//!   make the smoothing ladder stable and monotone.

use meanfield::convex::SelectionRule;
use meanfield::convex::integrand::fenchel_residual;
use meanfield::presets;
use proptest::prelude::*;

/// Slack for identities evaluated through closed forms: a few ulps of the
/// intermediate quantities, far below any tolerance used by the solvers.
const EXACT_SLACK: f64 = 1e-9;

/// Kink detection width for subdifferential selection, matching the
/// gradient tolerance convention used by the control map.
const KINK_TOL: f64 = 1e-8;

const COST_PRESETS: [&str; 4] = [
    "quadratic",
    "ball-indicator",
    "quadratic-capped",
    "soft-bound",
];

const COUPLING_PRESETS: [&str; 4] = ["zero", "quadratic", "linear", "abs"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    /// For every cost preset the pair `(L, H)` is a genuine conjugate pair:
    /// arbitrary `(u, q)` give a nonnegative Fenchel gap, and choosing
    /// `u` from the subdifferential of `H` at `q` closes the gap exactly.
    #[test]
    fn fenchel_identity_certifies_subgradient_selections(
        preset in 0usize..COST_PRESETS.len(),
        dim in 1usize..=2,
        bound in 0.2f64..3.0,
        raw_u in prop::array::uniform2(-2.5f64..2.5),
        raw_q in prop::array::uniform2(-2.5f64..2.5),
    ) {
        let (cost, hamiltonian) =
            presets::control_cost(COST_PRESETS[preset], dim, bound).unwrap();

        let mut u = raw_u;
        let mut q = raw_q;
        if dim == 1 {
            u[1] = 0.0;
            q[1] = 0.0;
        }
        // Keep `u` strictly inside the cost domain so the gap is finite and
        // the inequality is informative (outside, both sides are +inf).
        let r = cost.domain_radius();
        if r.is_finite() {
            let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
            if n > 0.95 * r {
                let s = 0.95 * r / n;
                u[0] *= s;
                u[1] *= s;
            }
        }

        let gap = fenchel_residual(&cost, &u[..dim], &q[..dim]).unwrap();
        prop_assert!(
            gap >= -EXACT_SLACK,
            "Fenchel gap went negative: {gap:e} for {} at u={u:?}, q={q:?}",
            COST_PRESETS[preset],
        );

        let selected = hamiltonian
            .subdiff_select(&q[..dim], SelectionRule::MinimalNorm, KINK_TOL)
            .unwrap();
        let closed =
            fenchel_residual(&cost, &selected.gradient[..dim], &q[..dim]).unwrap();
        prop_assert!(
            closed.abs() <= EXACT_SLACK,
            "selected subgradient left a gap of {closed:e} for {} at q={q:?}",
            COST_PRESETS[preset],
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    /// Yosida smoothing of every scalar coupling (smooth presets and the
    /// discontinuous step) behaves like the theory says at any level:
    /// the resolvent is nonexpansive and the smoothed value sits below the
    /// original, with the smoothed derivative monotone.
    #[test]
    fn yosida_smoothing_is_nonexpansive_and_below(
        preset in 0usize..=COUPLING_PRESETS.len(),
        strength in 0.3f64..2.0,
        eps in 1e-3f64..1.0,
        r in -3.0f64..3.0,
        s in -3.0f64..3.0,
    ) {
        let g = if preset < COUPLING_PRESETS.len() {
            presets::coupling(COUPLING_PRESETS[preset], strength).unwrap()
        } else {
            // Jump of height `strength` at 0.4 over a unit base slope.
            presets::step_coupling(0.4, strength, 1.0).unwrap()
        };

        let jr = g.resolvent(eps, r).unwrap();
        let js = g.resolvent(eps, s).unwrap();
        prop_assert!(
            (jr - js).abs() <= (r - s).abs() + EXACT_SLACK,
            "resolvent expanded: |J({r}) - J({s})| = {} > {}",
            (jr - js).abs(),
            (r - s).abs(),
        );

        let smoothed = g.yosida_value(eps, r).unwrap();
        let original = g.value(r);
        prop_assert!(
            smoothed <= original + EXACT_SLACK,
            "smoothed value {smoothed} exceeds original {original} at r={r}, eps={eps}",
        );

        let dr = g.yosida_grad(eps, r).unwrap();
        let ds = g.yosida_grad(eps, s).unwrap();
        prop_assert!(
            (dr - ds) * (r - s) >= -EXACT_SLACK,
            "smoothed derivative not monotone: g'({r})={dr}, g'({s})={ds}",
        );
    }
}
