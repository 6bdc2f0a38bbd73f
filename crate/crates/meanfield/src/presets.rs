//! Named presets: control costs paired with their conjugates, density
//! couplings, and the growth-envelope report used at configuration time.
//!
//! Configuration files refer to costs and couplings by name; this module is
//! the single place those names are resolved. Every control-cost preset
//! returns the pair `(L, H)` with `H` the convex conjugate of `L`, so the
//! two equations of the coupled system are always driven by matching
//! functions.

use serde::Serialize;

use crate::convex::{ConvexIntegrand, MonotoneGraph1D, ScalarConvex};
use crate::error::{Error, Result};
use crate::mfg::Coupling;

/// Names accepted by [`control_cost`].
pub const CONTROL_COST_NAMES: [&str; 4] =
    ["quadratic", "ball-indicator", "quadratic-capped", "soft-bound"];

/// Names accepted by [`coupling`] (the step family has its own constructor
/// because it needs three numbers instead of one).
pub const COUPLING_NAMES: [&str; 5] = ["zero", "quadratic", "linear", "abs", "step"];

/// Resolve a control-cost preset into the conjugate pair `(L, H)`.
///
/// `bound` is the single strength parameter of each family:
///
/// * `quadratic`: `L = bound |u|^2 / 2`, `H = |q|^2 / (2 bound)`;
/// * `ball-indicator`: `L = indicator(|u| <= bound)`, `H = bound |q|`;
/// * `quadratic-capped`: `L = |u|^2/2` on `|u| <= bound` (`+inf` beyond),
///   `H = |q|^2/2` inside `|q| <= bound`, linear of slope `bound` outside;
/// * `soft-bound`: `L = bound - sqrt(bound^2 - |u|^2)` on `|u| <= bound`,
///   `H = bound (sqrt(1 + |q|^2) - 1)`.
pub fn control_cost(
    name: &str,
    dim: usize,
    bound: f64,
) -> Result<(ConvexIntegrand, ConvexIntegrand)> {
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "control cost strength must be a positive number, got {bound}"
        )));
    }
    match name {
        "quadratic" => Ok((
            ConvexIntegrand::squared_norm(dim, bound),
            ConvexIntegrand::squared_norm(dim, 1.0 / bound),
        )),
        "ball-indicator" => Ok((
            ConvexIntegrand::ball_indicator(dim, bound),
            ConvexIntegrand::support_ball(dim, bound),
        )),
        "quadratic-capped" => Ok((
            ConvexIntegrand::capped_quadratic(dim, bound),
            ConvexIntegrand::capped_quadratic_dual(dim, bound),
        )),
        "soft-bound" => Ok((
            ConvexIntegrand::soft_bound(dim, bound),
            ConvexIntegrand::smooth_sublinear(dim, bound),
        )),
        other => Err(Error::InvalidDomain(format!(
            "unknown control cost preset '{other}' (known: {})",
            CONTROL_COST_NAMES.join(", ")
        ))),
    }
}

/// Resolve a single-parameter coupling preset.
pub fn coupling(name: &str, strength: f64) -> Result<Coupling> {
    match name {
        "zero" => Ok(Coupling::Convex(ScalarConvex::zero())),
        "quadratic" => {
            if !(strength > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "quadratic coupling needs a positive coefficient, got {strength}"
                )));
            }
            Ok(Coupling::Convex(ScalarConvex::quadratic(strength)))
        }
        "linear" => Ok(Coupling::Convex(ScalarConvex::linear(strength))),
        "abs" => {
            if !(strength > 0.0) {
                return Err(Error::InvalidDomain(format!(
                    "abs coupling needs a positive scale, got {strength}"
                )));
            }
            Ok(Coupling::Convex(ScalarConvex::abs_val(strength)))
        }
        "step" => Err(Error::InvalidDomain(
            "the step coupling needs location, height, and base slope; \
             configure it through its dedicated keys"
            .into(),
        )),
        other => Err(Error::InvalidDomain(format!(
            "unknown coupling preset '{other}' (known: {})",
            COUPLING_NAMES.join(", ")
        ))),
    }
}

/// The discontinuous coupling family: derivative `slope * r` below
/// `location`, `slope * r + height` above, the jump filled maximally
/// monotone. With `slope > 0` the derivative keeps growing away from the
/// jump, so the jump interval `[slope * location, slope * location + height]`
/// is a genuine constraint on the selection there.
pub fn step_coupling(location: f64, height: f64, slope: f64) -> Result<Coupling> {
    if !(height >= 0.0) || !height.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "step coupling jump height must be nonnegative, got {height}"
        )));
    }
    if !(slope >= 0.0) || !slope.is_finite() {
        return Err(Error::InvalidDomain(format!(
            "step coupling base slope must be nonnegative, got {slope}"
        )));
    }
    let y = slope * location;
    let graph = MonotoneGraph1D::from_nodes(&[(location, y, y + height)], slope, slope)?;
    Ok(Coupling::Graph(graph))
}

/// Growth envelope of a coupling: the certified constants of
/// `m q <= g(q) <= c1 q^2 + c2`, re-verified by dense sampling.
#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    /// Slope of the linear lower bound (a subgradient of `g` at zero).
    pub lower_slope: f64,
    /// Quadratic upper-bound coefficients.
    pub upper_c1: f64,
    pub upper_c2: f64,
    /// Whether the sampled check confirmed both bounds.
    pub verified: bool,
    /// Largest sampled violation of either bound (rounding scale when ok).
    pub worst_violation: f64,
}

/// Verify the coupling's own envelope constants on a dense sample of
/// `[-20, 20]`.
pub fn envelope_report(g: &Coupling) -> EnvelopeReport {
    let lower_slope = g.linear_lower_slope();
    let (upper_c1, upper_c2) = g.quadratic_upper();
    let mut worst = 0.0f64;
    for i in -400..=400 {
        let q = i as f64 * 0.05;
        let v = g.value(q);
        worst = worst
            .max(lower_slope * q - v)
            .max(v - (upper_c1 * q * q + upper_c2));
    }
    EnvelopeReport {
        lower_slope,
        upper_c1,
        upper_c2,
        verified: worst <= 1e-9,
        worst_violation: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::conjugate_eval_lattice;

    #[test]
    fn control_cost_pairs_are_conjugates_by_lattice_search() {
        for name in CONTROL_COST_NAMES {
            let (l, h) = control_cost(name, 1, 1.3).unwrap();
            for q in [-2.0, -0.7, 0.0, 0.4, 1.9] {
                let direct = h.evaluate(&[q]);
                let searched = conjugate_eval_lattice(&l, &[q], 6.0, 120_001).unwrap();
                assert!(
                    (direct - searched).abs() < 1e-6,
                    "{name} at {q}: H = {direct}, sup-search = {searched}"
                );
            }
        }
    }

    #[test]
    fn unknown_names_are_rejected_with_the_known_list() {
        let err = control_cost("cubic", 1, 1.0).unwrap_err();
        assert!(err.to_string().contains("known:"), "{err}");
        let err = coupling("entropy", 1.0).unwrap_err();
        assert!(err.to_string().contains("known:"), "{err}");
        assert!(control_cost("quadratic", 1, 0.0).is_err());
        assert!(coupling("quadratic", -1.0).is_err());
    }

    #[test]
    fn step_coupling_exposes_its_jump() {
        let g = step_coupling(0.4, 0.5, 1.0).unwrap();
        let jumps = g.jump_points();
        assert_eq!(jumps.len(), 1);
        assert!((jumps[0].location - 0.4).abs() < 1e-15);
        assert!((jumps[0].lower - 0.4).abs() < 1e-15);
        assert!((jumps[0].upper - 0.9).abs() < 1e-15);
        assert!(!g.differentiable());
        // Height zero degenerates to a differentiable quadratic-like coupling.
        let smooth = step_coupling(0.4, 0.0, 1.0).unwrap();
        assert!(smooth.differentiable());
    }

    #[test]
    fn envelopes_verify_for_every_preset() {
        let mut all: Vec<Coupling> = ["zero", "quadratic", "linear", "abs"]
            .iter()
            .map(|n| coupling(n, 0.8).unwrap())
            .collect();
        all.push(step_coupling(0.4, 0.5, 1.0).unwrap());
        all.push(Coupling::Convex(ScalarConvex::step(0.2, 0.0, 0.7).unwrap()));
        for g in &all {
            let report = envelope_report(g);
            assert!(
                report.verified,
                "{g:?}: envelope violated by {}",
                report.worst_violation
            );
        }
    }
}
