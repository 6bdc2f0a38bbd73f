//! Scalar convex functions and their Moreau-Yosida regularization.
//!
//! These are the density couplings of the coupled system: convex functions of
//! one real variable whose (possibly multivalued) derivative is a
//! [`MonotoneGraph1D`]. The Yosida approximation
//!
//! ```text
//! g_eps(q)  = min_theta { (q - theta)^2 / (2 eps) + g(theta) }
//!           = (q - J_eps q)^2 / (2 eps) + g(J_eps q),
//! g_eps'(q) = (q - J_eps q) / eps,
//! ```
//!
//! with `J_eps = (I + eps * dg)^{-1}` the resolvent, turns a multivalued
//! coupling into a monotone `1/eps`-Lipschitz one while keeping
//! `g_eps <= g` everywhere. Presets carry closed-form resolvents; the generic
//! path goes through graph bisection, and both are cross-checked in tests.

use crate::convex::graph::MonotoneGraph1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
enum ScalarKind {
    Zero,
    /// `coeff * r^2 / 2`
    Quadratic { coeff: f64 },
    /// `slope * r`
    Linear { slope: f64 },
    /// `scale * |r|`
    AbsVal { scale: f64 },
    /// Integral of a step derivative: slope `lower` below `at`, `upper` above.
    Step { at: f64, lower: f64, upper: f64 },
}

/// A convex function of one real variable with Yosida machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarConvex {
    kind: ScalarKind,
}

impl ScalarConvex {
    pub fn zero() -> Self {
        Self { kind: ScalarKind::Zero }
    }

    /// `coeff * r^2 / 2`, `coeff > 0`. Strictly convex and differentiable.
    pub fn quadratic(coeff: f64) -> Self {
        assert!(coeff > 0.0, "quadratic coupling needs a positive coefficient");
        Self {
            kind: ScalarKind::Quadratic { coeff },
        }
    }

    /// `slope * r`. Monotone but not strictly convex.
    pub fn linear(slope: f64) -> Self {
        Self {
            kind: ScalarKind::Linear { slope },
        }
    }

    /// `scale * |r|`, `scale > 0`. Kink at the origin.
    pub fn abs_val(scale: f64) -> Self {
        assert!(scale > 0.0, "abs coupling needs a positive scale");
        Self {
            kind: ScalarKind::AbsVal { scale },
        }
    }

    /// Piecewise-linear convex function whose derivative steps from `lower`
    /// to `upper` at `at` (the jump is filled maximally monotone).
    pub fn step(at: f64, lower: f64, upper: f64) -> Result<Self> {
        if upper < lower {
            return Err(Error::NotMonotone {
                x_lo: at,
                x_hi: at,
                drop: lower - upper,
            });
        }
        Ok(Self {
            kind: ScalarKind::Step { at, lower, upper },
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            ScalarKind::Zero => 0.0,
            ScalarKind::Quadratic { coeff } => 0.5 * coeff * r * r,
            ScalarKind::Linear { slope } => slope * r,
            ScalarKind::AbsVal { scale } => scale * r.abs(),
            ScalarKind::Step { at, lower, upper } => {
                if r <= at {
                    lower * r
                } else {
                    lower * at + upper * (r - at)
                }
            }
        }
    }

    /// The derivative as a maximal monotone graph (jumps filled).
    pub fn derivative_graph(&self) -> MonotoneGraph1D {
        match self.kind {
            ScalarKind::Zero => MonotoneGraph1D::from_nodes(&[(0.0, 0.0, 0.0)], 0.0, 0.0).unwrap(),
            ScalarKind::Quadratic { coeff } => {
                MonotoneGraph1D::from_nodes(&[(0.0, 0.0, 0.0)], coeff, coeff).unwrap()
            }
            ScalarKind::Linear { slope } => {
                MonotoneGraph1D::from_nodes(&[(0.0, slope, slope)], 0.0, 0.0).unwrap()
            }
            ScalarKind::AbsVal { scale } => {
                MonotoneGraph1D::from_nodes(&[(0.0, -scale, scale)], 0.0, 0.0).unwrap()
            }
            ScalarKind::Step { at, lower, upper } => MonotoneGraph1D::step(at, lower, upper).unwrap(),
        }
    }

    /// Subdifferential at `r` as a closed interval.
    pub fn derivative_interval(&self, r: f64) -> (f64, f64) {
        self.derivative_graph().value_interval(r)
    }

    /// True when the derivative is single-valued everywhere.
    pub fn differentiable(&self) -> bool {
        matches!(
            self.kind,
            ScalarKind::Zero | ScalarKind::Quadratic { .. } | ScalarKind::Linear { .. }
        )
    }

    pub fn strictly_convex(&self) -> bool {
        matches!(self.kind, ScalarKind::Quadratic { .. })
    }

    /// Resolvent `J_eps(q)`; closed forms per preset, `eps = 0` is the identity.
    pub fn resolvent(&self, eps: f64, q: f64) -> f64 {
        assert!(eps >= 0.0);
        if eps == 0.0 {
            return q;
        }
        match self.kind {
            ScalarKind::Zero => q,
            ScalarKind::Quadratic { coeff } => q / (1.0 + eps * coeff),
            ScalarKind::Linear { slope } => q - eps * slope,
            ScalarKind::AbsVal { scale } => {
                let shift = eps * scale;
                if q > shift {
                    q - shift
                } else if q < -shift {
                    q + shift
                } else {
                    0.0
                }
            }
            ScalarKind::Step { at, lower, upper } => {
                if q < at + eps * lower {
                    q - eps * lower
                } else if q > at + eps * upper {
                    q - eps * upper
                } else {
                    at
                }
            }
        }
    }

    /// Moreau envelope `g_eps(q)`; equals `g(q)` at `eps = 0`.
    pub fn yosida_value(&self, eps: f64, q: f64) -> f64 {
        if eps == 0.0 {
            return self.eval(q);
        }
        let j = self.resolvent(eps, q);
        (q - j).powi(2) / (2.0 * eps) + self.eval(j)
    }

    /// Yosida gradient `g_eps'(q) = (q - J_eps q)/eps`; at `eps = 0` the
    /// minimal-norm element of the subdifferential (the derivative itself
    /// when `g` is differentiable).
    pub fn yosida_grad(&self, eps: f64, q: f64) -> f64 {
        if eps == 0.0 {
            let (lo, hi) = self.derivative_interval(q);
            return lo.max(0.0f64.min(hi)); // clamp 0 into [lo, hi]
        }
        (q - self.resolvent(eps, q)) / eps
    }

    /// Convex conjugate `g*(eta) = sup_r { eta r - g(r) }`; `+inf` outside
    /// the closure of the derivative's range.
    pub fn conjugate(&self, eta: f64) -> f64 {
        match self.kind {
            ScalarKind::Zero => {
                if eta == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ScalarKind::Quadratic { coeff } => eta * eta / (2.0 * coeff),
            ScalarKind::Linear { slope } => {
                if eta == slope {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ScalarKind::AbsVal { scale } => {
                if eta.abs() <= scale {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ScalarKind::Step { at, lower, upper } => {
                if eta < lower || eta > upper {
                    f64::INFINITY
                } else {
                    // Supremum attained at the kink.
                    at * eta - self.eval(at)
                }
            }
        }
    }

    /// Fenchel residual `g(r) + g*(eta) - r * eta` (always `>= 0`), with the
    /// conjugate domain widened by `slack` to absorb rounding in `eta`.
    pub fn fenchel_residual(&self, r: f64, eta: f64, slack: f64) -> f64 {
        let eta_eff = match self.kind {
            ScalarKind::Linear { slope } => {
                if (eta - slope).abs() <= slack {
                    slope
                } else {
                    eta
                }
            }
            ScalarKind::AbsVal { scale } => {
                if eta.abs() <= scale + slack {
                    eta.clamp(-scale, scale)
                } else {
                    eta
                }
            }
            ScalarKind::Step { lower, upper, .. } => {
                if eta >= lower - slack && eta <= upper + slack {
                    eta.clamp(lower, upper)
                } else {
                    eta
                }
            }
            ScalarKind::Zero => {
                if eta.abs() <= slack {
                    0.0
                } else {
                    eta
                }
            }
            _ => eta,
        };
        self.eval(r) + self.conjugate(eta_eff) - r * eta_eff
    }

    /// Largest slope `m` with `m * q <= g(q)` for all `q` (hypothesis envelope).
    pub fn linear_lower_slope(&self) -> f64 {
        match self.kind {
            ScalarKind::Zero => 0.0,
            ScalarKind::Quadratic { .. } => 0.0,
            ScalarKind::Linear { slope } => slope,
            ScalarKind::AbsVal { .. } => 0.0,
            ScalarKind::Step { lower, .. } => lower,
        }
    }

    /// Coefficients `(c1, c2)` with `g(q) <= c1 q^2 + c2` (hypothesis envelope).
    pub fn quadratic_upper(&self) -> (f64, f64) {
        match self.kind {
            ScalarKind::Zero => (0.0, 0.0),
            ScalarKind::Quadratic { coeff } => (0.5 * coeff, 0.0),
            ScalarKind::Linear { slope } => (0.5 * slope.abs(), 0.5 * slope.abs()),
            ScalarKind::AbsVal { scale } => (0.5 * scale, 0.5 * scale),
            ScalarKind::Step { at, lower, upper } => {
                let m = lower.abs().max(upper.abs());
                (0.5 * m, 0.5 * m + m * at.abs() + self.eval(at).abs())
            }
        }
    }

    /// Jump points of the derivative (empty for differentiable presets).
    pub fn derivative_jumps(&self) -> Vec<crate::convex::graph::JumpPoint> {
        self.derivative_graph().jump_points()
    }
}
