//! Convex integrands of a vector argument: running costs and Hamiltonians.
//!
//! A `ConvexIntegrand` is a proper lower-semicontinuous convex function of a
//! `d`-vector (`d` = 1 or 2), extended-real valued (`f64::INFINITY` outside
//! the effective domain). The cost/Hamiltonian pairing is the Fenchel
//! conjugacy
//!
//! ```text
//! H(q) = sup_u { u . q - L(u) },    L(u) = sup_q { u . q - H(q) },
//! ```
//!
//! and the optimality certificate used everywhere downstream is the Fenchel
//! identity: `L(u) + H(q) - u . q = 0` exactly when `u` is a subgradient
//! selection of `H` at `q`.
//!
//! All presets are radial, so subdifferentials are intervals of rays and the
//! two selection rules (minimal norm, most-aligned-with-direction) have
//! closed forms. The evaluation interface carries a `GridIndex` so that
//! integrands may in principle depend measurably on `(t, x)`; the shipped
//! presets ignore it.

use crate::error::{Error, Result};

/// Space-time lattice position handed to integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GridIndex {
    pub time: usize,
    pub cell: usize,
}

/// How to pick one element from a set-valued subdifferential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    /// The element of least Euclidean norm (0 whenever 0 is a subgradient).
    MinimalNorm,
    /// The element best aligned with the given direction.
    Direction([f64; 2]),
}

/// One chosen subgradient plus whether the subdifferential was a singleton.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientSelection {
    pub gradient: [f64; 2],
    pub is_unique: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum IntegrandKind {
    Zero,
    /// Constant value (a Hamiltonian that ignores its argument).
    Constant { value: f64 },
    /// `scale * |u|^2 / 2`.
    SquaredNorm { scale: f64 },
    /// Indicator of the closed ball of the given radius.
    BallIndicator { radius: f64 },
    /// `|u|^2 / 2` on the closed ball, `+inf` outside.
    CappedQuadratic { radius: f64 },
    /// Support function of the ball: `slope * |q|`.
    SupportBall { slope: f64 },
    /// Conjugate of `CappedQuadratic`: `|q|^2/2` inside, `r|q| - r^2/2` outside.
    CappedQuadraticDual { radius: f64 },
    /// `bound * (sqrt(1 + |q|^2) - 1)`: smooth, sublinear, slope < bound.
    SmoothSublinear { bound: f64 },
    /// Conjugate of `SmoothSublinear`: `bound - sqrt(bound^2 - |u|^2)` on the ball.
    SoftBound { bound: f64 },
    /// Fallback conjugate computed by lattice search at evaluation time.
    NumericConjugate {
        base: Box<ConvexIntegrand>,
        search_radius: f64,
        resolution: usize,
    },
}

/// A convex function of a `dim`-vector with conjugation and selection rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexIntegrand {
    pub dim: usize,
    kind: IntegrandKind,
}

/// Relative tolerance for deciding that a point sits on a domain boundary.
const BOUNDARY_TOL: f64 = 1e-9;

fn norm(u: &[f64]) -> f64 {
    match u.len() {
        1 => u[0].abs(),
        _ => (u[0] * u[0] + u[1] * u[1]).sqrt(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    match a.len() {
        1 => a[0] * b[0],
        _ => a[0] * b[0] + a[1] * b[1],
    }
}

fn to_pair(u: &[f64]) -> [f64; 2] {
    match u.len() {
        1 => [u[0], 0.0],
        _ => [u[0], u[1]],
    }
}

impl ConvexIntegrand {
    pub fn zero(dim: usize) -> Self {
        Self { dim, kind: IntegrandKind::Zero }
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self { dim, kind: IntegrandKind::Constant { value } }
    }

    /// `scale * |u|^2 / 2`, `scale > 0`.
    pub fn squared_norm(dim: usize, scale: f64) -> Self {
        assert!(scale > 0.0);
        Self { dim, kind: IntegrandKind::SquaredNorm { scale } }
    }

    /// Indicator of `{ |u| <= radius }` (hard control bound).
    pub fn ball_indicator(dim: usize, radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { dim, kind: IntegrandKind::BallIndicator { radius } }
    }

    /// `|u|^2/2` restricted to `{ |u| <= radius }` (quadratic cost, hard cap).
    pub fn capped_quadratic(dim: usize, radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { dim, kind: IntegrandKind::CappedQuadratic { radius } }
    }

    /// `slope * |q|` (support function of the ball; kink at the origin).
    pub fn support_ball(dim: usize, slope: f64) -> Self {
        assert!(slope > 0.0);
        Self { dim, kind: IntegrandKind::SupportBall { slope } }
    }

    /// Conjugate of [`Self::capped_quadratic`].
    pub fn capped_quadratic_dual(dim: usize, radius: f64) -> Self {
        assert!(radius > 0.0);
        Self { dim, kind: IntegrandKind::CappedQuadraticDual { radius } }
    }

    /// `bound * (sqrt(1 + |q|^2) - 1)`: smooth with slopes strictly inside
    /// the bound.
    pub fn smooth_sublinear(dim: usize, bound: f64) -> Self {
        assert!(bound > 0.0);
        Self { dim, kind: IntegrandKind::SmoothSublinear { bound } }
    }

    /// Conjugate of [`Self::smooth_sublinear`]: `bound - sqrt(bound^2 - |u|^2)`.
    pub fn soft_bound(dim: usize, bound: f64) -> Self {
        assert!(bound > 0.0);
        Self { dim, kind: IntegrandKind::SoftBound { bound } }
    }

    pub fn evaluate(&self, u: &[f64]) -> f64 {
        debug_assert_eq!(u.len(), self.dim);
        let r = norm(u);
        match &self.kind {
            IntegrandKind::Zero => 0.0,
            IntegrandKind::Constant { value } => *value,
            IntegrandKind::SquaredNorm { scale } => 0.5 * scale * r * r,
            IntegrandKind::BallIndicator { radius } => {
                if r <= radius * (1.0 + BOUNDARY_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            IntegrandKind::CappedQuadratic { radius } => {
                if r <= radius * (1.0 + BOUNDARY_TOL) {
                    0.5 * r * r
                } else {
                    f64::INFINITY
                }
            }
            IntegrandKind::SupportBall { slope } => slope * r,
            IntegrandKind::CappedQuadraticDual { radius } => {
                if r <= *radius {
                    0.5 * r * r
                } else {
                    radius * r - 0.5 * radius * radius
                }
            }
            IntegrandKind::SmoothSublinear { bound } => bound * ((1.0 + r * r).sqrt() - 1.0),
            IntegrandKind::SoftBound { bound } => {
                if r <= bound * (1.0 + BOUNDARY_TOL) {
                    bound - (bound * bound - (r * r).min(bound * bound)).sqrt()
                } else {
                    f64::INFINITY
                }
            }
            IntegrandKind::NumericConjugate {
                base,
                search_radius,
                resolution,
            } => conjugate_eval_lattice(base, u, *search_radius, *resolution)
                .unwrap_or(f64::INFINITY),
        }
    }

    /// Evaluation hook carrying the space-time index (presets ignore it).
    pub fn evaluate_at(&self, _at: GridIndex, u: &[f64]) -> f64 {
        self.evaluate(u)
    }

    /// Radius of the effective domain (`inf` when the function is finite
    /// everywhere).
    pub fn domain_radius(&self) -> f64 {
        match &self.kind {
            IntegrandKind::BallIndicator { radius }
            | IntegrandKind::CappedQuadratic { radius } => *radius,
            IntegrandKind::SoftBound { bound } => *bound,
            _ => f64::INFINITY,
        }
    }

    /// Supremum of subgradient norms over the domain interior, when finite.
    ///
    /// This is the Lipschitz constant for the sublinear Hamiltonian presets.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match &self.kind {
            IntegrandKind::Zero | IntegrandKind::Constant { .. } => Some(0.0),
            IntegrandKind::SupportBall { slope } => Some(*slope),
            IntegrandKind::CappedQuadraticDual { radius } => Some(*radius),
            IntegrandKind::SmoothSublinear { bound } => Some(*bound),
            _ => None,
        }
    }

    /// Closed-form conjugate partner when one exists.
    pub fn analytic_conjugate(&self) -> Option<ConvexIntegrand> {
        let kind = match &self.kind {
            IntegrandKind::SquaredNorm { scale } => IntegrandKind::SquaredNorm { scale: 1.0 / scale },
            IntegrandKind::BallIndicator { radius } => IntegrandKind::SupportBall { slope: *radius },
            IntegrandKind::SupportBall { slope } => IntegrandKind::BallIndicator { radius: *slope },
            IntegrandKind::CappedQuadratic { radius } => {
                IntegrandKind::CappedQuadraticDual { radius: *radius }
            }
            IntegrandKind::CappedQuadraticDual { radius } => {
                IntegrandKind::CappedQuadratic { radius: *radius }
            }
            IntegrandKind::SmoothSublinear { bound } => IntegrandKind::SoftBound { bound: *bound },
            IntegrandKind::SoftBound { bound } => IntegrandKind::SmoothSublinear { bound: *bound },
            _ => return None,
        };
        Some(ConvexIntegrand { dim: self.dim, kind })
    }

    /// Conjugate value `f*(v)`: analytic when available, lattice otherwise.
    pub fn conjugate_value(&self, v: &[f64]) -> Result<f64> {
        match &self.kind {
            IntegrandKind::Zero => Ok(if norm(v) == 0.0 { 0.0 } else { f64::INFINITY }),
            IntegrandKind::Constant { value } => {
                Ok(if norm(v) == 0.0 { -value } else { f64::INFINITY })
            }
            IntegrandKind::NumericConjugate { base, .. } => {
                // Conjugating twice closes the loop for proper lsc convex bases.
                Ok(base.evaluate(v))
            }
            _ => match self.analytic_conjugate() {
                Some(conj) => Ok(conj.evaluate(v)),
                None => conjugate_eval(self, v, 1e3, 4001),
            },
        }
    }

    /// Analytic directional derivative `f'(u; dir)` (`+inf` when every step
    /// in that direction leaves the effective domain, `-inf` on boundary
    /// points with vertical slope).
    pub fn directional_derivative(&self, u: &[f64], dir: &[f64]) -> f64 {
        let r = norm(u);
        let radial = if r > 0.0 { dot(u, dir) / r } else { 0.0 };
        match &self.kind {
            IntegrandKind::Zero | IntegrandKind::Constant { .. } => 0.0,
            IntegrandKind::SquaredNorm { scale } => scale * dot(u, dir),
            IntegrandKind::BallIndicator { radius } => {
                if r < radius * (1.0 - BOUNDARY_TOL) {
                    0.0
                } else if radial <= 1e-14 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            IntegrandKind::CappedQuadratic { radius } => {
                if r < radius * (1.0 - BOUNDARY_TOL) {
                    dot(u, dir)
                } else if radial <= 1e-14 {
                    dot(u, dir)
                } else {
                    f64::INFINITY
                }
            }
            IntegrandKind::SupportBall { slope } => {
                if r == 0.0 {
                    slope * norm(dir)
                } else {
                    slope * radial
                }
            }
            IntegrandKind::CappedQuadraticDual { radius } => {
                if r <= *radius {
                    dot(u, dir)
                } else {
                    radius * radial
                }
            }
            IntegrandKind::SmoothSublinear { bound } => {
                bound * dot(u, dir) / (1.0 + r * r).sqrt()
            }
            IntegrandKind::SoftBound { bound } => {
                if r < bound * (1.0 - BOUNDARY_TOL) {
                    dot(u, dir) / (bound * bound - r * r).sqrt()
                } else if radial > 1e-14 {
                    f64::INFINITY
                } else if radial < -1e-14 {
                    f64::NEG_INFINITY
                } else {
                    0.0
                }
            }
            IntegrandKind::NumericConjugate { .. } => {
                // One-sided finite difference; adequate for diagnostics.
                let h = 1e-6 * (1.0 + norm(u));
                let mut shifted = to_pair(u);
                for axis in 0..self.dim {
                    shifted[axis] += h * dir[axis];
                }
                (self.evaluate(&shifted[..self.dim]) - self.evaluate(u)) / h
            }
        }
    }

    /// Select one subgradient at `u`.
    ///
    /// `kink_tol`: arguments with `|u| <= kink_tol` count as sitting on a
    /// kink at the origin (this makes bang-bang selections exact on lattice
    /// data). Errors with an empty subdifferential outside the domain or on
    /// vertical-slope boundaries.
    pub fn subdiff_select(
        &self,
        u: &[f64],
        rule: SelectionRule,
        kink_tol: f64,
    ) -> Result<SubgradientSelection> {
        let r = norm(u);
        let unit = |v: &[f64]| -> [f64; 2] {
            let n = norm(v);
            if n == 0.0 {
                [0.0, 0.0]
            } else {
                let p = to_pair(v);
                [p[0] / n, p[1] / n]
            }
        };
        let scaled = |v: &[f64], s: f64| -> [f64; 2] {
            let p = to_pair(v);
            [p[0] * s, p[1] * s]
        };
        let unique = |g: [f64; 2]| Ok(SubgradientSelection { gradient: g, is_unique: true });
        let empty = || {
            Err(Error::EmptySubdifferential {
                at: r,
                radius: self.domain_radius(),
            })
        };
        match &self.kind {
            IntegrandKind::Zero | IntegrandKind::Constant { .. } => unique([0.0, 0.0]),
            IntegrandKind::SquaredNorm { scale } => unique(scaled(u, *scale)),
            IntegrandKind::BallIndicator { radius } => {
                if r > radius * (1.0 + BOUNDARY_TOL) {
                    return empty();
                }
                if r < radius * (1.0 - BOUNDARY_TOL) {
                    return unique([0.0, 0.0]);
                }
                // Boundary: the subdifferential is the outward normal cone.
                let g = match rule {
                    SelectionRule::MinimalNorm => [0.0, 0.0],
                    SelectionRule::Direction(d) => {
                        if dot(&d[..self.dim], u) > 0.0 {
                            unit(u)
                        } else {
                            [0.0, 0.0]
                        }
                    }
                };
                Ok(SubgradientSelection { gradient: g, is_unique: false })
            }
            IntegrandKind::CappedQuadratic { radius } => {
                if r > radius * (1.0 + BOUNDARY_TOL) {
                    return empty();
                }
                if r < radius * (1.0 - BOUNDARY_TOL) {
                    return unique(to_pair(u));
                }
                let g = match rule {
                    SelectionRule::MinimalNorm => to_pair(u),
                    SelectionRule::Direction(d) => {
                        if dot(&d[..self.dim], u) > 0.0 {
                            let e = unit(u);
                            let p = to_pair(u);
                            [p[0] + e[0], p[1] + e[1]]
                        } else {
                            to_pair(u)
                        }
                    }
                };
                Ok(SubgradientSelection { gradient: g, is_unique: false })
            }
            IntegrandKind::SupportBall { slope } => {
                if r <= kink_tol {
                    // Kink at the origin: subdifferential is the whole ball.
                    let g = match rule {
                        SelectionRule::MinimalNorm => [0.0, 0.0],
                        SelectionRule::Direction(d) => scaled(&unit(&d[..self.dim]), *slope),
                    };
                    return Ok(SubgradientSelection { gradient: g, is_unique: false });
                }
                unique(scaled(&unit(u), *slope))
            }
            IntegrandKind::CappedQuadraticDual { radius } => {
                let factor = if r <= *radius { 1.0 } else { radius / r };
                unique(scaled(u, factor))
            }
            IntegrandKind::SmoothSublinear { bound } => {
                unique(scaled(u, bound / (1.0 + r * r).sqrt()))
            }
            IntegrandKind::SoftBound { bound } => {
                if r >= bound * (1.0 - BOUNDARY_TOL) {
                    return empty();
                }
                unique(scaled(u, 1.0 / (bound * bound - r * r).sqrt()))
            }
            IntegrandKind::NumericConjugate { .. } => {
                if !self.evaluate(u).is_finite() {
                    return empty();
                }
                // Per-axis forward/backward differences give an interval box;
                // clamp zero into it for the minimal-norm selection.
                let h = 1e-6 * (1.0 + r);
                let mut lo = [0.0f64; 2];
                let mut hi = [0.0f64; 2];
                let base = self.evaluate(u);
                for axis in 0..self.dim {
                    let mut up = to_pair(u);
                    up[axis] += h;
                    let mut dn = to_pair(u);
                    dn[axis] -= h;
                    hi[axis] = (self.evaluate(&up[..self.dim]) - base) / h;
                    lo[axis] = (base - self.evaluate(&dn[..self.dim])) / h;
                }
                let mut g = [0.0f64; 2];
                let mut is_unique = true;
                for axis in 0..self.dim {
                    g[axis] = match rule {
                        SelectionRule::MinimalNorm => lo[axis].max(0.0f64.min(hi[axis])),
                        SelectionRule::Direction(d) => {
                            if d[axis] >= 0.0 {
                                hi[axis]
                            } else {
                                lo[axis]
                            }
                        }
                    };
                    if (hi[axis] - lo[axis]).abs() > 1e-4 * (1.0 + hi[axis].abs()) {
                        is_unique = false;
                    }
                }
                Ok(SubgradientSelection { gradient: g, is_unique })
            }
        }
    }
}

/// Conjugate `f*(v)`: closed form when the preset has one, otherwise the
/// lattice search of [`conjugate_eval_lattice`].
pub fn conjugate_eval(
    f: &ConvexIntegrand,
    v: &[f64],
    search_radius: f64,
    resolution: usize,
) -> Result<f64> {
    if let IntegrandKind::NumericConjugate { base, .. } = &f.kind {
        return Ok(base.evaluate(v));
    }
    if let Some(conj) = f.analytic_conjugate() {
        return Ok(conj.evaluate(v));
    }
    match &f.kind {
        IntegrandKind::Zero => Ok(if norm(v) == 0.0 { 0.0 } else { f64::INFINITY }),
        IntegrandKind::Constant { value } => {
            Ok(if norm(v) == 0.0 { -value } else { f64::INFINITY })
        }
        _ => conjugate_eval_lattice(f, v, search_radius, resolution),
    }
}

/// Brute-force conjugate: maximize `u . v - f(u)` over a lattice of
/// `resolution` points per axis, then refine each axis by golden section.
///
/// The lattice covers the effective domain when it is bounded, otherwise the
/// cube of the given `search_radius`; a maximizer escaping to the boundary of
/// an unbounded domain's search cube signals a divergent conjugate.
pub fn conjugate_eval_lattice(
    f: &ConvexIntegrand,
    v: &[f64],
    search_radius: f64,
    resolution: usize,
) -> Result<f64> {
    assert!(resolution >= 3 && search_radius > 0.0);
    let dom = f.domain_radius();
    let bounded = dom.is_finite();
    let reach = if bounded {
        dom * (1.0 + 1e-12)
    } else {
        search_radius
    };
    let coord = |i: usize| -> f64 { -reach + 2.0 * reach * i as f64 / (resolution - 1) as f64 };
    let objective = |u: &[f64]| -> f64 {
        let fu = f.evaluate(u);
        if fu.is_finite() {
            dot(u, v) - fu
        } else {
            f64::NEG_INFINITY
        }
    };

    let mut best = f64::NEG_INFINITY;
    let mut arg = [0.0f64; 2];
    let mut on_shell = false;
    match f.dim {
        1 => {
            for i in 0..resolution {
                let u = [coord(i)];
                let val = objective(&u);
                if val > best {
                    best = val;
                    arg = [u[0], 0.0];
                    on_shell = i == 0 || i == resolution - 1;
                }
            }
        }
        _ => {
            for i in 0..resolution {
                for j in 0..resolution {
                    let u = [coord(i), coord(j)];
                    let val = objective(&u);
                    if val > best {
                        best = val;
                        arg = u;
                        on_shell =
                            i == 0 || j == 0 || i == resolution - 1 || j == resolution - 1;
                    }
                }
            }
        }
    }
    if !best.is_finite() {
        // The whole lattice missed the effective domain; retry denser or
        // treat as divergence.
        return Err(Error::ConjugateDiverges { radius: reach });
    }
    if !bounded && on_shell {
        return Err(Error::ConjugateDiverges { radius: reach });
    }

    // Golden-section refinement axis by axis (the objective is concave).
    let gold = (5f64.sqrt() - 1.0) / 2.0;
    let h = 2.0 * reach / (resolution - 1) as f64;
    for _pass in 0..2 {
        for axis in 0..f.dim {
            let center = arg[axis];
            let mut lo = (center - h).max(-reach);
            let mut hi = (center + h).min(reach);
            let eval_axis = |x: f64, arg: &[f64; 2]| -> f64 {
                let mut u = *arg;
                u[axis] = x;
                objective(&u[..f.dim])
            };
            for _ in 0..80 {
                let m1 = hi - gold * (hi - lo);
                let m2 = lo + gold * (hi - lo);
                if eval_axis(m1, &arg) >= eval_axis(m2, &arg) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let mid = 0.5 * (lo + hi);
            if eval_axis(mid, &arg) > best {
                arg[axis] = mid;
                best = eval_axis(mid, &arg);
            }
        }
    }
    Ok(best)
}

/// Fenchel residual `f(u) + f*(eta) - u . eta`. Nonnegative for every pair;
/// zero exactly on subgradient pairs.
pub fn fenchel_residual(f: &ConvexIntegrand, u: &[f64], eta: &[f64]) -> Result<f64> {
    let fu = f.evaluate(u);
    let fstar = f.conjugate_value(eta)?;
    Ok(fu + fstar - dot(u, eta))
}

/// Conjugate as an integrand: analytic partner when available, otherwise a
/// lattice-search wrapper with the given search parameters.
pub fn hamiltonian_from_lagrangian(l: &ConvexIntegrand) -> ConvexIntegrand {
    if let Some(conj) = l.analytic_conjugate() {
        return conj;
    }
    let search_radius = if l.domain_radius().is_finite() {
        l.domain_radius()
    } else {
        1e3
    };
    ConvexIntegrand {
        dim: l.dim,
        kind: IntegrandKind::NumericConjugate {
            base: Box::new(l.clone()),
            search_radius,
            resolution: 2001,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_examples_frozen() {
        // Ball indicator radius 2 at v = 3: support value 6.
        let ball = ConvexIntegrand::ball_indicator(1, 2.0);
        assert!((conjugate_eval(&ball, &[3.0], 10.0, 101).unwrap() - 6.0).abs() < 1e-12);
        // Quadratic |u|^2/2 at v = 1.5: |v|^2/2 = 1.125.
        let quad = ConvexIntegrand::squared_norm(1, 1.0);
        assert!((conjugate_eval(&quad, &[1.5], 10.0, 101).unwrap() - 1.125).abs() < 1e-12);
    }

    #[test]
    fn lattice_conjugate_of_capped_quadratic() {
        // Brute force at high resolution pins the capped conjugate value:
        // sup over |u| <= 1 of 3u - u^2/2 = 2.5, attained at the cap.
        let f = ConvexIntegrand::capped_quadratic(1, 1.0);
        let brute = conjugate_eval_lattice(&f, &[3.0], 10.0, 100_001).unwrap();
        assert!((brute - 2.5).abs() < 1e-9, "brute {brute}");
        let analytic = f.conjugate_value(&[3.0]).unwrap();
        assert!((analytic - 2.5).abs() < 1e-12);
    }

    #[test]
    fn lattice_matches_analytic_on_smooth_preset_2d() {
        let f = ConvexIntegrand::squared_norm(2, 1.0);
        let v = [0.8, -0.45];
        let brute = conjugate_eval_lattice(&f, &v, 6.0, 801).unwrap();
        let analytic = f.conjugate_value(&v).unwrap();
        assert!((brute - analytic).abs() < 1e-6, "{brute} vs {analytic}");
    }

    #[test]
    fn linear_growth_conjugate_diverges() {
        // f(u) = |u|^2/2 has finite conjugate; f = 0 does not at v != 0.
        let zero = ConvexIntegrand::zero(1);
        assert!(matches!(
            conjugate_eval_lattice(&zero, &[1.0], 50.0, 501),
            Err(Error::ConjugateDiverges { .. })
        ));
    }

    #[test]
    fn hamiltonian_pairs() {
        // Indicator of the ball -> support function a|q|.
        let l = ConvexIntegrand::ball_indicator(1, 1.5);
        let h = hamiltonian_from_lagrangian(&l);
        assert!((h.evaluate(&[2.0]) - 3.0).abs() < 1e-12);
        // Capped quadratic -> quadratic inside, linear outside.
        let l = ConvexIntegrand::capped_quadratic(1, 1.0);
        let h = hamiltonian_from_lagrangian(&l);
        assert!((h.evaluate(&[0.5]) - 0.125).abs() < 1e-12);
        assert!((h.evaluate(&[3.0]) - 2.5).abs() < 1e-12);
        // Smooth sublinear <-> soft bound, checked at an interior point.
        let h = ConvexIntegrand::smooth_sublinear(1, 2.0);
        let l = hamiltonian_from_lagrangian(&ConvexIntegrand::soft_bound(1, 2.0));
        assert!((h.evaluate(&[0.7]) - l.evaluate(&[0.7])).abs() < 1e-12);
    }

    #[test]
    fn numeric_conjugate_fallback_close_to_analytic() {
        // Force the numeric path by conjugating a preset through the wrapper.
        let base = ConvexIntegrand::capped_quadratic(1, 1.0);
        let h_num = ConvexIntegrand {
            dim: 1,
            kind: IntegrandKind::NumericConjugate {
                base: Box::new(base.clone()),
                search_radius: 5.0,
                resolution: 4001,
            },
        };
        let h_exact = hamiltonian_from_lagrangian(&base);
        for q in [-2.5, -0.4, 0.0, 0.7, 3.0] {
            assert!(
                (h_num.evaluate(&[q]) - h_exact.evaluate(&[q])).abs() < 1e-6,
                "q = {q}"
            );
        }
    }

    #[test]
    fn subgradient_selections() {
        // Support function at the kink: minimal norm picks 0 (not unique).
        let h = ConvexIntegrand::support_ball(1, 2.0);
        let s = h.subdiff_select(&[0.0], SelectionRule::MinimalNorm, 0.0).unwrap();
        assert_eq!(s.gradient, [0.0, 0.0]);
        assert!(!s.is_unique);
        // Away from the kink: the unit ray scaled by the slope.
        let s = h.subdiff_select(&[3.0], SelectionRule::MinimalNorm, 0.0).unwrap();
        assert_eq!(s.gradient, [2.0, 0.0]);
        assert!(s.is_unique);
        // Direction rule at the kink follows the requested direction.
        let s = h
            .subdiff_select(&[0.0], SelectionRule::Direction([-1.0, 0.0]), 0.0)
            .unwrap();
        assert_eq!(s.gradient, [-2.0, 0.0]);
        // Smooth preset: gradient is unique.
        let f = ConvexIntegrand::squared_norm(1, 1.0);
        let s = f.subdiff_select(&[0.7], SelectionRule::MinimalNorm, 0.0).unwrap();
        assert!((s.gradient[0] - 0.7).abs() < 1e-15);
        assert!(s.is_unique);
    }

    #[test]
    fn kink_tolerance_snaps_small_gradients_to_zero() {
        let h = ConvexIntegrand::support_ball(1, 1.0);
        let s = h
            .subdiff_select(&[1e-12], SelectionRule::MinimalNorm, 1e-9)
            .unwrap();
        assert_eq!(s.gradient, [0.0, 0.0]);
        let s = h
            .subdiff_select(&[1e-6], SelectionRule::MinimalNorm, 1e-9)
            .unwrap();
        assert_eq!(s.gradient[0], 1.0);
    }

    #[test]
    fn empty_subdifferential_cases() {
        let ball = ConvexIntegrand::ball_indicator(1, 1.0);
        assert!(matches!(
            ball.subdiff_select(&[1.5], SelectionRule::MinimalNorm, 0.0),
            Err(Error::EmptySubdifferential { .. })
        ));
        // Soft bound has vertical slope at the boundary: empty there too.
        let soft = ConvexIntegrand::soft_bound(1, 1.0);
        assert!(matches!(
            soft.subdiff_select(&[1.0], SelectionRule::MinimalNorm, 0.0),
            Err(Error::EmptySubdifferential { .. })
        ));
    }

    #[test]
    fn ball_boundary_minimal_norm_is_zero() {
        let ball = ConvexIntegrand::ball_indicator(2, 1.0);
        let u = [3f64.sqrt() / 2.0, 0.5]; // |u| = 1
        let s = ball.subdiff_select(&u, SelectionRule::MinimalNorm, 0.0).unwrap();
        assert_eq!(s.gradient, [0.0, 0.0]);
        assert!(!s.is_unique);
    }

    #[test]
    fn fenchel_identity_and_gap() {
        let f = ConvexIntegrand::squared_norm(1, 1.0);
        // eta = u is the gradient: residual 0.
        assert!(fenchel_residual(&f, &[1.0], &[1.0]).unwrap().abs() < 1e-14);
        // eta = 2 is not: residual 1/2 + 2 - 2 = 1/2.
        assert!((fenchel_residual(&f, &[1.0], &[2.0]).unwrap() - 0.5).abs() < 1e-14);
        // Ball indicator, boundary pairing: 0 + a|eta| - u.eta = 0 for
        // eta aligned with the boundary point.
        let ball = ConvexIntegrand::ball_indicator(1, 2.0);
        assert!(fenchel_residual(&ball, &[2.0], &[5.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn directional_derivatives_detect_kinks() {
        let h = ConvexIntegrand::support_ball(1, 2.0);
        // At the kink the one-sided derivatives do not cancel.
        let plus = h.directional_derivative(&[0.0], &[1.0]);
        let minus = h.directional_derivative(&[0.0], &[-1.0]);
        assert!((plus - 2.0).abs() < 1e-14);
        assert!((minus - 2.0).abs() < 1e-14);
        // At a smooth point they do.
        let plus = h.directional_derivative(&[1.0], &[1.0]);
        let minus = h.directional_derivative(&[1.0], &[-1.0]);
        assert!((plus + minus).abs() < 1e-14);
    }
}
