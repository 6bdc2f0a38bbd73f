//! Maximal monotone graphs on the real line.
//!
//! A monotone graph generalizes a nondecreasing function by allowing vertical
//! segments: at a jump location `x` the graph carries the whole interval
//! `[y_left, y_right]` (the Filippov filling of the jump). Between nodes the
//! graph is piecewise linear; beyond the outermost nodes it continues with
//! constant slopes. This is exactly the closure needed for subdifferentials
//! of piecewise-smooth convex functions and for discontinuous couplings.
//!
//! The resolvent `J_eps(q) = (I + eps * graph)^{-1}(q)` of a maximal monotone
//! graph is single-valued and nonexpansive; it is computed here by bisection
//! on the monotone set-valued map `r -> r + eps * graph(r)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphNode {
    x: f64,
    y_left: f64,
    y_right: f64,
}

/// A jump of the graph: the vertical segment `[lower, upper]` at `location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpPoint {
    pub location: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Piecewise-linear maximal monotone graph with filled jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneGraph1D {
    /// Sorted by `x`; between consecutive nodes the graph interpolates
    /// linearly from `y_right` of the left node to `y_left` of the right node.
    nodes: Vec<GraphNode>,
    /// Slope continuing left of the first node (must be >= 0).
    left_slope: f64,
    /// Slope continuing right of the last node (must be >= 0).
    right_slope: f64,
}

impl MonotoneGraph1D {
    /// Build from explicit nodes `(x, y_left, y_right)` plus tail slopes.
    pub fn from_nodes(nodes: &[(f64, f64, f64)], left_slope: f64, right_slope: f64) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::NotMonotone {
                x_lo: 0.0,
                x_hi: 0.0,
                drop: 0.0,
            });
        }
        if left_slope < 0.0 || right_slope < 0.0 {
            return Err(Error::NotMonotone {
                x_lo: f64::NEG_INFINITY,
                x_hi: f64::INFINITY,
                drop: left_slope.min(right_slope),
            });
        }
        let graph = Self {
            nodes: nodes
                .iter()
                .map(|&(x, y_left, y_right)| GraphNode { x, y_left, y_right })
                .collect(),
            left_slope,
            right_slope,
        };
        // Monotonicity across the node list.
        let mut last_x = f64::NEG_INFINITY;
        let mut last_y = f64::NEG_INFINITY;
        for node in &graph.nodes {
            if node.x <= last_x {
                return Err(Error::NotMonotone {
                    x_lo: last_x,
                    x_hi: node.x,
                    drop: 0.0,
                });
            }
            for y in [node.y_left, node.y_right] {
                if y < last_y {
                    return Err(Error::NotMonotone {
                        x_lo: last_x,
                        x_hi: node.x,
                        drop: last_y - y,
                    });
                }
                last_y = y;
            }
            last_x = node.x;
        }
        Ok(graph)
    }

    /// The identity graph `r -> r`.
    pub fn identity() -> Self {
        Self::from_nodes(&[(0.0, 0.0, 0.0)], 1.0, 1.0).unwrap()
    }

    /// The sign graph: `-1` below zero, `+1` above, `[-1, 1]` at zero.
    pub fn sign() -> Self {
        Self::from_nodes(&[(0.0, -1.0, 1.0)], 0.0, 0.0).unwrap()
    }

    /// A single step from `lower` to `upper` at `location`, jump filled.
    pub fn step(location: f64, lower: f64, upper: f64) -> Result<Self> {
        Self::from_nodes(&[(location, lower, upper)], 0.0, 0.0)
    }

    /// The set of graph values at `q`, as a closed interval `[lo, hi]`.
    pub fn value_interval(&self, q: f64) -> (f64, f64) {
        let first = &self.nodes[0];
        if q < first.x {
            let v = first.y_left - self.left_slope * (first.x - q);
            return (v, v);
        }
        let last = &self.nodes[self.nodes.len() - 1];
        if q > last.x {
            let v = last.y_right + self.right_slope * (q - last.x);
            return (v, v);
        }
        // q sits among the nodes.
        for (i, node) in self.nodes.iter().enumerate() {
            if q == node.x {
                return (node.y_left, node.y_right);
            }
            if q < node.x {
                let prev = &self.nodes[i - 1];
                let t = (q - prev.x) / (node.x - prev.x);
                let v = prev.y_right + t * (node.y_left - prev.y_right);
                return (v, v);
            }
        }
        unreachable!("q = {q} not located in graph");
    }

    /// All vertical segments of the graph.
    pub fn jump_points(&self) -> Vec<JumpPoint> {
        self.nodes
            .iter()
            .filter(|n| n.y_right > n.y_left)
            .map(|n| JumpPoint {
                location: n.x,
                lower: n.y_left,
                upper: n.y_right,
            })
            .collect()
    }

    /// Resolvent `(I + eps * graph)^{-1} q` by bisection, `eps > 0`.
    pub fn resolvent(&self, eps: f64, q: f64) -> Result<f64> {
        assert!(eps > 0.0, "resolvent needs eps > 0");
        let below = |r: f64| r + eps * self.value_interval(r).1 < q; // whole image below q
        let above = |r: f64| r + eps * self.value_interval(r).0 > q; // whole image above q

        // Bracket: expand around q until phi(lo) <= q <= phi(hi). The map
        // r + eps*graph(r) grows at least linearly, so doubling terminates.
        let scale = q.abs().max(1.0);
        let (mut lo, mut hi) = (q - scale, q + scale);
        let mut width = scale;
        for _ in 0..200 {
            if !above(lo) {
                break;
            }
            width *= 2.0;
            lo = q - width;
            if !width.is_finite() {
                return Err(Error::BracketFailure { query: q });
            }
        }
        if above(lo) {
            return Err(Error::BracketFailure { query: q });
        }
        width = scale;
        for _ in 0..200 {
            if !below(hi) {
                break;
            }
            width *= 2.0;
            hi = q + width;
            if !width.is_finite() {
                return Err(Error::BracketFailure { query: q });
            }
        }
        if below(hi) {
            return Err(Error::BracketFailure { query: q });
        }

        // Bisection: keep the invariant "not above(lo)" and "not below(hi)".
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if above(mid) {
                hi = mid;
            } else if below(mid) {
                lo = mid;
            } else {
                return Ok(mid); // q inside mid + eps * [glo, ghi]
            }
            if hi - lo <= 1e-15 * scale.max(lo.abs().max(hi.abs())) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The convex potential `g(r) = integral of the graph from 0 to r`,
    /// normalized by `g(0) = 0`.
    ///
    /// The graph is the subdifferential of this potential. Vertical segments
    /// have measure zero and contribute kinks, not area, so the piecewise
    /// trapezoid below is exact for the piecewise-linear graphs represented
    /// here.
    pub fn integral_from_zero(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let (a, b, sign) = if r > 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
        let mut cuts = vec![a];
        for node in &self.nodes {
            if node.x > a && node.x < b {
                cuts.push(node.x);
            }
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // Right limit at the left end, left limit at the right end; the
            // graph is linear between consecutive cuts.
            let f_lo = self.value_interval(lo).1;
            let f_hi = self.value_interval(hi).0;
            total += 0.5 * (f_lo + f_hi) * (hi - lo);
        }
        sign * total
    }

    /// Coefficients `(slope, base)` with `|F(q)| <= slope * |q| + base`
    /// everywhere, from the tail slopes and the node values.
    pub fn linear_bound(&self) -> (f64, f64) {
        let slope = self.left_slope.max(self.right_slope);
        let mut base = 0.0f64;
        let mut reach = 0.0f64;
        for node in &self.nodes {
            base = base.max(node.y_left.abs()).max(node.y_right.abs());
            reach = reach.max(node.x.abs());
        }
        (slope, base + slope * reach)
    }

    /// Distance from `eta` to the value interval of the graph at `q`; zero
    /// exactly when `eta` is a valid selection (subgradient certificate).
    pub fn selection_distance(&self, q: f64, eta: f64) -> f64 {
        let (lo, hi) = self.value_interval(q);
        if eta < lo {
            lo - eta
        } else if eta > hi {
            eta - hi
        } else {
            0.0
        }
    }

    /// Reconstruct a graph from lattice samples of a nondecreasing function,
    /// filling detected jumps with vertical segments.
    ///
    /// A gap between consecutive samples counts as a jump when it exceeds
    /// `threshold`; by default the threshold is ten times the sample spacing
    /// times a robust local slope estimate. The jump is placed at the first
    /// sample attaining the upper value. Decreasing pairs beyond rounding
    /// noise are an error.
    pub fn fill_jumps(xs: &[f64], ys: &[f64], threshold: Option<f64>) -> Result<Self> {
        assert_eq!(xs.len(), ys.len());
        if xs.len() < 2 {
            return Err(Error::NotMonotone {
                x_lo: 0.0,
                x_hi: 0.0,
                drop: 0.0,
            });
        }
        let value_scale = ys.iter().fold(0.0f64, |a, &y| a.max(y.abs())).max(1e-300);
        let noise = 1e-12 * value_scale;
        let n = xs.len();
        let gaps: Vec<f64> = (0..n - 1).map(|i| ys[i + 1] - ys[i]).collect();
        for (i, &g) in gaps.iter().enumerate() {
            if g < -noise {
                return Err(Error::NotMonotone {
                    x_lo: xs[i],
                    x_hi: xs[i + 1],
                    drop: -g,
                });
            }
        }
        let jump_cut = |i: usize| -> f64 {
            if let Some(t) = threshold {
                return t;
            }
            // Local slope estimate from nearby gaps excluding i: the median
            // keeps a single jump from inflating its own detection threshold.
            let lo = i.saturating_sub(3);
            let hi = (i + 4).min(gaps.len());
            let mut nearby: Vec<f64> = (lo..hi).filter(|&j| j != i).map(|j| gaps[j].max(0.0)).collect();
            nearby.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let local = if nearby.is_empty() { 0.0 } else { nearby[nearby.len() / 2] };
            let dx = xs[i + 1] - xs[i];
            let slope = local / dx.max(1e-300);
            10.0 * dx * slope + noise
        };

        let mut nodes: Vec<(f64, f64, f64)> = Vec::new();
        let mut plain_start = 0usize;
        for i in 0..n - 1 {
            if gaps[i] > jump_cut(i) {
                // Regular samples before the jump become simple nodes.
                for j in plain_start..=i {
                    nodes.push((xs[j], ys[j], ys[j]));
                }
                // Jump attached to the right sample's location.
                nodes.push((xs[i + 1], ys[i], ys[i + 1]));
                plain_start = i + 2;
            }
        }
        for j in plain_start..n {
            nodes.push((xs[j], ys[j], ys[j]));
        }
        // Duplicate x (the sample right after a jump) would violate ordering:
        // merge nodes at identical locations, widening the interval.
        nodes.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 = prev.1.min(next.1);
                prev.2 = prev.2.max(next.2);
                true
            } else {
                false
            }
        });
        // Tail slopes from the outermost regular gaps.
        let left_slope = ((ys[1] - ys[0]) / (xs[1] - xs[0])).max(0.0);
        let right_slope = ((ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])).max(0.0);
        Self::from_nodes(&nodes, left_slope, right_slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolvent_of_identity_graph() {
        // r + eps r = q  =>  r = q / (1 + eps); at eps = 0.5, q = 3: r = 2.
        let g = MonotoneGraph1D::identity();
        let r = g.resolvent(0.5, 3.0).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resolvent_of_sign_graph_dead_zone_and_shift() {
        let g = MonotoneGraph1D::sign();
        // |q| <= eps lands on the vertical segment: r = 0.
        assert!(g.resolvent(0.5, 0.3).unwrap().abs() < 1e-12);
        // Outside, r = q - eps * sign(q).
        assert!((g.resolvent(0.5, 2.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((g.resolvent(0.5, -2.0).unwrap() + 1.5).abs() < 1e-12);
    }

    #[test]
    fn resolvent_is_nonexpansive_on_a_sampled_graph() {
        let g = MonotoneGraph1D::from_nodes(&[(-1.0, -2.0, -1.0), (0.5, 0.0, 3.0)], 0.7, 2.0)
            .unwrap();
        let qs: Vec<f64> = (-40..40).map(|i| i as f64 * 0.17).collect();
        for eps in [0.05, 0.5, 2.0] {
            let js: Vec<f64> = qs.iter().map(|&q| g.resolvent(eps, q).unwrap()).collect();
            for i in 0..qs.len() {
                for j in (i + 1)..qs.len() {
                    let lhs = (js[i] - js[j]).abs();
                    let rhs = (qs[i] - qs[j]).abs();
                    assert!(lhs <= rhs + 1e-10, "expansion at {} {}", qs[i], qs[j]);
                }
            }
        }
    }

    #[test]
    fn integral_from_zero_on_known_graphs() {
        // sign graph integrates to |r|.
        let s = MonotoneGraph1D::sign();
        assert!((s.integral_from_zero(2.5) - 2.5).abs() < 1e-12);
        assert!((s.integral_from_zero(-3.0) - 3.0).abs() < 1e-12);
        // identity graph integrates to r^2 / 2.
        let id = MonotoneGraph1D::identity();
        assert!((id.integral_from_zero(3.0) - 4.5).abs() < 1e-12);
        assert!((id.integral_from_zero(-2.0) - 2.0).abs() < 1e-12);
        // slope-1 graph with a 0.5 jump at r = 1:
        // int_0^2 = int_0^1 r dr + int_1^2 (r + 0.5) dr = 0.5 + 2.0.
        let g = MonotoneGraph1D::from_nodes(&[(1.0, 1.0, 1.5)], 1.0, 1.0).unwrap();
        assert!((g.integral_from_zero(2.0) - 2.5).abs() < 1e-12);
        assert_eq!(g.integral_from_zero(0.0), 0.0);
    }

    #[test]
    fn selection_distance_certifies_membership() {
        let g = MonotoneGraph1D::from_nodes(&[(1.0, 1.0, 1.5)], 1.0, 1.0).unwrap();
        // On the jump interval: zero for any eta in [1, 1.5].
        assert_eq!(g.selection_distance(1.0, 1.2), 0.0);
        assert_eq!(g.selection_distance(1.0, 1.0), 0.0);
        assert!((g.selection_distance(1.0, 1.7) - 0.2).abs() < 1e-12);
        // Off the jump: single-valued, distance is |eta - F(q)|.
        assert!((g.selection_distance(2.0, 2.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fill_jumps_heaviside() {
        // Heaviside sampled with y(0) = 1: one jump (0, 0, 1).
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| if x >= -1e-12 { 1.0 } else { 0.0 }).collect();
        let g = MonotoneGraph1D::fill_jumps(&xs, &ys, None).unwrap();
        let jumps = g.jump_points();
        assert_eq!(jumps.len(), 1);
        assert!(jumps[0].location.abs() < 1e-9);
        assert!((jumps[0].lower - 0.0).abs() < 1e-12);
        assert!((jumps[0].upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fill_jumps_two_step_staircase() {
        let xs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.1).collect();
        let stair = |x: f64| {
            if x < 1.0 {
                0.0
            } else if x < 3.0 {
                0.5
            } else {
                2.0
            }
        };
        let ys: Vec<f64> = xs.iter().map(|&x| stair(x)).collect();
        let g = MonotoneGraph1D::fill_jumps(&xs, &ys, None).unwrap();
        let jumps = g.jump_points();
        assert_eq!(jumps.len(), 2, "jumps: {jumps:?}");
        assert!((jumps[0].location - 1.0).abs() < 1e-9);
        assert!((jumps[0].upper - 0.5).abs() < 1e-12);
        assert!((jumps[1].location - 3.0).abs() < 1e-9);
        assert!((jumps[1].lower - 0.5).abs() < 1e-12);
        assert!((jumps[1].upper - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fill_jumps_rejects_decreasing_samples() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.0, 1.0, 0.5];
        assert!(matches!(
            MonotoneGraph1D::fill_jumps(&xs, &ys, None),
            Err(Error::NotMonotone { .. })
        ));
    }

    #[test]
    fn smooth_samples_produce_no_jumps() {
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 * 0.05).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x * x).collect();
        let g = MonotoneGraph1D::fill_jumps(&xs, &ys, None).unwrap();
        assert!(g.jump_points().is_empty());
        // And it evaluates close to the sampled function between nodes.
        let (lo, hi) = g.value_interval(2.525);
        assert_eq!(lo, hi);
        assert!((lo - 2.525f64.powi(2)).abs() < 2e-2);
    }
}
