//! Scalar and vector lattice fields with the norms used throughout the solver.
//!
//! A `ScalarField` is one time slice of a density / value function; a
//! `VectorField` is one slice of a control or gradient. Data is stored flat,
//! row-major (`i * points + j` in 2-d). All integral norms use the cell
//! measure `dx^dim` as quadrature weight.

use crate::error::{Error, Result};
use crate::grid::domain::DomainSpec;

/// One time slice of a scalar quantity on the periodic lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub domain: DomainSpec,
    /// Index of the time slice this field belongs to (metadata for dumps).
    pub time_index: usize,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: &DomainSpec) -> Self {
        Self {
            domain: *domain,
            time_index: 0,
            data: vec![0.0; domain.cells()],
        }
    }

    pub fn from_fn(domain: &DomainSpec, f: impl Fn(&[f64; 2]) -> f64) -> Self {
        let mut field = Self::zeros(domain);
        for cell in 0..domain.cells() {
            field.data[cell] = f(&domain.coords(cell));
        }
        field
    }

    pub fn from_data(domain: &DomainSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != domain.cells() {
            return Err(Error::DomainMismatch(format!(
                "field data has {} entries, domain has {} cells",
                data.len(),
                domain.cells()
            )));
        }
        Ok(Self {
            domain: *domain,
            time_index: 0,
            data,
        })
    }

    /// Periodized Gaussian of total mass 1 centered at `center`.
    ///
    /// Enough periodic images are summed that the truncation error is far
    /// below machine precision for any `sigma` small compared to the box.
    pub fn gaussian(domain: &DomainSpec, center: &[f64; 2], sigma: f64) -> Self {
        assert!(sigma > 0.0, "gaussian width must be positive");
        let width = 2.0 * domain.half_width;
        let images = ((8.0 * sigma + width) / width).ceil() as i64;
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let axis_value = |x: f64, c: f64| -> f64 {
            let mut total = 0.0;
            for m in -images..=images {
                let d = x - c + m as f64 * width;
                total += norm * (-0.5 * (d / sigma).powi(2)).exp();
            }
            total
        };
        Self::from_fn(domain, |x| match domain.dim {
            1 => axis_value(x[0], center[0]),
            _ => axis_value(x[0], center[0]) * axis_value(x[1], center[1]),
        })
    }

    /// Discrete delta: all mass 1 concentrated on the cell nearest `center`.
    pub fn grid_delta(domain: &DomainSpec, center: &[f64; 2]) -> Self {
        let mut field = Self::zeros(domain);
        let locate = |x: f64| -> usize {
            let i = ((domain.wrap(x) + domain.half_width) / domain.dx()).round() as usize;
            i % domain.points
        };
        let cell = match domain.dim {
            1 => locate(center[0]),
            _ => domain.flat_index(locate(center[0]), locate(center[1])),
        };
        field.data[cell] = 1.0 / domain.cell_measure();
        field
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<f64> {
        self.data
    }

    /// Total integral `sum f * dx^dim`.
    pub fn mass(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.domain.cell_measure()
    }

    /// `L^m` norm; pass `f64::INFINITY` for the sup norm. Requires `m >= 1`.
    pub fn lp_norm(&self, m: f64) -> f64 {
        assert!(m >= 1.0, "lp_norm needs m >= 1");
        if m.is_infinite() {
            return self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        }
        let sum: f64 = self.data.iter().map(|v| v.abs().powf(m)).sum();
        (sum * self.domain.cell_measure()).powf(1.0 / m)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v))
    }

    /// `L^1` distance to another field on the same grid.
    pub fn l1_distance(&self, other: &ScalarField) -> f64 {
        assert!(self.domain.same_space(&other.domain), "grids differ");
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        sum * self.domain.cell_measure()
    }

    /// Mass inside the band within `fraction * half_width` of the periodic seam.
    ///
    /// Used to monitor whether a nominally whole-space solution is feeling the
    /// box: with `fraction = 0.1` this is the outermost 10% of each axis.
    pub fn boundary_band_mass(&self, fraction: f64) -> f64 {
        let cutoff = (1.0 - fraction) * self.domain.half_width;
        let mut total = 0.0;
        for cell in 0..self.domain.cells() {
            let c = self.domain.coords(cell);
            let near_seam = match self.domain.dim {
                1 => c[0].abs() >= cutoff,
                _ => c[0].abs() >= cutoff || c[1].abs() >= cutoff,
            };
            if near_seam {
                total += self.data[cell].abs();
            }
        }
        total * self.domain.cell_measure()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    /// `self + weight * other`, elementwise.
    pub fn axpy(&mut self, weight: f64, other: &ScalarField) {
        assert!(self.domain.same_space(&other.domain), "grids differ");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += weight * b;
        }
    }
}

/// One time slice of a vector quantity (control, gradient) on the lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub domain: DomainSpec,
    pub time_index: usize,
    /// One flat component array per axis.
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(domain: &DomainSpec) -> Self {
        Self {
            domain: *domain,
            time_index: 0,
            comps: vec![vec![0.0; domain.cells()]; domain.dim],
        }
    }

    /// Constant vector field with the given per-axis value.
    pub fn constant(domain: &DomainSpec, value: &[f64]) -> Self {
        let mut field = Self::zeros(domain);
        for (axis, comp) in field.comps.iter_mut().enumerate() {
            comp.fill(value[axis]);
        }
        field
    }

    pub fn from_fn(domain: &DomainSpec, f: impl Fn(&[f64; 2]) -> [f64; 2]) -> Self {
        let mut field = Self::zeros(domain);
        for cell in 0..domain.cells() {
            let v = f(&domain.coords(cell));
            for axis in 0..domain.dim {
                field.comps[axis][cell] = v[axis];
            }
        }
        field
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    /// Euclidean magnitude of the vector at one cell.
    pub fn magnitude_at(&self, cell: usize) -> f64 {
        match self.comps.len() {
            1 => self.comps[0][cell].abs(),
            _ => (self.comps[0][cell].powi(2) + self.comps[1][cell].powi(2)).sqrt(),
        }
    }

    pub fn vector_at(&self, cell: usize) -> [f64; 2] {
        match self.comps.len() {
            1 => [self.comps[0][cell], 0.0],
            _ => [self.comps[0][cell], self.comps[1][cell]],
        }
    }

    pub fn set_vector_at(&mut self, cell: usize, v: &[f64; 2]) {
        for axis in 0..self.comps.len() {
            self.comps[axis][cell] = v[axis];
        }
    }

    /// Pointwise supremum of the Euclidean magnitude.
    pub fn sup_magnitude(&self) -> f64 {
        (0..self.domain.cells()).fold(0.0f64, |acc, cell| acc.max(self.magnitude_at(cell)))
    }

    /// `L^1` norm of the magnitude, `integral |v(x)| dx`.
    pub fn l1_norm(&self) -> f64 {
        let sum: f64 = (0..self.domain.cells()).map(|c| self.magnitude_at(c)).sum();
        sum * self.domain.cell_measure()
    }

    /// `L^1` distance of magnitudes `integral |v - w| dx`.
    pub fn l1_distance(&self, other: &VectorField) -> f64 {
        assert!(self.domain.same_space(&other.domain), "grids differ");
        let mut sum = 0.0;
        for cell in 0..self.domain.cells() {
            let a = self.vector_at(cell);
            let b = other.vector_at(cell);
            let dx0 = a[0] - b[0];
            let dx1 = a[1] - b[1];
            sum += (dx0 * dx0 + dx1 * dx1).sqrt();
        }
        sum * self.domain.cell_measure()
    }

    pub fn scale(&mut self, factor: f64) {
        for comp in &mut self.comps {
            for v in comp {
                *v *= factor;
            }
        }
    }

    pub fn axpy(&mut self, weight: f64, other: &VectorField) {
        assert!(self.domain.same_space(&other.domain), "grids differ");
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += weight * y;
            }
        }
    }
}

/// Trapezoid-in-time `L^1` distance between two trajectories of slices.
pub fn trajectory_l1_distance(a: &[ScalarField], b: &[ScalarField]) -> f64 {
    assert_eq!(a.len(), b.len(), "trajectory lengths differ");
    assert!(!a.is_empty());
    let domain = a[0].domain;
    let steps = a.len() - 1;
    let dt = if steps == 0 { 1.0 } else { domain.horizon / steps as f64 };
    let mut total = 0.0;
    for (k, (fa, fb)) in a.iter().zip(b).enumerate() {
        let w = if steps > 0 && (k == 0 || k == steps) { 0.5 * dt } else { dt };
        total += w * fa.l1_distance(fb);
    }
    total
}

/// Trapezoid-in-time `L^1` distance between two vector trajectories.
pub fn control_l1_distance(a: &[VectorField], b: &[VectorField]) -> f64 {
    assert_eq!(a.len(), b.len(), "trajectory lengths differ");
    assert!(!a.is_empty());
    let domain = a[0].domain;
    let steps = a.len() - 1;
    let dt = if steps == 0 { 1.0 } else { domain.horizon / steps as f64 };
    let mut total = 0.0;
    for (k, (fa, fb)) in a.iter().zip(b).enumerate() {
        let w = if steps > 0 && (k == 0 || k == steps) { 0.5 * dt } else { dt };
        total += w * fa.l1_distance(fb);
    }
    total
}

/// Sup over slices of the Euclidean magnitude of a vector trajectory.
pub fn control_sup_magnitude(traj: &[VectorField]) -> f64 {
    traj.iter().fold(0.0f64, |acc, u| acc.max(u.sup_magnitude()))
}

/// Anything carrying a time-slice index (used by trajectory reversal).
pub trait TimeIndexed {
    fn set_time_index(&mut self, k: usize);
}

impl TimeIndexed for ScalarField {
    fn set_time_index(&mut self, k: usize) {
        self.time_index = k;
    }
}

impl TimeIndexed for VectorField {
    fn set_time_index(&mut self, k: usize) {
        self.time_index = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn domain() -> DomainSpec {
        DomainSpec::new(1, 4.0, 128, 1.0, 8, 0.5).unwrap()
    }

    #[test]
    fn gaussian_has_unit_mass_and_right_moments() {
        let d = domain();
        let g = ScalarField::gaussian(&d, &[0.0, 0.0], 0.5);
        assert!((g.mass() - 1.0).abs() < 1e-12);
        // Second moment of a lattice-sampled periodized Gaussian.
        let m2: f64 = (0..d.cells())
            .map(|c| d.coords(c)[0].powi(2) * g.values()[c])
            .sum::<f64>()
            * d.cell_measure();
        assert!((m2 - 0.25).abs() < 1e-10, "second moment {m2}");
    }

    #[test]
    fn grid_delta_mass_is_one() {
        let d = domain();
        let delta = ScalarField::grid_delta(&d, &[0.3, 0.0]);
        assert!((delta.mass() - 1.0).abs() < 1e-14);
        assert_eq!(
            delta.values().iter().filter(|v| **v != 0.0).count(),
            1,
            "delta occupies one cell"
        );
    }

    #[test]
    fn norm_interpolation_l1_vs_lm() {
        // |f|_1 <= |box|^(1 - 1/m) |f|_m by Hoelder, discretely as well.
        let d = domain();
        let f = ScalarField::from_fn(&d, |x| (x[0] * 1.3).sin() + 0.2);
        for m in [1.5, 2.0, 4.0, f64::INFINITY] {
            let bound = if m.is_infinite() {
                d.box_measure() * f.lp_norm(m)
            } else {
                d.box_measure().powf(1.0 - 1.0 / m) * f.lp_norm(m)
            };
            assert!(f.lp_norm(1.0) <= bound * (1.0 + 1e-12), "m = {m}");
        }
    }

    #[test]
    fn gaussian_l2_norm_matches_closed_form() {
        // For a unit-mass Gaussian with width sigma in 1-d:
        // |g|_2^2 = 1 / (2 sigma sqrt(pi)).
        let d = domain();
        let sigma = 0.5f64;
        let g = ScalarField::gaussian(&d, &[0.0, 0.0], sigma);
        let expected = (1.0 / (2.0 * sigma * std::f64::consts::PI.sqrt())).sqrt();
        assert!((g.lp_norm(2.0) - expected).abs() < 1e-9);
    }

    #[test]
    fn boundary_band_mass_sees_only_the_seam() {
        let d = domain();
        let centered = ScalarField::gaussian(&d, &[0.0, 0.0], 0.3);
        assert!(centered.boundary_band_mass(0.1) < 1e-12);
        let seam = ScalarField::gaussian(&d, &[3.9, 0.0], 0.3);
        assert!(seam.boundary_band_mass(0.1) > 0.4);
    }

    #[test]
    fn vector_magnitude_2d() {
        let d = DomainSpec::new(2, 2.0, 8, 1.0, 4, 0.3).unwrap();
        let v = VectorField::constant(&d, &[3.0, 4.0]);
        assert!((v.sup_magnitude() - 5.0).abs() < 1e-15);
        assert!((v.l1_norm() - 5.0 * d.box_measure()).abs() < 1e-12);
    }
}
