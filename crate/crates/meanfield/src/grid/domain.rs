//! Periodic space-time grid description.
//!
//! Space is the periodic box `[-half_width, half_width)^dim` sampled on a
//! power-of-two lattice (`points` per axis, spacing `dx = 2*half_width/points`).
//! Time is the uniform grid `t_k = k * dt`, `k = 0..=time_steps`, over the
//! horizon `[0, horizon]`. The viscosity carried here is the diffusion
//! coefficient of the generator `d/dt - viscosity * Laplacian`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial + temporal discretization parameters, shared by every field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Half the box edge length; the box is `[-half_width, half_width)^dim`.
    pub half_width: f64,
    /// Lattice points per axis; must be a power of two.
    pub points: usize,
    /// Final time of the horizon `[0, horizon]`.
    pub horizon: f64,
    /// Number of uniform time steps (so there are `time_steps + 1` slices).
    pub time_steps: usize,
    /// Diffusion coefficient in front of the Laplacian.
    pub viscosity: f64,
}

impl DomainSpec {
    pub fn new(
        dim: usize,
        half_width: f64,
        points: usize,
        horizon: f64,
        time_steps: usize,
        viscosity: f64,
    ) -> Result<Self> {
        let spec = Self {
            dim,
            half_width,
            points,
            horizon,
            time_steps,
            viscosity,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidDomain(msg));
        if self.dim != 1 && self.dim != 2 {
            return fail(format!("dimension must be 1 or 2, got {}", self.dim));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return fail(format!("half_width must be positive, got {}", self.half_width));
        }
        if self.points < 8 || !self.points.is_power_of_two() {
            return fail(format!(
                "points per axis must be a power of two >= 8, got {}",
                self.points
            ));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return fail(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.time_steps == 0 {
            return fail("time_steps must be at least 1".to_string());
        }
        if !(self.viscosity.is_finite() && self.viscosity > 0.0) {
            return fail(format!("viscosity must be positive, got {}", self.viscosity));
        }
        Ok(())
    }

    /// Lattice spacing per axis.
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Time-step length.
    pub fn dt(&self) -> f64 {
        self.horizon / self.time_steps as f64
    }

    /// Total number of spatial cells (`points^dim`).
    pub fn cells(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Cell measure `dx^dim`, the quadrature weight of one lattice point.
    pub fn cell_measure(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    /// Measure of the whole box, `(2 * half_width)^dim`.
    pub fn box_measure(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate of lattice index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    /// Coordinates of the flat cell index (second entry is 0.0 when `dim == 1`).
    pub fn coords(&self, cell: usize) -> [f64; 2] {
        match self.dim {
            1 => [self.coord(cell), 0.0],
            _ => [self.coord(cell / self.points), self.coord(cell % self.points)],
        }
    }

    /// Flat index from per-axis indices (the second is ignored when `dim == 1`).
    pub fn flat_index(&self, i: usize, j: usize) -> usize {
        match self.dim {
            1 => i,
            _ => i * self.points + j,
        }
    }

    /// Wrap a coordinate into `[-half_width, half_width)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let width = 2.0 * self.half_width;
        let mut y = (x + self.half_width).rem_euclid(width) - self.half_width;
        // rem_euclid can land exactly on +half_width through rounding.
        if y >= self.half_width {
            y = -self.half_width;
        }
        y
    }

    /// Minimal-image displacement (periodic distance with sign).
    pub fn periodic_delta(&self, x: f64) -> f64 {
        self.wrap(x)
    }

    /// Time of slice `k`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Trapezoid weights over time slices: `dt` inside, `dt/2` at the ends.
    pub fn time_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.time_steps {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    pub fn same_space(&self, other: &DomainSpec) -> bool {
        self.dim == other.dim && self.points == other.points && self.half_width == other.half_width
    }
}
