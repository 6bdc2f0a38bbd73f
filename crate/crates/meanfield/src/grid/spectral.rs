//! FFT plumbing for the periodic lattice.
//!
//! Everything spectral in this crate goes through this thin wrapper: forward
//! and inverse complex FFTs per axis (rows then columns in 2-d) plus the
//! wavenumber bookkeeping. On the box `[-L, L)^d` with `n` points per axis the
//! discrete modes are `k_m = pi * m / L` for signed index `m in [-n/2, n/2)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::domain::DomainSpec;

pub struct Spectral {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Signed wavenumber per unsigned axis index.
    axis_k: Vec<f64>,
    dx: f64,
}

impl Spectral {
    pub fn new(domain: &DomainSpec) -> Self {
        let mut planner = FftPlanner::new();
        let n = domain.points;
        let axis_k = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as i64 } else { m as i64 - n as i64 };
                std::f64::consts::PI * signed as f64 / domain.half_width
            })
            .collect();
        Self {
            dim: domain.dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            axis_k,
            dx: domain.dx(),
        }
    }

    pub fn modes(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Per-axis signed wavenumber of a flat mode index.
    pub fn axis_wavenumber(&self, mode: usize, axis: usize) -> f64 {
        match (self.dim, axis) {
            (1, _) => self.axis_k[mode],
            (_, 0) => self.axis_k[mode / self.n],
            _ => self.axis_k[mode % self.n],
        }
    }

    /// `|k|^2` of a flat mode index (symbol of the continuum Laplacian).
    pub fn laplacian_symbol(&self, mode: usize) -> f64 {
        match self.dim {
            1 => self.axis_k[mode].powi(2),
            _ => self.axis_k[mode / self.n].powi(2) + self.axis_k[mode % self.n].powi(2),
        }
    }

    /// Symbol of the three-point discrete Laplacian, `sum_axis (2 - 2 cos(k dx)) / dx^2`.
    pub fn discrete_laplacian_symbol(&self, mode: usize) -> f64 {
        let one = |k: f64| (2.0 - 2.0 * (k * self.dx).cos()) / (self.dx * self.dx);
        match self.dim {
            1 => one(self.axis_k[mode]),
            _ => one(self.axis_k[mode / self.n]) + one(self.axis_k[mode % self.n]),
        }
    }

    /// True when the mode index sits at the Nyquist frequency of that axis.
    ///
    /// The first-derivative multiplier `i k` must vanish there to keep real
    /// signals real; even symbols are unaffected.
    pub fn is_axis_nyquist(&self, mode: usize, axis: usize) -> bool {
        let idx = match (self.dim, axis) {
            (1, _) => mode,
            (_, 0) => mode / self.n,
            _ => mode % self.n,
        };
        idx == self.n / 2
    }

    pub fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Inverse transform, normalized, real part returned.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.transform(&mut buf, true);
        let scale = 1.0 / self.modes() as f64;
        buf.into_iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        match self.dim {
            1 => fft.process(buf),
            _ => {
                // Rows in place, then columns through a scratch vector.
                for row in buf.chunks_exact_mut(self.n) {
                    fft.process(row);
                }
                let mut column = vec![Complex64::new(0.0, 0.0); self.n];
                for j in 0..self.n {
                    for i in 0..self.n {
                        column[i] = buf[i * self.n + j];
                    }
                    fft.process(&mut column);
                    for i in 0..self.n {
                        buf[i * self.n + j] = column[i];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::domain::DomainSpec;

    #[test]
    fn forward_inverse_round_trip() {
        let d = DomainSpec::new(1, 4.0, 64, 1.0, 4, 0.5).unwrap();
        let s = Spectral::new(&d);
        let data: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64).sin()).collect();
        let back = s.inverse(&s.forward(&data));
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_2d() {
        let d = DomainSpec::new(2, 2.0, 16, 1.0, 4, 0.5).unwrap();
        let s = Spectral::new(&d);
        let data: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).cos()).collect();
        let back = s.inverse(&s.forward(&data));
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_lands_on_one_mode() {
        let d = DomainSpec::new(1, 4.0, 32, 1.0, 4, 0.5).unwrap();
        let s = Spectral::new(&d);
        // exp(i k_3 x) sampled: energy concentrates on unsigned index 3.
        let k3 = std::f64::consts::PI * 3.0 / 4.0;
        let data: Vec<f64> = (0..32).map(|i| (k3 * d.coord(i)).cos()).collect();
        let spec = s.forward(&data);
        let mut mags: Vec<f64> = spec.iter().map(|c| c.norm()).collect();
        // cos splits between +3 and -3 (index 29).
        assert!(mags[3] > 10.0 && mags[29] > 10.0);
        mags[3] = 0.0;
        mags[29] = 0.0;
        assert!(mags.iter().all(|&m| m < 1e-10));
        assert!((s.axis_wavenumber(3, 0) - k3).abs() < 1e-14);
        assert!((s.axis_wavenumber(29, 0) + k3).abs() < 1e-14);
    }

    #[test]
    fn discrete_symbol_approaches_continuum_for_low_modes() {
        let d = DomainSpec::new(1, 4.0, 256, 1.0, 4, 0.5).unwrap();
        let s = Spectral::new(&d);
        let k = s.axis_wavenumber(2, 0);
        let cont = k * k;
        let disc = s.discrete_laplacian_symbol(2);
        // Leading deviation is (k dx)^2 / 12 relative; allow twice that.
        let expected = (k * d.dx()).powi(2) / 12.0;
        assert!((cont - disc).abs() / cont < 2.0 * expected);
        assert!((cont - disc).abs() / cont > 0.5 * expected);
        // And the discrete symbol is smaller: (2 - 2cos)/dx^2 <= k^2.
        assert!(disc <= cont);
    }
}
