//! Uniform periodic 1-D grids for pointer wavefunctions.
//!
//! Position nodes are `x_j = -extent/2 + j dx`; momenta follow the signed
//! DFT frequency order, `p_k = 2 pi f_k / extent`. With `hbar = 1`,
//! `exp(-i beta P)` is the translation `psi(x) -> psi(x - beta)` and is
//! applied exactly as a phase in momentum space.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub extent: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, extent: f64) -> Result<Self> {
        if n_points < 4 || !n_points.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid size {n_points} must be a power of two >= 4"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Config(format!("grid extent {extent} must be positive")));
        }
        Ok(Self { n_points, extent })
    }

    pub fn dx(&self) -> f64 {
        self.extent / self.n_points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_points)
            .map(|j| -0.5 * self.extent + j as f64 * dx)
            .collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        let n = self.n_points as isize;
        (0..n)
            .map(|k| {
                let f = if k < n / 2 { k } else { k - n };
                2.0 * PI * f as f64 / self.extent
            })
            .collect()
    }

    /// Largest pointer translation allowed before periodic wrap-around.
    pub fn max_shift(&self) -> f64 {
        self.extent / 4.0
    }

    pub fn check_shift(&self, shift: f64) -> Result<()> {
        if shift.abs() > self.max_shift() {
            return Err(Error::GridWrapAround {
                shift: shift.abs(),
                limit: self.max_shift(),
            });
        }
        Ok(())
    }
}

/// Forward/inverse plans for one grid size. The inverse is normalized.
#[derive(Clone)]
pub struct Transform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Transform {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / n as f64,
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        for z in buf.iter_mut() {
            *z *= self.scale;
        }
    }

    /// Multiply by `f(p_k)` in momentum space.
    pub fn apply_momentum_fn(
        &self,
        buf: &mut [Complex64],
        momenta: &[f64],
        f: impl Fn(f64) -> Complex64,
    ) {
        self.forward(buf);
        for (z, &p) in buf.iter_mut().zip(momenta) {
            *z *= f(p);
        }
        self.inverse(buf);
    }
}

/// `sin(x) / x` with the removable singularity filled in.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_symmetric_under_reflection() {
        let g = GridSpec::new(16, 8.0).unwrap();
        let x = g.positions();
        for j in 1..16 {
            assert!((x[j] + x[16 - j]).abs() < 1e-14);
        }
        let p = g.momenta();
        assert_eq!(p[0], 0.0);
        assert!(p[8] < 0.0);
    }

    #[test]
    fn momentum_phase_translates() {
        let g = GridSpec::new(256, 20.0).unwrap();
        let t = Transform::new(256);
        let x = g.positions();
        let mut psi: Vec<Complex64> = x.iter().map(|&x| Complex64::new((-x * x).exp(), 0.0)).collect();
        let shift = 1.5;
        t.apply_momentum_fn(&mut psi, &g.momenta(), |p| Complex64::from_polar(1.0, -shift * p));
        for (z, &x) in psi.iter().zip(&x) {
            let want = (-(x - shift) * (x - shift)).exp();
            assert!((z - want).norm() < 1e-12);
        }
    }

    #[test]
    fn bad_grids_rejected() {
        assert!(GridSpec::new(100, 1.0).is_err());
        assert!(GridSpec::new(128, -1.0).is_err());
        let g = GridSpec::new(128, 8.0).unwrap();
        assert!(g.check_shift(2.0).is_ok());
        assert!(matches!(g.check_shift(2.5), Err(Error::GridWrapAround { .. })));
    }
}
