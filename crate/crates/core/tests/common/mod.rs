//! Pointer states shared by the integration tests.

#![allow(dead_code)]

use num_complex::Complex64;
use seqtomo::grid::GridSpec;
use seqtomo::meter::GridMeter;

/// Unnormalized Hermite function of order 0..=3 with the given width.
pub fn hermite_component(grid: GridSpec, order: usize, width: f64) -> Vec<Complex64> {
    grid.positions()
        .iter()
        .map(|&x| {
            let u = x / width;
            let poly = match order {
                0 => 1.0,
                1 => 2.0 * u,
                2 => 4.0 * u * u - 2.0,
                _ => 8.0 * u * u * u - 12.0 * u,
            };
            Complex64::new(poly * (-0.5 * u * u).exp(), 0.0)
        })
        .collect()
}

/// Zero-mean skewed momentum density with a cubic phase chosen so that
/// `<Q> = 0` and `<QP + PQ> = 0`; `lambda` is complex and `h != 0`.
pub fn skewed_complex_meter(grid: GridSpec) -> GridMeter {
    let density = |p: f64| {
        0.7 * (-(p + 0.3f64).powi(2) / 0.5).exp() / 0.5 + 0.3 * (-(p - 0.7f64).powi(2) / 1.28).exp() / 0.8
    };
    let momenta = grid.momenta();
    let total: f64 = momenta.iter().map(|&p| density(p)).sum();
    let m = |n: i32| momenta.iter().map(|&p| density(p) * p.powi(n)).sum::<f64>() / total;
    let alpha = (m(3) - m(1) * m(2)) / (m(2) - m(1) * m(1));
    let beta = m(2) - alpha * m(1);
    let phi = momenta
        .iter()
        .map(|&p| Complex64::from_polar(density(p).sqrt(), 0.4 * (p.powi(3) / 3.0 - 0.5 * alpha * p * p - beta * p)))
        .collect();
    GridMeter::from_momentum_amplitudes(grid, vec![(1.0, phi)]).unwrap()
}
