//! Response functions of a Gaussian pointer and of a two-component mixture.

use num_complex::Complex64;
use seqtomo::grid::GridSpec;
use seqtomo::{GridMeter, Meter};

fn hermite(grid: GridSpec, order: usize) -> Vec<Complex64> {
    grid.positions()
        .iter()
        .map(|&x| {
            let poly = if order == 0 { 1.0 } else { 4.0 * x * x - 2.0 };
            Complex64::new(poly * (-0.5 * x * x).exp(), 0.0)
        })
        .collect()
}

fn main() -> seqtomo::Result<()> {
    let gauss = Meter::gaussian(1.0)?;
    let grid = GridSpec::new(512, 24.0)?;
    let mixture = Meter::Grid(GridMeter::normalized(grid, vec![(0.7, hermite(grid, 0)), (0.3, hermite(grid, 2))])?);
    println!("mixture validity: {:?}", mixture.validate());

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "beta", "gauss", "mix g", "mix lambda", "mix lambda~");
    for i in -6..=6 {
        let beta = 0.5 * i as f64;
        println!(
            "{beta:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            gauss.lambda(beta)?.re,
            mixture.g(beta)?.re,
            mixture.lambda(beta)?.re,
            mixture.lambda_tilde(beta)?.re,
        );
    }
    Ok(())
}
