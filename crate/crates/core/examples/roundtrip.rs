//! Simulate the pointer correlations of a random qutrit and invert them.

use seqtomo::hilbert::{random_density_matrix, trace_distance, Purity};
use seqtomo::{correlation_set, fourier_pair, reconstruct, Meter};

fn main() -> seqtomo::Result<()> {
    let pair = fourier_pair(3)?;
    let rho = random_density_matrix(3, 7, Purity::Mixed)?;
    let meter = Meter::gaussian(1.0)?;

    let corr = correlation_set(&rho, &pair, &meter, &meter, 0.5, 1.0)?;
    println!("lambda(eps1) = {:.6}", corr.lambda);
    println!("x       = {:?}", corr.x);
    println!("y_tilde = {:?}", corr.y_tilde);

    let back = reconstruct(&corr, &pair)?;
    println!("input:\n{:.4}", rho.matrix());
    println!("reconstructed:\n{:.4}", back.matrix());
    println!("trace distance = {:.3e}", trace_distance(&rho, &back)?);
    Ok(())
}
