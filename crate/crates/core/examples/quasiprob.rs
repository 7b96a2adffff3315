//! Quasi-probability tables and expectation values through them.

use num_complex::Complex64;
use seqtomo::hilbert::{random_density_matrix, random_hermitian, Purity};
use seqtomo::quasiprob::{expectation_via_quasiprob, quasiprob_of_state};
use seqtomo::{fourier_pair, Meter};

fn main() -> seqtomo::Result<()> {
    let pair = fourier_pair(3)?;
    let rho = random_density_matrix(3, 5, Purity::Mixed)?;

    let kd = quasiprob_of_state(&rho, &pair, Complex64::new(1.0, 0.0))?;
    println!("Kirkwood-Dirac table (rows mu, columns k):\n{:.4}", kd.values);

    let meter = Meter::gaussian(1.0)?;
    let lambda = meter.lambda(1.5)?;
    let strong = quasiprob_of_state(&rho, &pair, lambda)?;
    println!("at eps1 = 1.5 (lambda = {:.4}):\n{:.4}", lambda.re, strong.values);
    println!("column marginals {:.6?}", strong.column_marginals());

    let obs = random_hermitian(3, 9);
    let direct = (rho.matrix() * &obs).trace();
    for l in [Complex64::new(1.0, 0.0), lambda, Complex64::new(0.4, 0.2)] {
        let z = expectation_via_quasiprob(&rho, &obs, &pair, l)?;
        println!("lambda = {l:.3}: sum W O = {z:.12}  tr(rho O) = {:.12}", direct.re);
    }

    kd.write_csv(std::io::stdout())?;
    Ok(())
}
