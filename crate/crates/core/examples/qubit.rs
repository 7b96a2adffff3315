//! A qubit needs only three correlations: x(+,0), x(-,0) and y~(-,0).

use seqtomo::hilbert::{random_density_matrix, Purity};
use seqtomo::reconstruct::{qubit_dependents, qubit_reconstruct};
use seqtomo::{correlation_set, fourier_pair, Meter};

fn main() -> seqtomo::Result<()> {
    let pair = fourier_pair(2)?;
    let meter = Meter::gaussian(1.0)?;
    let rho = random_density_matrix(2, 42, Purity::Pure)?;
    let corr = correlation_set(&rho, &pair, &meter, &meter, 0.8, 1.0)?;

    // second basis index 0 is |+>, 1 is |->
    let (x_p0, x_m0, yt_m0) = (corr.x[0][0], corr.x[1][0], corr.y_tilde[1][0]);
    let dep = qubit_dependents(x_p0, x_m0, yt_m0);
    println!("x(+,1)  = {:+.12}  predicted {:+.12}", corr.x[0][1], dep.x_p1);
    println!("x(-,1)  = {:+.12}  predicted {:+.12}", corr.x[1][1], dep.x_m1);
    println!("y~(+,0) = {:+.12}  predicted {:+.12}", corr.y_tilde[0][0], dep.yt_p0);
    println!("y~(+,1) = {:+.12}  predicted {:+.12}", corr.y_tilde[0][1], dep.yt_p1);
    println!("y~(-,1) = {:+.12}  predicted {:+.12}", corr.y_tilde[1][1], dep.yt_m1);

    let back = qubit_reconstruct(x_p0, x_m0, yt_m0, corr.lambda.re, corr.lambda_tilde.re)?;
    println!("input:\n{:.6}reconstructed:\n{:.6}", rho.matrix(), back.matrix());
    Ok(())
}
