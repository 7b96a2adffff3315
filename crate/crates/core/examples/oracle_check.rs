//! Closed-form pointer correlations against a brute-force grid simulation.

use seqtomo::forward::{corr_pq, corr_qq};
use seqtomo::hilbert::{random_density_matrix, random_hermitian, Purity};
use seqtomo::oracle::{simulate_correlations, OracleGrid};
use seqtomo::{Meter, ObservableSpectral, SuccessiveSetup};

fn main() -> seqtomo::Result<()> {
    let rho = random_density_matrix(2, 1, Purity::Mixed)?;
    let unit = |seed| -> seqtomo::Result<ObservableSpectral> {
        let h = random_hermitian(2, seed);
        let s = ObservableSpectral::from_hermitian(&h)?.max_abs_eigenvalue();
        ObservableSpectral::from_hermitian(&h.unscale(s))
    };
    let (a, b) = (unit(10)?, unit(20)?);
    let meter = Meter::gaussian(1.0)?;

    for eps in [0.3, 1.0, 2.0] {
        let setup = SuccessiveSetup {
            rho: &rho,
            first: &a,
            second: &b,
            meter1: &meter,
            meter2: &meter,
            eps1: eps,
            eps2: eps,
        };
        let (qq, pq) = (corr_qq(&setup)?, corr_pq(&setup)?);
        let (oq, op) = simulate_correlations(&rho, &a, &b, &meter, &meter, eps, eps, OracleGrid::default())?;
        println!("eps = {eps}: <Q1Q2> {qq:+.10} vs {oq:+.10}, <P1Q2> {pq:+.10} vs {op:+.10}");
    }
    Ok(())
}
