//! How many of the 2 d^2 correlations carry independent information.

use num_complex::Complex64;
use seqtomo::forward::{correlation_set_with_response, ProjectorResponse};
use seqtomo::reconstruct::{independence_report, CorrelationKind};
use seqtomo::{fourier_pair, DensityMatrix};

fn main() -> seqtomo::Result<()> {
    let cases = [
        ("generic", Complex64::new(0.62, 0.17), Complex64::new(0.55, -0.08)),
        ("real", Complex64::new(0.6, 0.0), Complex64::new(0.6, 0.0)),
        ("lambda = 0", Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
    ];
    for d in 2..=6 {
        let pair = fourier_pair(d)?;
        let rho = DensityMatrix::maximally_mixed(d);
        for (name, l, lt) in cases {
            let response = ProjectorResponse::from_values(l, lt, 1.0);
            let corr = correlation_set_with_response(rho.matrix(), &pair, &response, 0.7, 1.0)?;
            let report = independence_report(&corr, &pair)?;
            let nx = report.independent_subset.iter().filter(|c| c.kind == CorrelationKind::X).count();
            println!(
                "d = {d} {name:<10} rank {:>2} of {:>2} parameters; subset: {nx} x and {} y~",
                report.rank,
                d * d - 1,
                report.independent_subset.len() - nx
            );
        }
    }
    Ok(())
}
