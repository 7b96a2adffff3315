//! Inversion of measured meter correlations into the system state.
//!
//! Two steps: the complex quasi-probability `W11(mu, k)` is recovered from
//! `x = Re W11` and `y_tilde = Im W~11`, then
//! `<k|rho|k'> = sum_mu W11(mu, k) / G(k', k) * <mu|k'> / <mu|k>` with
//! `G(k', k) = 1` on the diagonal and `lambda(eps1)` elsewhere.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{correlation_set_with_response, CorrelationSet, ProjectorResponse};
use crate::hilbert::{
    hermitian_eigen, hermitian_eigenvalues, hermitize, trace_distance, traceless_hermitian_basis,
    BasisPair, CMatrix, DensityMatrix, PSD_TOL,
};

/// `|Re(lambda conj(lambda_tilde))| / (|lambda| |lambda_tilde|)` below which
/// `y` is unrecoverable: the two responses are nearly a quarter turn apart.
pub const DEGENERATE_RECOVERY_TOL: f64 = 1e-8;
/// `|lambda|` below which coherences are unrecoverable.
pub const STRONG_COUPLING_TOL: f64 = 1e-10;
/// Allowed trace defect of a reconstruction before it counts as inconsistent.
pub const RECONSTRUCTION_TRACE_TOL: f64 = 1e-9;
/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

/// Full complex `W11` table with the intermediate unknowns.
///
/// `w11 = r0 + lambda (r + i s)` where `r0 = tr(rho P_k P_mu P_k)` and
/// `r + i s = sum_{k' != k} tr(rho P_k' P_mu P_k)`. All tables are
/// indexed `(mu, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredW {
    pub w11: CMatrix,
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub r0: DMatrix<f64>,
    /// `lambda` was below [`STRONG_COUPLING_TOL`]; `w11 = r0` is real and
    /// `r`, `s` are undetermined (left at zero).
    pub strong_coupling: bool,
}

impl RecoveredW {
    pub fn reassemble(&self, lambda: Complex64) -> CMatrix {
        CMatrix::from_fn(self.w11.nrows(), self.w11.ncols(), |mu, k| {
            self.r0[(mu, k)] + lambda * Complex64::new(self.r[(mu, k)], self.s[(mu, k)])
        })
    }
}

fn check_corr_pair(corr: &CorrelationSet, pair: &BasisPair) -> Result<()> {
    corr.validate()?;
    if corr.dim != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: corr.dim,
        });
    }
    Ok(())
}

/// Solve, for every `(mu, k)`, the 3x3 linear system
///
/// ```text
/// x - r0 = lr r - li s
/// y      = li r + lr s
/// y~     = l~i r + l~r s
/// ```
///
/// for `(r, s, y)`, with `r0 = |<k|mu>|^2 sum_mu' x[mu'][k]`.
pub fn recover_w11(corr: &CorrelationSet, pair: &BasisPair) -> Result<RecoveredW> {
    check_corr_pair(corr, pair)?;
    let d = corr.dim;
    let lambda = corr.lambda;
    let lambda_t = corr.lambda_tilde;
    let populations: Vec<f64> = (0..d).map(|k| (0..d).map(|mu| corr.x[mu][k]).sum()).collect();
    let r0 = DMatrix::from_fn(d, d, |mu, k| pair.overlap(mu, k).norm_sqr() * populations[k]);

    if lambda.norm() < STRONG_COUPLING_TOL {
        return Ok(RecoveredW {
            w11: CMatrix::from_fn(d, d, |mu, k| Complex64::new(corr.x[mu][k], 0.0)),
            r: DMatrix::zeros(d, d),
            s: DMatrix::zeros(d, d),
            r0,
            strong_coupling: true,
        });
    }
    let cross = lambda * lambda_t.conj();
    if lambda_t.norm() < STRONG_COUPLING_TOL || cross.re.abs() < DEGENERATE_RECOVERY_TOL * cross.norm() {
        return Err(Error::DegenerateRecovery { value: cross.re });
    }
    let mut w11 = CMatrix::zeros(d, d);
    let mut r = DMatrix::zeros(d, d);
    let mut s = DMatrix::zeros(d, d);
    for mu in 0..d {
        for k in 0..d {
            let dx = corr.x[mu][k] - r0[(mu, k)];
            let yt = corr.y_tilde[mu][k];
            let y = (cross.im * dx + lambda.norm_sqr() * yt) / cross.re;
            r[(mu, k)] = (lambda_t.re * dx + lambda.im * yt) / cross.re;
            s[(mu, k)] = (lambda.re * yt - lambda_t.im * dx) / cross.re;
            w11[(mu, k)] = Complex64::new(corr.x[mu][k], y);
        }
    }
    Ok(RecoveredW {
        w11,
        r,
        s,
        r0,
        strong_coupling: false,
    })
}

/// `<k|rho|k> = sum_mu W11(mu, k)`: the populations survive any coupling.
pub fn populations_from_w11(w11: &CMatrix) -> Vec<f64> {
    (0..w11.ncols()).map(|k| w11.column(k).iter().sum::<Complex64>().re).collect()
}

/// Unchecked inversion, Hermitized. Used directly for noisy data.
pub fn raw_rho_from_w11(w11: &CMatrix, pair: &BasisPair, lambda: Complex64) -> Result<CMatrix> {
    let d = pair.dim();
    if w11.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w11.nrows(),
        });
    }
    if lambda.norm() < STRONG_COUPLING_TOL {
        return Err(Error::StrongCouplingSingular {
            modulus: lambda.norm(),
            populations: populations_from_w11(w11),
        });
    }
    let ov = pair.overlaps();
    let rho = CMatrix::from_fn(d, d, |k, k2| {
        let g = if k == k2 { Complex64::new(1.0, 0.0) } else { lambda };
        (0..d)
            .map(|mu| w11[(mu, k)] * ov[(mu, k2)] / ov[(mu, k)])
            .sum::<Complex64>()
            / g
    });
    Ok(hermitize(&rho))
}

fn checked_density(raw: CMatrix) -> Result<DensityMatrix> {
    let trace = raw.trace().re;
    if (trace - 1.0).abs() > RECONSTRUCTION_TRACE_TOL {
        return Err(Error::InconsistentTrace { trace });
    }
    let min_eigenvalue = hermitian_eigenvalues(&raw)[0];
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPhysical { min_eigenvalue });
    }
    DensityMatrix::new(raw.unscale(trace))
}

/// Invert the `W11` table of the position-position scheme.
pub fn rho_from_w11(w11: &CMatrix, pair: &BasisPair, lambda: Complex64) -> Result<DensityMatrix> {
    checked_density(raw_rho_from_w11(w11, pair, lambda)?)
}

/// Same inversion for `W~11`, which carries `lambda_tilde` in place of `lambda`.
pub fn rho_from_w11_tilde(
    w11_tilde: &CMatrix,
    pair: &BasisPair,
    lambda_tilde: Complex64,
) -> Result<DensityMatrix> {
    rho_from_w11(w11_tilde, pair, lambda_tilde)
}

/// Correlations to state in one call.
pub fn reconstruct(corr: &CorrelationSet, pair: &BasisPair) -> Result<DensityMatrix> {
    let recovered = recover_w11(corr, pair)?;
    rho_from_w11(&recovered.w11, pair, corr.lambda)
}

/// Two-level closed form in the `sigma_z` (`k = 0, 1`) and `sigma_x`
/// (`mu = +, -`) bases from the three independent correlations
/// `x_{+0}`, `x_{-0}` and `y~_{-0}`, for real `lambda`, `lambda_tilde`.
pub fn qubit_reconstruct(
    x_p0: f64,
    x_m0: f64,
    yt_m0: f64,
    lambda: f64,
    lambda_tilde: f64,
) -> Result<DensityMatrix> {
    for l in [lambda, lambda_tilde] {
        if l.abs() < STRONG_COUPLING_TOL {
            return Err(Error::StrongCouplingSingular {
                modulus: l.abs(),
                populations: vec![x_p0 + x_m0, 1.0 - x_p0 - x_m0],
            });
        }
    }
    let rho00 = x_p0 + x_m0;
    let rho01 = Complex64::new((x_p0 - x_m0) / lambda, -2.0 * yt_m0 / lambda_tilde);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(rho00, 0.0),
            rho01,
            rho01.conj(),
            Complex64::new(1.0 - rho00, 0.0),
        ],
    );
    let min_eigenvalue = hermitian_eigenvalues(&m)[0];
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotPhysical { min_eigenvalue });
    }
    DensityMatrix::new(m)
}

/// Qubit correlations implied by the three independent ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDependents {
    pub x_p1: f64,
    pub x_m1: f64,
    pub yt_p0: f64,
    pub yt_p1: f64,
    pub yt_m1: f64,
}

pub fn qubit_dependents(x_p0: f64, x_m0: f64, yt_m0: f64) -> QubitDependents {
    QubitDependents {
        x_p1: 0.5 - x_m0,
        x_m1: 0.5 - x_p0,
        yt_p0: -yt_m0,
        yt_p1: yt_m0,
        yt_m1: -yt_m0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    X,
    YTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationIndex {
    pub kind: CorrelationKind,
    pub mu: usize,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub dim: usize,
    /// Numerical rank of the map from the `d^2 - 1` state parameters to
    /// the `2 d^2` correlations.
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Correlations picked by greedy pivoting; they determine the state
    /// whenever `rank = d^2 - 1`.
    pub independent_subset: Vec<CorrelationIndex>,
}

/// Jacobian of the correlations with respect to the coefficients of `rho`
/// in the traceless Hermitian basis; rows `x` then `y_tilde`, each in
/// `(mu, k)` row-major order.
pub fn correlation_jacobian(pair: &BasisPair, response: &ProjectorResponse, eps1: f64) -> Result<DMatrix<f64>> {
    let d = pair.dim();
    let basis = traceless_hermitian_basis(d);
    let mut jac = DMatrix::zeros(2 * d * d, basis.len());
    for (j, direction) in basis.iter().enumerate() {
        let c = correlation_set_with_response(direction, pair, response, eps1, 1.0)?;
        for mu in 0..d {
            for k in 0..d {
                jac[(mu * d + k, j)] = c.x[mu][k];
                jac[(d * d + mu * d + k, j)] = c.y_tilde[mu][k];
            }
        }
    }
    Ok(jac)
}

/// How many of the `2 d^2` correlations are independent for the response
/// recorded in `corr`.
pub fn independence_report(corr: &CorrelationSet, pair: &BasisPair) -> Result<IndependenceReport> {
    check_corr_pair(corr, pair)?;
    let response = ProjectorResponse::from_values(corr.lambda, corr.lambda_tilde, corr.sigma_p1_sq);
    let jac = correlation_jacobian(pair, &response, corr.eps1)?;
    let mut singular_values: Vec<f64> = jac.clone().svd(false, false).singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let largest = singular_values.first().copied().unwrap_or(0.0);
    let threshold = RANK_TOL * largest;
    let rank = singular_values.iter().filter(|&&s| s > threshold).count();

    // Greedy pivoting over correlations (rows of the Jacobian).
    let d = corr.dim;
    let mut residual: Vec<Vec<f64>> = (0..jac.nrows()).map(|i| jac.row(i).iter().copied().collect()).collect();
    let mut chosen = Vec::new();
    loop {
        let (best, norm) = residual
            .iter()
            .enumerate()
            .filter(|(i, _)| !chosen.contains(i))
            .map(|(i, r)| (i, r.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold((usize::MAX, 0.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best == usize::MAX || norm <= threshold {
            break;
        }
        chosen.push(best);
        let q: Vec<f64> = residual[best].iter().map(|v| v / norm).collect();
        for row in residual.iter_mut() {
            let dot: f64 = row.iter().zip(&q).map(|(a, b)| a * b).sum();
            row.iter_mut().zip(&q).for_each(|(a, b)| *a -= dot * b);
        }
    }
    chosen.sort_unstable();
    let independent_subset = chosen
        .into_iter()
        .map(|i| {
            let (kind, j) = if i < d * d {
                (CorrelationKind::X, i)
            } else {
                (CorrelationKind::YTilde, i - d * d)
            };
            CorrelationIndex {
                kind,
                mu: j / d,
                k: j % d,
            }
        })
        .collect();
    Ok(IndependenceReport {
        dim: d,
        rank,
        singular_values,
        independent_subset,
    })
}

/// Nearest-physical fix-up applied to noisy reconstructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub min_eigenvalue_before: f64,
    pub trace_before: f64,
    pub clipped_eigenvalues: usize,
}

/// Hermitize, clip negative eigenvalues to zero, renormalize the trace.
pub fn project_physical(m: &CMatrix) -> Result<(DensityMatrix, Projection)> {
    let h = hermitize(m);
    let trace_before = h.trace().re;
    let (values, vectors) = hermitian_eigen(&h);
    let clipped_eigenvalues = values.iter().filter(|&&v| v < 0.0).count();
    let kept: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::NotPhysical {
            min_eigenvalue: values[0],
        });
    }
    let d = h.nrows();
    let mut rho = CMatrix::zeros(d, d);
    for (i, &w) in kept.iter().enumerate() {
        if w > 0.0 {
            let v = vectors.column(i);
            rho += (v * v.adjoint()).scale(w / total);
        }
    }
    Ok((
        DensityMatrix::new(hermitize(&rho))?,
        Projection {
            min_eigenvalue_before: values[0],
            trace_before,
            clipped_eigenvalues,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub noise_sigma: f64,
    pub seed: u64,
    pub trace_distance_to_noiseless: f64,
    pub projection: Projection,
    pub flags: Vec<String>,
}

/// `x` and `y_tilde` with independent `N(0, noise_sigma^2)` perturbations.
/// Entry `(table, mu, k)` draws from its own ChaCha stream under `seed`, so
/// the noise does not depend on evaluation order.
pub fn perturb_correlations(corr: &CorrelationSet, noise_sigma: f64, seed: u64) -> Result<CorrelationSet> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::Config(format!("noise_sigma must be >= 0, got {noise_sigma}")));
    }
    let mut noisy = corr.clone();
    if noise_sigma == 0.0 {
        return Ok(noisy);
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let d = corr.dim;
    for (table_idx, table) in [&mut noisy.x, &mut noisy.y_tilde].into_iter().enumerate() {
        for (mu, row) in table.iter_mut().enumerate() {
            for (k, value) in row.iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((table_idx * d + mu) * d + k) as u64);
                *value += normal.sample(&mut rng);
            }
        }
    }
    Ok(noisy)
}

/// Reconstruct from noise-perturbed correlations and project onto the
/// physical states.
pub fn noisy_reconstruct(
    corr: &CorrelationSet,
    pair: &BasisPair,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DensityMatrix, NoiseReport)> {
    let noiseless = reconstruct(corr, pair)?;
    let noisy = perturb_correlations(corr, noise_sigma, seed)?;
    let recovered = recover_w11(&noisy, pair)?;
    let raw = raw_rho_from_w11(&recovered.w11, pair, noisy.lambda)?;
    let (rho, projection) = project_physical(&raw)?;
    let mut flags = vec!["physicality_projection".to_string()];
    if projection.clipped_eigenvalues > 0 {
        flags.push(format!("clipped_{}_eigenvalues", projection.clipped_eigenvalues));
    }
    let report = NoiseReport {
        noise_sigma,
        seed,
        trace_distance_to_noiseless: trace_distance(&rho, &noiseless)?,
        projection,
        flags,
    };
    Ok((rho, report))
}

/// JSON report of one reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub rho: DensityMatrix,
    pub trace_distance_to_reference: Option<f64>,
    pub flags: Vec<String>,
}

impl ReconstructionReport {
    pub fn new(rho: DensityMatrix, reference: Option<&DensityMatrix>, flags: Vec<String>) -> Result<Self> {
        let trace_distance_to_reference = reference.map(|r| trace_distance(&rho, r)).transpose()?;
        Ok(Self {
            rho,
            trace_distance_to_reference,
            flags,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{correlation_set, w11_projector, Variant};
    use crate::grid::GridSpec;
    use crate::hilbert::{fourier_pair, random_density_matrix, OrthonormalBasis, Purity};
    use crate::meter::fixtures::{hermite_mixture, skewed_meter};
    use crate::meter::Meter;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn skew() -> Meter {
        Meter::Grid(skewed_meter(GridSpec::new(1024, 60.0).unwrap()))
    }

    #[test]
    fn recovery_matches_forward_w11() {
        let meter = skew();
        let g = Meter::gaussian(1.0).unwrap();
        for d in [2, 3, 5] {
            let pair = fourier_pair(d).unwrap();
            let rho = random_density_matrix(d, 40 + d as u64, Purity::Mixed).unwrap();
            let corr = correlation_set(&rho, &pair, &meter, &g, 0.9, 1.0).unwrap();
            assert!(corr.lambda.im.abs() > 1e-3, "meter should give complex lambda");
            let rec = recover_w11(&corr, &pair).unwrap();
            for mu in 0..d {
                for k in 0..d {
                    let want = w11_projector(&rho, &pair, k, mu, &meter, 0.9, Variant::Plain).unwrap();
                    assert!((rec.w11[(mu, k)] - want).norm() < 1e-10);
                }
            }
            let again = rec.reassemble(corr.lambda);
            assert!((again - &rec.w11).iter().all(|z| z.norm() < 1e-12));
            assert!((rec.w11.iter().sum::<Complex64>() - 1.0).norm() < 1e-9);
        }
    }

    #[test]
    fn real_responses_reduce_to_ratio() {
        let meter = Meter::Grid(hermite_mixture(GridSpec::new(512, 24.0).unwrap(), &[(0.7, 0), (0.3, 1)]));
        let pair = fourier_pair(3).unwrap();
        let rho = random_density_matrix(3, 2, Purity::Mixed).unwrap();
        let corr = correlation_set(&rho, &pair, &meter, &meter, 0.6, 1.0).unwrap();
        assert!(corr.lambda.im.abs() < 1e-12 && corr.lambda_tilde.im.abs() < 1e-12);
        assert!((corr.lambda - corr.lambda_tilde).norm() > 1e-3);
        let rec = recover_w11(&corr, &pair).unwrap();
        let ratio = corr.lambda.re / corr.lambda_tilde.re;
        for mu in 0..3 {
            for k in 0..3 {
                assert!((rec.w11[(mu, k)].im - ratio * corr.y_tilde[mu][k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn real_state_and_real_overlaps_give_vanishing_s() {
        // Hadamard-type real basis in d = 4 and a real symmetric rho.
        let h = 0.5;
        let signs = [[1., 1., 1., 1.], [1., -1., 1., -1.], [1., 1., -1., -1.], [1., -1., -1., 1.]];
        let second = CMatrix::from_fn(4, 4, |r, col| c(h * signs[r][col], 0.0));
        let pair = BasisPair::new(OrthonormalBasis::standard(4), OrthonormalBasis::new(second).unwrap()).unwrap();
        let rho = random_density_matrix(4, 3, Purity::Mixed).unwrap();
        let real = rho.matrix().map(|z| c(z.re, 0.0));
        let rho = DensityMatrix::new(real).unwrap();
        let meter = skew();
        let corr = correlation_set(&rho, &pair, &meter, &meter, 0.5, 1.0).unwrap();
        let rec = recover_w11(&corr, &pair).unwrap();
        // brute force: s = Im sum_{k' != k} tr(rho P_k' P_mu P_k)
        for mu in 0..4 {
            for k in 0..4 {
                let mut brute = c(0.0, 0.0);
                for k2 in (0..4).filter(|&k2| k2 != k) {
                    brute += (rho.matrix() * pair.first().projector(k2) * pair.second().projector(mu) * pair.first().projector(k)).trace();
                }
                assert!(brute.im.abs() < 1e-14);
                assert_abs_diff_eq!(rec.s[(mu, k)], 0.0, epsilon = 1e-10);
                assert_abs_diff_eq!(rec.r[(mu, k)], brute.re, epsilon = 1e-10);
                // y follows from x alone: y = li r
                assert_abs_diff_eq!(rec.w11[(mu, k)].im, corr.lambda.im * brute.re, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_recovery_detected() {
        let pair = fourier_pair(2).unwrap();
        let corr = CorrelationSet {
            dim: 2,
            eps1: 1.0,
            eps2: 1.0,
            sigma_p1_sq: 1.0,
            lambda: c(0.5, 0.0),
            lambda_tilde: c(0.0, 0.5),
            x: vec![vec![0.25; 2]; 2],
            y_tilde: vec![vec![0.0; 2]; 2],
        };
        assert!(matches!(recover_w11(&corr, &pair), Err(Error::DegenerateRecovery { .. })));
    }

    #[test]
    fn basis_state_round_trip_is_exact() {
        let pair = fourier_pair(3).unwrap();
        let meter = Meter::gaussian(1.0).unwrap();
        let rho = DensityMatrix::basis_state(3, 1);
        let corr = correlation_set(&rho, &pair, &meter, &meter, 0.5, 1.0).unwrap();
        let rec = recover_w11(&corr, &pair).unwrap();
        let back = rho_from_w11(&rec.w11, &pair, corr.lambda).unwrap();
        assert!((back.matrix() - rho.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn mixed_d4_round_trip() {
        let pair = fourier_pair(4).unwrap();
        let rho = random_density_matrix(4, 21, Purity::Mixed).unwrap();
        let lambda = c((-0.125f64).exp(), 0.0);
        let response = ProjectorResponse::from_values(lambda, lambda, 1.0);
        let corr = correlation_set_with_response(rho.matrix(), &pair, &response, 0.5, 1.0).unwrap();
        let back = reconstruct(&corr, &pair).unwrap();
        assert!(trace_distance(&back, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn tilde_inversion_round_trip() {
        let pair = fourier_pair(3).unwrap();
        let meter = skew();
        let rho = random_density_matrix(3, 8, Purity::Mixed).unwrap();
        let eps1 = 0.8;
        let wt = CMatrix::from_fn(3, 3, |mu, k| w11_projector(&rho, &pair, k, mu, &meter, eps1, Variant::Tilde).unwrap());
        let back = rho_from_w11_tilde(&wt, &pair, meter.lambda_tilde(eps1).unwrap()).unwrap();
        assert!(trace_distance(&back, &rho).unwrap() < 1e-10);

        let g = Meter::gaussian(1.0).unwrap();
        let w = CMatrix::from_fn(3, 3, |mu, k| w11_projector(&rho, &pair, k, mu, &g, eps1, Variant::Plain).unwrap());
        let a = rho_from_w11(&w, &pair, g.lambda(eps1).unwrap()).unwrap();
        let b = rho_from_w11_tilde(&w, &pair, g.lambda_tilde(eps1).unwrap()).unwrap();
        assert!((a.matrix() - b.matrix()).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn strong_coupling_keeps_populations_only() {
        let pair = fourier_pair(3).unwrap();
        let rho = random_density_matrix(3, 13, Purity::Mixed).unwrap();
        let response = ProjectorResponse::from_values(c(0.0, 0.0), c(0.0, 0.0), 1.0);
        let corr = correlation_set_with_response(rho.matrix(), &pair, &response, 50.0, 1.0).unwrap();
        let rec = recover_w11(&corr, &pair).unwrap();
        assert!(rec.strong_coupling);
        match rho_from_w11(&rec.w11, &pair, corr.lambda) {
            Err(Error::StrongCouplingSingular { populations, .. }) => {
                for (k, &pop) in populations.iter().enumerate() {
                    let col: f64 = (0..3).map(|mu| corr.x[mu][k]).sum();
                    assert_abs_diff_eq!(pop, col, epsilon = 1e-15);
                    assert_abs_diff_eq!(pop, rho.matrix()[(k, k)].re, epsilon = 1e-12);
                }
            }
            other => panic!("expected StrongCouplingSingular, got {other:?}"),
        }
        let err = rho_from_w11_tilde(&rec.w11, &pair, c(1e-12, 0.0));
        assert!(matches!(err, Err(Error::StrongCouplingSingular { .. })));
    }

    #[test]
    fn inconsistent_trace_detected() {
        let pair = fourier_pair(2).unwrap();
        let w = CMatrix::from_element(2, 2, c(0.4, 0.0));
        assert!(matches!(rho_from_w11(&w, &pair, c(0.8, 0.0)), Err(Error::InconsistentTrace { .. })));
    }

    #[test]
    fn qubit_closed_form_examples() {
        let pure = qubit_reconstruct(0.5, 0.5, 0.0, 0.6, 0.6).unwrap();
        assert!((pure.matrix() - DensityMatrix::basis_state(2, 0).matrix()).iter().all(|z| z.norm() < 1e-15));
        let mixed = qubit_reconstruct(0.25, 0.25, 0.0, 0.3, 0.9).unwrap();
        assert!((mixed.matrix() - DensityMatrix::maximally_mixed(2).matrix()).iter().all(|z| z.norm() < 1e-15));
        assert!(matches!(qubit_reconstruct(0.5, 0.0, 0.0, 0.5, 0.5), Err(Error::NotPhysical { .. })));
        assert!(qubit_reconstruct(0.3, 0.2, 0.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn qubit_forward_of_ground_state() {
        let pair = fourier_pair(2).unwrap();
        let meter = Meter::gaussian(1.0).unwrap();
        let corr = correlation_set(&DensityMatrix::basis_state(2, 0), &pair, &meter, &meter, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(corr.x[0][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(corr.x[1][0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(corr.y_tilde[1][0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn independence_ranks() {
        let meter = Meter::gaussian(1.0).unwrap();
        for (d, want) in [(2, 3), (3, 8)] {
            let pair = fourier_pair(d).unwrap();
            let corr = correlation_set(&DensityMatrix::maximally_mixed(d), &pair, &meter, &meter, 0.7, 1.0).unwrap();
            let report = independence_report(&corr, &pair).unwrap();
            assert_eq!(report.rank, want);
            assert_eq!(report.independent_subset.len(), want);
        }
        let pair = fourier_pair(3).unwrap();
        let response = ProjectorResponse::from_values(c(0.0, 0.0), c(0.0, 0.0), 1.0);
        let corr = correlation_set_with_response(DensityMatrix::maximally_mixed(3).matrix(), &pair, &response, 1.0, 1.0).unwrap();
        assert_eq!(independence_report(&corr, &pair).unwrap().rank, 2);
    }

    #[test]
    fn zero_noise_matches_noiseless() {
        let pair = fourier_pair(3).unwrap();
        let meter = Meter::gaussian(1.0).unwrap();
        let rho = random_density_matrix(3, 5, Purity::Pure).unwrap();
        let corr = correlation_set(&rho, &pair, &meter, &meter, 0.5, 1.0).unwrap();
        let (noisy, report) = noisy_reconstruct(&corr, &pair, 0.0, 1).unwrap();
        assert!(report.trace_distance_to_noiseless < 1e-12);
        assert!(trace_distance(&noisy, &rho).unwrap() < 1e-10);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let pair = fourier_pair(2).unwrap();
        let meter = Meter::gaussian(1.0).unwrap();
        let rho = random_density_matrix(2, 5, Purity::Mixed).unwrap();
        let corr = correlation_set(&rho, &pair, &meter, &meter, 0.5, 1.0).unwrap();
        let a = perturb_correlations(&corr, 1e-3, 9).unwrap();
        let b = perturb_correlations(&corr, 1e-3, 9).unwrap();
        let other = perturb_correlations(&corr, 1e-3, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert_ne!(a.x[0][0] - corr.x[0][0], a.x[0][1] - corr.x[0][1]);
        assert!(perturb_correlations(&corr, -1.0, 0).is_err());
    }

    #[test]
    fn projection_clips_negative_part() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.1, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.1, 0.0)]);
        let (rho, info) = project_physical(&m).unwrap();
        assert_eq!(info.clipped_eigenvalues, 1);
        assert_abs_diff_eq!(info.min_eigenvalue_before, -0.1, epsilon = 1e-14);
        assert!((rho.matrix() - DensityMatrix::basis_state(2, 0).matrix()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn report_json_shape() {
        let rho = DensityMatrix::maximally_mixed(2);
        let r = ReconstructionReport::new(rho.clone(), None, vec![]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert!(v["trace_distance_to_reference"].is_null());
        assert_eq!(v["rho"]["dim"], 2);
        let r = ReconstructionReport::new(rho.clone(), Some(&rho), vec!["x".into()]).unwrap();
        assert_eq!(r.trace_distance_to_reference, Some(0.0));
    }
}
