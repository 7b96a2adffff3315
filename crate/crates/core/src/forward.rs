//! Analytic forward model of two successive von Neumann measurements.
//!
//! For `A = sum_n a_n P_n` measured first (coupling `eps1`) and
//! `B = sum_m b_m P_m` second,
//!
//! ```text
//! W[m][n] = sum_n' lambda(eps1 (a_n - a_n')) tr(rho P_n' P_m P_n)
//! <Q1 Q2> = eps1 eps2 Re sum_nm a_n b_m W[m][n]
//! <P1 Q2> = eps1 eps2 2 sigma_P1^2 Im sum_nm a_n b_m W~[m][n]
//! ```
//!
//! where `W~` uses `lambda_tilde` in place of `lambda`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{BasisPair, CMatrix, DensityMatrix, ObservableSpectral};
use crate::meter::Meter;
use crate::serde_complex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// weighted by `lambda`
    Plain,
    /// weighted by `lambda_tilde`
    Tilde,
}

/// System state, the two observables and the two meters.
#[derive(Debug, Clone, Copy)]
pub struct SuccessiveSetup<'a> {
    pub rho: &'a DensityMatrix,
    pub first: &'a ObservableSpectral,
    pub second: &'a ObservableSpectral,
    pub meter1: &'a Meter,
    pub meter2: &'a Meter,
    pub eps1: f64,
    pub eps2: f64,
}

impl SuccessiveSetup<'_> {
    fn check(&self) -> Result<()> {
        let d = self.rho.dim();
        for found in [self.first.dim(), self.second.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        for meter in [self.meter1, self.meter2] {
            let report = meter.validate();
            if !report.passed() {
                return Err(Error::InvalidMeter(report.failures.join(", ")));
            }
        }
        Ok(())
    }
}

/// `values[(m, n)]`, rows indexed by the second observable's eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct WTable {
    pub values: CMatrix,
    pub variant: Variant,
    pub eps1: f64,
}

impl WTable {
    pub fn total(&self) -> Complex64 {
        self.values.iter().sum()
    }

    /// `sum_nm a_n b_m W[m][n]`
    pub fn weighted_sum(&self, first: &ObservableSpectral, second: &ObservableSpectral) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, b) in second.eigenvalues().iter().enumerate() {
            for (n, a) in first.eigenvalues().iter().enumerate() {
                acc += self.values[(m, n)] * (a * b);
            }
        }
        acc
    }
}

/// Shared core of every W evaluation: `rho` may be any operator (the map
/// is linear), `response(beta)` supplies `lambda` or `lambda_tilde`.
pub(crate) fn w_table_raw(
    rho: &CMatrix,
    first: &ObservableSpectral,
    second: &ObservableSpectral,
    eps1: f64,
    mut response: impl FnMut(f64) -> Result<Complex64>,
) -> Result<CMatrix> {
    let a = first.eigenvalues();
    let pa = first.projectors();
    let pb = second.projectors();
    // tr(rho P_n' P_m P_n) = tr((P_n rho P_n') P_m)
    let mut values = CMatrix::zeros(pb.len(), pa.len());
    for (n, p_n) in pa.iter().enumerate() {
        for (n2, p_n2) in pa.iter().enumerate() {
            let weight = response(eps1 * (a[n] - a[n2]))?;
            let sandwich = p_n * rho * p_n2;
            for (m, p_m) in pb.iter().enumerate() {
                let tr = sandwich.component_mul(&p_m.transpose()).sum();
                values[(m, n)] += weight * tr;
            }
        }
    }
    Ok(values)
}

fn response_fn(meter: &Meter, variant: Variant) -> impl FnMut(f64) -> Result<Complex64> + '_ {
    move |beta| match variant {
        Variant::Plain => meter.lambda(beta),
        Variant::Tilde => meter.lambda_tilde(beta),
    }
}

pub fn w_general(setup: &SuccessiveSetup, variant: Variant) -> Result<WTable> {
    setup.check()?;
    let values = w_table_raw(
        setup.rho.matrix(),
        setup.first,
        setup.second,
        setup.eps1,
        response_fn(setup.meter1, variant),
    )?;
    Ok(WTable {
        values,
        variant,
        eps1: setup.eps1,
    })
}

/// `<Q1 Q2>` of the two meters after both interactions.
pub fn corr_qq(setup: &SuccessiveSetup) -> Result<f64> {
    let w = w_general(setup, Variant::Plain)?;
    Ok(setup.eps1 * setup.eps2 * w.weighted_sum(setup.first, setup.second).re)
}

/// `<P1 Q2>` of the two meters after both interactions.
pub fn corr_pq(setup: &SuccessiveSetup) -> Result<f64> {
    let w = w_general(setup, Variant::Tilde)?;
    let sigma_sq = setup.meter1.sigma_p_sq();
    Ok(setup.eps1 * setup.eps2 * 2.0 * sigma_sq * w.weighted_sum(setup.first, setup.second).im)
}

/// First-meter response at `beta in {0, eps1}`: everything the projector
/// scheme needs from the meter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectorResponse {
    pub lambda: Complex64,
    pub lambda_tilde: Complex64,
    /// `lambda(-eps1)`
    pub lambda_neg: Complex64,
    /// `lambda_tilde(-eps1)`
    pub lambda_tilde_neg: Complex64,
    pub sigma_p1_sq: f64,
}

impl ProjectorResponse {
    pub fn from_meter(meter: &Meter, eps1: f64) -> Result<Self> {
        Ok(Self {
            lambda: meter.lambda(eps1)?,
            lambda_tilde: meter.lambda_tilde(eps1)?,
            lambda_neg: meter.lambda(-eps1)?,
            lambda_tilde_neg: meter.lambda_tilde(-eps1)?,
            sigma_p1_sq: meter.sigma_p_sq(),
        })
    }

    /// Response with `lambda(-b) = conj(lambda(b))`, as for any valid meter.
    pub fn from_values(lambda: Complex64, lambda_tilde: Complex64, sigma_p1_sq: f64) -> Self {
        Self {
            lambda,
            lambda_tilde,
            lambda_neg: lambda.conj(),
            lambda_tilde_neg: lambda_tilde.conj(),
            sigma_p1_sq,
        }
    }

    fn lookup(&self, variant: Variant, eps1: f64) -> impl FnMut(f64) -> Result<Complex64> + '_ {
        move |beta| {
            let (pos, neg) = match variant {
                Variant::Plain => (self.lambda, self.lambda_neg),
                Variant::Tilde => (self.lambda_tilde, self.lambda_tilde_neg),
            };
            if beta == 0.0 {
                Ok(Complex64::new(1.0, 0.0))
            } else if beta == eps1 {
                Ok(pos)
            } else if beta == -eps1 {
                Ok(neg)
            } else {
                Err(Error::InvalidObservable(format!(
                    "projector scheme only produces beta in {{0, +-{eps1}}}, got {beta}"
                )))
            }
        }
    }
}

pub(crate) fn w11_raw(
    rho: &CMatrix,
    pair: &BasisPair,
    k: usize,
    mu: usize,
    eps1: f64,
    response: &ProjectorResponse,
    variant: Variant,
) -> Result<Complex64> {
    let first = ObservableSpectral::rank_one_projector(&pair.first().vector(k));
    let second = ObservableSpectral::rank_one_projector(&pair.second().vector(mu));
    let table = w_table_raw(rho, &first, &second, eps1, response.lookup(variant, eps1))?;
    // (sigma = 1, tau = 1)
    Ok(table[(1, 1)])
}

/// `W11` (or `W~11`) for the rank-one projectors `|k><k|` then `|mu><mu|`.
pub fn w11_projector(
    rho: &DensityMatrix,
    pair: &BasisPair,
    k: usize,
    mu: usize,
    meter1: &Meter,
    eps1: f64,
    variant: Variant,
) -> Result<Complex64> {
    check_pair_dim(rho, pair)?;
    let response = ProjectorResponse::from_meter(meter1, eps1)?;
    w11_raw(rho.matrix(), pair, k, mu, eps1, &response, variant)
}

fn check_pair_dim(rho: &DensityMatrix, pair: &BasisPair) -> Result<()> {
    if rho.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// The `2 d^2` normalized meter correlations of the projector scheme,
/// `x[mu][k] = <Q1 Q2> / (eps1 eps2)` and
/// `y_tilde[mu][k] = <P1 Q2> / (2 sigma_P1^2 eps1 eps2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub dim: usize,
    pub eps1: f64,
    pub eps2: f64,
    pub sigma_p1_sq: f64,
    #[serde(with = "serde_complex")]
    pub lambda: Complex64,
    #[serde(with = "serde_complex")]
    pub lambda_tilde: Complex64,
    pub x: Vec<Vec<f64>>,
    pub y_tilde: Vec<Vec<f64>>,
}

impl CorrelationSet {
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let shape_ok = |t: &Vec<Vec<f64>>| t.len() == d && t.iter().all(|r| r.len() == d);
        if !shape_ok(&self.x) || !shape_ok(&self.y_tilde) {
            return Err(Error::Config(format!("correlation tables must be {d}x{d}")));
        }
        if self.sigma_p1_sq.is_nan() || self.sigma_p1_sq <= 0.0 {
            return Err(Error::ZeroMomentumSpread);
        }
        Ok(())
    }

    /// Raw `<Q1 Q2>` for the pair `(k, mu)`.
    pub fn qq(&self, mu: usize, k: usize) -> f64 {
        self.eps1 * self.eps2 * self.x[mu][k]
    }

    /// Raw `<P1 Q2>` for the pair `(k, mu)`.
    pub fn pq(&self, mu: usize, k: usize) -> f64 {
        self.eps1 * self.eps2 * 2.0 * self.sigma_p1_sq * self.y_tilde[mu][k]
    }
}

/// Forward simulation of every `(k, mu)` pair.
///
/// Depends on `meter2` only through its validity: the second meter's state
/// and `eps2` drop out of the normalized correlations.
pub fn correlation_set(
    rho: &DensityMatrix,
    pair: &BasisPair,
    meter1: &Meter,
    meter2: &Meter,
    eps1: f64,
    eps2: f64,
) -> Result<CorrelationSet> {
    let report = meter2.validate();
    if !report.passed() {
        return Err(Error::InvalidMeter(report.failures.join(", ")));
    }
    let response = ProjectorResponse::from_meter(meter1, eps1)?;
    correlation_set_with_response(rho.matrix(), pair, &response, eps1, eps2)
}

/// [`correlation_set`] for a given first-meter response; `rho` may be any
/// operator of matching dimension.
pub fn correlation_set_with_response(
    rho: &CMatrix,
    pair: &BasisPair,
    response: &ProjectorResponse,
    eps1: f64,
    eps2: f64,
) -> Result<CorrelationSet> {
    let d = pair.dim();
    if rho.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.nrows(),
        });
    }
    if !(eps1 > 0.0 && eps2 > 0.0) {
        return Err(Error::Config(format!(
            "couplings must be positive, got eps1 = {eps1}, eps2 = {eps2}"
        )));
    }
    let mut x = vec![vec![0.0; d]; d];
    let mut y_tilde = vec![vec![0.0; d]; d];
    for mu in 0..d {
        for k in 0..d {
            x[mu][k] = w11_raw(rho, pair, k, mu, eps1, response, Variant::Plain)?.re;
            y_tilde[mu][k] = w11_raw(rho, pair, k, mu, eps1, response, Variant::Tilde)?.im;
        }
    }
    Ok(CorrelationSet {
        dim: d,
        eps1,
        eps2,
        sigma_p1_sq: response.sigma_p1_sq,
        lambda: response.lambda,
        lambda_tilde: response.lambda_tilde,
        x,
        y_tilde,
    })
}
