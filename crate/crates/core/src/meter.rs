//! Pointer-state models and their response functions.
//!
//! For a meter state `rho_M` (with `hbar = 1`):
//!
//! * `g(beta)  = <exp(-i beta P)>`
//! * `h(beta)  = (1/beta) <exp(-i beta P/2) Q exp(-i beta P/2)>`
//! * `lambda(beta) = g(beta) + 2 h(beta)`
//! * `lambda_bar(beta) = g'(beta) / beta`, `lambda_tilde = lambda_bar(beta) / lambda_bar(0)`
//!
//! `lambda` weights the position-position meter correlation and
//! `lambda_tilde` the momentum-position one. Both equal 1 at `beta = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{sinc, GridSpec, Transform};

/// Tolerance on the zero-mean and zero-current conditions.
pub const VALIDITY_TOL: f64 = 1e-8;
/// Tolerance on wavefunction normalization and mixture weights.
pub const NORM_TOL: f64 = 1e-10;
/// Default grid extent in units of the position spread.
pub const DEFAULT_EXTENT_SIGMAS: f64 = 20.0;
pub const DEFAULT_N1: usize = 1024;
pub const DEFAULT_N2: usize = 256;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Minimum-uncertainty Gaussian pointer with closed-form responses
/// `g = lambda = lambda_tilde = exp(-beta^2 sigma_p^2 / 2)`, `h = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeter {
    sigma_p: f64,
}

impl GaussianMeter {
    pub fn new(sigma_p: f64) -> Result<Self> {
        if !(sigma_p.is_finite() && sigma_p > 0.0) {
            return Err(Error::Config(format!("sigma_p must be positive, got {sigma_p}")));
        }
        Ok(Self { sigma_p })
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn sigma_q(&self) -> f64 {
        0.5 / self.sigma_p
    }

    /// Grid of `n_points` spanning [`DEFAULT_EXTENT_SIGMAS`] position widths.
    pub fn default_grid(&self, n_points: usize) -> Result<GridSpec> {
        GridSpec::new(n_points, DEFAULT_EXTENT_SIGMAS * self.sigma_q())
    }

    /// Sample the ground-state wavefunction on `grid` (renormalized there).
    pub fn discretize(&self, grid: GridSpec) -> Result<GridMeter> {
        let sq = self.sigma_q();
        let psi: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|&x| Complex64::new((-x * x / (4.0 * sq * sq)).exp(), 0.0))
            .collect();
        GridMeter::normalized(grid, vec![(1.0, psi)])
    }

    fn g(&self, beta: f64) -> Complex64 {
        Complex64::new((-0.5 * beta * beta * self.sigma_p * self.sigma_p).exp(), 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeterComponent {
    pub weight: f64,
    pub psi: Vec<Complex64>,
}

/// Mixture of pure pointer wavefunctions sampled on a periodic grid.
#[derive(Debug, Clone)]
pub struct GridMeter {
    grid: GridSpec,
    components: Vec<MeterComponent>,
    positions: Vec<f64>,
    momenta: Vec<f64>,
    /// Per-component DFT of `psi`.
    spectra: Vec<Vec<Complex64>>,
    /// Mixture momentum distribution, sums to 1.
    momentum_probs: Vec<f64>,
    report: ValidityReport,
}

impl PartialEq for GridMeter {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid && self.components == other.components
    }
}

impl GridMeter {
    /// Components must be normalized (`sum |psi|^2 dx = 1`) with positive
    /// weights summing to 1.
    pub fn new(grid: GridSpec, components: Vec<(f64, Vec<Complex64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("grid meter needs at least one component".into()));
        }
        let dx = grid.dx();
        let mut total = 0.0;
        for (i, (w, psi)) in components.iter().enumerate() {
            if psi.len() != grid.n_points {
                return Err(Error::DimensionMismatch {
                    expected: grid.n_points,
                    found: psi.len(),
                });
            }
            if w.is_nan() || *w <= 0.0 {
                return Err(Error::Config(format!("component {i} has weight {w} <= 0")));
            }
            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Config(format!(
                    "component {i} has norm {norm}, expected 1"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Config(format!("weights sum to {total}, expected 1")));
        }

        let transform = Transform::new(grid.n_points);
        let spectra: Vec<Vec<Complex64>> = components
            .iter()
            .map(|(_, psi)| {
                let mut buf = psi.clone();
                transform.forward(&mut buf);
                buf
            })
            .collect();
        // Parseval: sum |psi_hat|^2 = n sum |psi|^2
        let scale = dx / grid.n_points as f64;
        let mut momentum_probs = vec![0.0; grid.n_points];
        for ((w, _), spec) in components.iter().zip(&spectra) {
            for (acc, z) in momentum_probs.iter_mut().zip(spec) {
                *acc += w * z.norm_sqr() * scale;
            }
        }
        let components: Vec<MeterComponent> = components
            .into_iter()
            .map(|(weight, psi)| MeterComponent { weight, psi })
            .collect();
        let mut meter = Self {
            positions: grid.positions(),
            momenta: grid.momenta(),
            grid,
            components,
            spectra,
            momentum_probs,
            report: ValidityReport::default(),
        };
        meter.report = meter.compute_report(&transform);
        Ok(meter)
    }

    /// Normalizes every wavefunction and the weights before construction.
    pub fn normalized(grid: GridSpec, components: Vec<(f64, Vec<Complex64>)>) -> Result<Self> {
        let dx = grid.dx();
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        let components = components
            .into_iter()
            .map(|(w, psi)| {
                let norm = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
                (w / total, psi.into_iter().map(|z| z / norm).collect())
            })
            .collect();
        Self::new(grid, components)
    }

    /// Builds each component from a momentum-space amplitude `phi(p_k)`
    /// given in DFT frequency order.
    pub fn from_momentum_amplitudes(
        grid: GridSpec,
        components: Vec<(f64, Vec<Complex64>)>,
    ) -> Result<Self> {
        let transform = Transform::new(grid.n_points);
        let momenta = grid.momenta();
        let components = components
            .into_iter()
            .map(|(w, mut phi)| {
                // place the origin of x at the grid centre
                for (z, &p) in phi.iter_mut().zip(&momenta) {
                    *z *= Complex64::from_polar(1.0, -0.5 * p * grid.extent);
                }
                transform.inverse(&mut phi);
                (w, phi)
            })
            .collect();
        Self::normalized(grid, components)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn components(&self) -> &[MeterComponent] {
        &self.components
    }

    pub fn report(&self) -> &ValidityReport {
        &self.report
    }

    pub fn momentum_probabilities(&self) -> &[f64] {
        &self.momentum_probs
    }

    /// `<P^n>` of the mixture.
    pub fn momentum_moment(&self, n: i32) -> f64 {
        self.momentum_probs
            .iter()
            .zip(&self.momenta)
            .map(|(w, p)| w * p.powi(n))
            .sum()
    }

    fn compute_report(&self, transform: &Transform) -> ValidityReport {
        let dx = self.grid.dx();
        let mut mean_q = 0.0;
        let mut mean_q_sq = 0.0;
        let mut qp_sym = 0.0;
        let mut definite_parity = true;
        for (comp, spec) in self.components.iter().zip(&self.spectra) {
            let w = comp.weight;
            for (z, &x) in comp.psi.iter().zip(&self.positions) {
                mean_q += w * x * z.norm_sqr() * dx;
                mean_q_sq += w * x * x * z.norm_sqr() * dx;
            }
            let mut p_psi = spec.clone();
            for (z, &p) in p_psi.iter_mut().zip(&self.momenta) {
                *z *= p;
            }
            transform.inverse(&mut p_psi);
            let qp: Complex64 = comp
                .psi
                .iter()
                .zip(&p_psi)
                .zip(&self.positions)
                .map(|((a, b), &x)| a.conj() * b * x)
                .sum::<Complex64>()
                * dx;
            // <QP + PQ> = 2 Re <QP>
            qp_sym += w * 2.0 * qp.re;
            definite_parity &= has_definite_parity(&comp.psi);
        }
        let mean_p = self.momentum_moment(1);
        let sigma_p_sq = self.momentum_moment(2);
        ValidityReport::assemble(
            mean_q,
            mean_p,
            qp_sym,
            sigma_p_sq,
            mean_q_sq - mean_q * mean_q,
            definite_parity,
        )
    }

    fn g(&self, beta: f64) -> Complex64 {
        self.momentum_probs
            .iter()
            .zip(&self.momenta)
            .map(|(w, &p)| Complex64::from_polar(*w, -beta * p))
            .sum()
    }

    /// `h(beta) = <Q> / beta + <Q (exp(-i beta P) - 1)> / beta - g(beta) / 2`,
    /// with `(exp(-i beta p) - 1) / beta = -i p exp(-i beta p / 2) sinc(beta p / 2)`
    /// evaluated spectrally so that small `beta` carries no cancellation.
    fn h(&self, beta: f64) -> Complex64 {
        if beta == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let transform = Transform::new(self.grid.n_points);
        let dx = self.grid.dx();
        let mut acc = Complex64::new(0.0, 0.0);
        for (comp, spec) in self.components.iter().zip(&self.spectra) {
            let mut phi = spec.clone();
            for (z, &p) in phi.iter_mut().zip(&self.momenta) {
                *z *= -I * p * Complex64::from_polar(sinc(0.5 * beta * p), -0.5 * beta * p);
            }
            transform.inverse(&mut phi);
            let q_delta: Complex64 = comp
                .psi
                .iter()
                .zip(&phi)
                .zip(&self.positions)
                .map(|((a, b), &x)| a.conj() * b * x)
                .sum::<Complex64>()
                * dx;
            acc += q_delta * comp.weight;
        }
        acc + self.report.mean_q / beta - 0.5 * self.g(beta)
    }

    /// `lambda_bar(beta) = g'(beta) / beta`
    /// `= -sum_k w_k p_k^2 exp(-i beta p_k / 2) sinc(beta p_k / 2) - i <P> / beta`.
    fn lambda_bar(&self, beta: f64) -> Complex64 {
        let core: Complex64 = self
            .momentum_probs
            .iter()
            .zip(&self.momenta)
            .map(|(w, &p)| Complex64::from_polar(-w * p * p * sinc(0.5 * beta * p), -0.5 * beta * p))
            .sum();
        if beta == 0.0 {
            core
        } else {
            core - I * self.report.mean_p / beta
        }
    }
}

fn has_definite_parity(psi: &[Complex64]) -> bool {
    let n = psi.len();
    let scale = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(1e-300);
    let real = psi.iter().all(|z| z.im.abs() <= tol);
    let mirror = |j: usize| psi[(n - j) % n];
    let even = (0..n).all(|j| (psi[j] - mirror(j)).norm() <= tol);
    let odd = (0..n).all(|j| (psi[j] + mirror(j)).norm() <= tol);
    real && (even || odd)
}

/// Moments relevant to the meter validity conditions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub mean_q: f64,
    pub mean_p: f64,
    /// `<QP + PQ>`
    pub qp_symmetrized: f64,
    pub sigma_p_sq: f64,
    pub sigma_q_sq: f64,
    /// Every component is real with definite parity, so `lambda` and
    /// `lambda_tilde` are real.
    pub real_lambda_mode: bool,
    pub failures: Vec<String>,
}

impl ValidityReport {
    fn assemble(
        mean_q: f64,
        mean_p: f64,
        qp_symmetrized: f64,
        sigma_p_sq: f64,
        sigma_q_sq: f64,
        real_lambda_mode: bool,
    ) -> Self {
        let mut failures = Vec::new();
        if mean_q.abs() > VALIDITY_TOL {
            failures.push(format!("<Q> = {mean_q:e}"));
        }
        if mean_p.abs() > VALIDITY_TOL {
            failures.push(format!("<P> = {mean_p:e}"));
        }
        if qp_symmetrized.abs() > VALIDITY_TOL {
            failures.push(format!("<QP+PQ> = {qp_symmetrized:e}"));
        }
        Self {
            mean_q,
            mean_p,
            qp_symmetrized,
            sigma_p_sq,
            sigma_q_sq,
            real_lambda_mode,
            failures,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// All response functions at one `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterResponse {
    pub beta: f64,
    pub g: Complex64,
    pub h: Complex64,
    pub lambda: Complex64,
    pub lambda_tilde: Complex64,
    pub sigma_p_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeterConfig", into = "MeterConfig")]
pub enum Meter {
    Gaussian(GaussianMeter),
    Grid(GridMeter),
}

impl Meter {
    pub fn gaussian(sigma_p: f64) -> Result<Self> {
        Ok(Self::Gaussian(GaussianMeter::new(sigma_p)?))
    }

    pub fn validate(&self) -> ValidityReport {
        match self {
            Meter::Gaussian(m) => ValidityReport::assemble(
                0.0,
                0.0,
                0.0,
                m.sigma_p * m.sigma_p,
                m.sigma_q() * m.sigma_q(),
                true,
            ),
            Meter::Grid(m) => m.report.clone(),
        }
    }

    fn ensure_valid(&self) -> Result<()> {
        if let Meter::Grid(m) = self {
            if !m.report.passed() {
                return Err(Error::InvalidMeter(m.report.failures.join(", ")));
            }
        }
        Ok(())
    }

    /// Second moment of the momentum, `<P^2>`.
    pub fn sigma_p_sq(&self) -> f64 {
        match self {
            Meter::Gaussian(m) => m.sigma_p * m.sigma_p,
            Meter::Grid(m) => m.report.sigma_p_sq,
        }
    }

    pub fn g(&self, beta: f64) -> Result<Complex64> {
        self.ensure_valid()?;
        Ok(match self {
            Meter::Gaussian(m) => m.g(beta),
            Meter::Grid(m) => m.g(beta),
        })
    }

    pub fn h(&self, beta: f64) -> Result<Complex64> {
        self.ensure_valid()?;
        Ok(match self {
            Meter::Gaussian(_) => Complex64::new(0.0, 0.0),
            Meter::Grid(m) => m.h(beta),
        })
    }

    pub fn lambda(&self, beta: f64) -> Result<Complex64> {
        Ok(self.g(beta)? + 2.0 * self.h(beta)?)
    }

    pub fn lambda_tilde(&self, beta: f64) -> Result<Complex64> {
        self.ensure_valid()?;
        match self {
            Meter::Gaussian(m) => Ok(m.g(beta)),
            Meter::Grid(m) => {
                let at_zero = m.lambda_bar(0.0);
                if at_zero.norm() == 0.0 {
                    return Err(Error::ZeroMomentumSpread);
                }
                Ok(m.lambda_bar(beta) / at_zero)
            }
        }
    }

    pub fn response(&self, beta: f64) -> Result<MeterResponse> {
        let g = self.g(beta)?;
        let h = self.h(beta)?;
        Ok(MeterResponse {
            beta,
            g,
            h,
            lambda: g + 2.0 * h,
            lambda_tilde: self.lambda_tilde(beta)?,
            sigma_p_sq: self.sigma_p_sq(),
        })
    }

    /// The meter sampled on a grid: Gaussian meters are discretized on
    /// `n_points` spanning [`DEFAULT_EXTENT_SIGMAS`] widths, grid meters are
    /// returned as they are.
    pub fn to_grid(&self, n_points: usize) -> Result<GridMeter> {
        match self {
            Meter::Gaussian(m) => m.discretize(m.default_grid(n_points)?),
            Meter::Grid(m) => Ok(m.clone()),
        }
    }
}

/// `psi` entries are plain numbers for real wavefunctions or `[re, im]` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Amplitude> for Complex64 {
    fn from(a: Amplitude) -> Self {
        match a {
            Amplitude::Real(re) => Complex64::new(re, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentConfig {
    pub weight: f64,
    pub psi: Vec<Amplitude>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MeterConfig {
    Gaussian {
        sigma_p: f64,
    },
    Grid {
        n_points: usize,
        extent: f64,
        components: Vec<ComponentConfig>,
    },
}

impl TryFrom<MeterConfig> for Meter {
    type Error = Error;

    fn try_from(config: MeterConfig) -> Result<Self> {
        match config {
            MeterConfig::Gaussian { sigma_p } => Meter::gaussian(sigma_p),
            MeterConfig::Grid {
                n_points,
                extent,
                components,
            } => {
                let grid = GridSpec::new(n_points, extent)?;
                let comps = components
                    .into_iter()
                    .map(|c| (c.weight, c.psi.into_iter().map(Complex64::from).collect()))
                    .collect();
                Ok(Meter::Grid(GridMeter::new(grid, comps)?))
            }
        }
    }
}

impl From<Meter> for MeterConfig {
    fn from(meter: Meter) -> Self {
        match meter {
            Meter::Gaussian(m) => MeterConfig::Gaussian { sigma_p: m.sigma_p },
            Meter::Grid(m) => MeterConfig::Grid {
                n_points: m.grid.n_points,
                extent: m.grid.extent,
                components: m
                    .components
                    .into_iter()
                    .map(|c| {
                        let real = c.psi.iter().all(|z| z.im == 0.0);
                        let psi = c
                            .psi
                            .into_iter()
                            .map(|z| {
                                if real {
                                    Amplitude::Real(z.re)
                                } else {
                                    Amplitude::Complex([z.re, z.im])
                                }
                            })
                            .collect();
                        ComponentConfig {
                            weight: c.weight,
                            psi,
                        }
                    })
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Pointer states shared by unit tests across modules.
    use super::*;

    pub fn hermite_mixture(grid: GridSpec, weights: &[(f64, u32)]) -> GridMeter {
        let x = grid.positions();
        let comps = weights
            .iter()
            .map(|&(w, n)| {
                let psi = x
                    .iter()
                    .map(|&x| {
                        let poly = match n {
                            0 => 1.0,
                            1 => x,
                            2 => 2.0 * x * x - 1.0,
                            3 => x * x * x - 1.5 * x,
                            _ => unimplemented!(),
                        };
                        Complex64::new(poly * (-0.5 * x * x).exp(), 0.0)
                    })
                    .collect();
                (w, psi)
            })
            .collect();
        GridMeter::normalized(grid, comps).unwrap()
    }

    /// Real, non-negative momentum amplitude with a skewed, zero-mean
    /// distribution: `<P> = 0`, `<QP+PQ> = 0`, `<P^3> != 0`.
    /// Skewed momentum density `0.7 N(-0.3, 0.5) + 0.3 N(0.7, 0.8)` (zero
    /// mean, `<P^3> != 0`) with phase `theta(p)`, where `theta'` is the
    /// quadratic orthogonal to `1` and `p` under the density. That keeps
    /// `<Q> = 0` and `<QP + PQ> = 0` while making `h` nonzero.
    pub fn skewed_meter(grid: GridSpec) -> GridMeter {
        let density = |p: f64| {
            let a = 0.7 * (-(p + 0.3) * (p + 0.3) / (2.0 * 0.5 * 0.5)).exp() / 0.5;
            let b = 0.3 * (-(p - 0.7) * (p - 0.7) / (2.0 * 0.8 * 0.8)).exp() / 0.8;
            a + b
        };
        let momenta = grid.momenta();
        let total: f64 = momenta.iter().map(|&p| density(p)).sum();
        let moment = |n: i32| momenta.iter().map(|&p| density(p) * p.powi(n)).sum::<f64>() / total;
        let (m1, m2, m3) = (moment(1), moment(2), moment(3));
        let alpha = (m3 - m1 * m2) / (m2 - m1 * m1);
        let beta = m2 - alpha * m1;
        let c = 0.4;
        let theta = |p: f64| c * (p * p * p / 3.0 - 0.5 * alpha * p * p - beta * p);
        let phi = momenta
            .iter()
            .map(|&p| Complex64::from_polar(density(p).sqrt(), theta(p)))
            .collect();
        GridMeter::from_momentum_amplitudes(grid, vec![(1.0, phi)]).unwrap()
    }
}
