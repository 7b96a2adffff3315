//! JSON experiment description and its validation.

use std::path::PathBuf;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    fourier_pair, hermiticity_error, random_density_matrix, BasisPair, CMatrix, DensityMatrix, MatrixJson,
    ObservableSpectral, OrthonormalBasis, Purity,
};
use crate::meter::Meter;
use crate::oracle::OracleGrid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BasisPairConfig {
    Fourier,
    /// Basis vectors are the columns of each matrix.
    Explicit { first: MatrixJson, second: MatrixJson },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateConfig {
    /// `seed` falls back to the experiment seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
        purity: Purity,
    },
    Explicit { rho: MatrixJson },
}

/// Start times and durations of the two impulsive couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionConfig {
    pub t1: f64,
    pub t2: f64,
    pub width1: f64,
    pub width2: f64,
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.t1, self.t2, self.width1, self.width2];
        if vals.iter().any(|v| !v.is_finite()) || self.width1 <= 0.0 || self.width2 <= 0.0 {
            return Err(Error::Config("interaction times must be finite with positive widths".into()));
        }
        if self.t1 + 0.5 * self.width1 >= self.t2 - 0.5 * self.width2 {
            return Err(Error::Config(format!(
                "interaction windows overlap: [{}, {}] and [{}, {}]; the first coupling must end before the second starts",
                self.t1 - 0.5 * self.width1,
                self.t1 + 0.5 * self.width1,
                self.t2 - 0.5 * self.width2,
                self.t2 + 0.5 * self.width2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eps1,
    NoiseSigma,
    SigmaP,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eps1 => "eps1",
            SweepParameter::NoiseSigma => "noise_sigma",
            SweepParameter::SigmaP => "sigma_p",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// Observables for the oracle comparison (Hermitian, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservablesConfig {
    pub first: MatrixJson,
    pub second: MatrixJson,
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_basis_pair() -> BasisPairConfig {
    BasisPairConfig::Fourier
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    #[serde(default = "default_basis_pair")]
    pub basis_pair: BasisPairConfig,
    pub state: StateConfig,
    pub meter1: Meter,
    pub meter2: Meter,
    pub eps1: f64,
    pub eps2: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub interaction: Option<InteractionConfig>,
    #[serde(default)]
    pub grid: Option<OracleGrid>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub observables: Option<ObservablesConfig>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Qubit, Fourier pair, random mixed state, Gaussian meters with unit
    /// momentum spread, `eps1 = 0.5`, `eps2 = 1`.
    pub fn default_qubit() -> Self {
        Self {
            dim: 2,
            basis_pair: BasisPairConfig::Fourier,
            state: StateConfig::Random {
                seed: None,
                purity: Purity::Mixed,
            },
            meter1: Meter::gaussian(1.0).expect("positive spread"),
            meter2: Meter::gaussian(1.0).expect("positive spread"),
            eps1: 0.5,
            eps2: 1.0,
            noise_sigma: 0.0,
            trials: 1,
            output_dir: default_output_dir(),
            seed: 0,
            interaction: None,
            grid: None,
            sweep: None,
            observables: None,
        }
    }

    /// Check every precondition and build the in-memory objects.
    pub fn validate(&self) -> Result<Experiment> {
        let d = self.dim;
        if d < 2 {
            return Err(Error::Config(format!("dim must be >= 2, got {d}")));
        }
        for (name, eps) in [("eps1", self.eps1), ("eps2", self.eps2)] {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {eps}")));
            }
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise_sigma must be >= 0, got {}", self.noise_sigma)));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if let Some(w) = &self.interaction {
            w.validate()?;
        }
        for (name, meter) in [("meter1", &self.meter1), ("meter2", &self.meter2)] {
            let report = meter.validate();
            if !report.passed() {
                return Err(Error::InvalidMeter(format!("{name}: {}", report.failures.join("; "))));
            }
        }
        let grid = self.grid.unwrap_or_default();
        for n in [grid.n1, grid.n2] {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::Config(format!("oracle grid size {n} must be a power of two >= 4")));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::Config("sweep needs at least one value".into()));
            }
            if sweep.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("sweep values must be finite".into()));
            }
            if sweep.parameter == SweepParameter::SigmaP && !matches!(self.meter1, Meter::Gaussian(_)) {
                return Err(Error::Config("sigma_p sweeps need a gaussian meter1".into()));
            }
        }

        let pair = match &self.basis_pair {
            BasisPairConfig::Fourier => fourier_pair(d)?,
            BasisPairConfig::Explicit { first, second } => BasisPair::new(
                OrthonormalBasis::new(first.to_matrix()?)?,
                OrthonormalBasis::new(second.to_matrix()?)?,
            )?,
        };
        if pair.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: pair.dim(),
            });
        }
        let rho = match &self.state {
            StateConfig::Random { seed, purity } => random_density_matrix(d, seed.unwrap_or(self.seed), *purity)?,
            StateConfig::Explicit { rho } => DensityMatrix::new(rho.to_matrix()?)?,
        };
        if rho.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.dim(),
            });
        }
        let observables = match &self.observables {
            Some(o) => (observable(&o.first, d)?, observable(&o.second, d)?),
            None => default_observables(&pair)?,
        };
        Ok(Experiment {
            config: self.clone(),
            pair,
            rho,
            grid,
            observables,
        })
    }
}

fn observable(m: &MatrixJson, d: usize) -> Result<ObservableSpectral> {
    let m = m.to_matrix()?;
    if m.nrows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: m.nrows(),
        });
    }
    if hermiticity_error(&m) > crate::hilbert::HERMITIAN_TOL {
        return Err(Error::InvalidObservable("observable is not Hermitian".into()));
    }
    ObservableSpectral::from_hermitian(&m)
}

/// `A = sum_k k/(d-1) P_k` and `B = sum_mu mu/(d-1) P_mu`: nondegenerate,
/// diagonal in the two bases, with spectra in `[0, 1]`.
fn default_observables(pair: &BasisPair) -> Result<(ObservableSpectral, ObservableSpectral)> {
    let d = pair.dim();
    let ramp = DVector::from_fn(d, |i, _| Complex64::new(i as f64 / (d - 1) as f64, 0.0));
    let build = |basis: &CMatrix| -> Result<ObservableSpectral> {
        let m = basis * CMatrix::from_diagonal(&ramp) * basis.adjoint();
        ObservableSpectral::from_hermitian(&crate::hilbert::hermitize(&m))
    };
    Ok((build(pair.first().vectors())?, build(pair.second().vectors())?))
}

/// A validated configuration together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub pair: BasisPair,
    pub rho: DensityMatrix,
    pub grid: OracleGrid,
    pub observables: (ObservableSpectral, ObservableSpectral),
}

impl Experiment {
    pub fn meter1(&self) -> &Meter {
        &self.config.meter1
    }

    pub fn meter2(&self) -> &Meter {
        &self.config.meter2
    }

    /// Copy with one swept parameter replaced.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self> {
        let mut config = self.config.clone();
        match parameter {
            SweepParameter::Eps1 => config.eps1 = value,
            SweepParameter::NoiseSigma => config.noise_sigma = value,
            SweepParameter::SigmaP => config.meter1 = Meter::gaussian(value)?,
        }
        let mut next = self.clone();
        if parameter == SweepParameter::SigmaP {
            let report = config.meter1.validate();
            if !report.passed() {
                return Err(Error::InvalidMeter(report.failures.join("; ")));
            }
        }
        if !(config.eps1.is_finite() && config.eps1 > 0.0) {
            return Err(Error::Config(format!("eps1 must be positive, got {}", config.eps1)));
        }
        if !(config.noise_sigma.is_finite() && config.noise_sigma >= 0.0) {
            return Err(Error::Config(format!("noise_sigma must be >= 0, got {}", config.noise_sigma)));
        }
        next.config = config;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "dim": 3,
        "state": {"type": "random", "purity": "mixed"},
        "meter1": {"type": "gaussian", "sigma_p": 1.0},
        "meter2": {"type": "gaussian", "sigma_p": 2.0},
        "eps1": 0.5,
        "eps2": 1.0
    }"#;

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.basis_pair, BasisPairConfig::Fourier);
        assert_eq!(c.trials, 1);
        assert_eq!(c.noise_sigma, 0.0);
        let e = c.validate().unwrap();
        assert_eq!(e.rho.dim(), 3);
        assert_eq!(e.grid, OracleGrid::default());
        let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn seed_drives_random_state() {
        let mut c = ExperimentConfig::from_json(MINIMAL).unwrap();
        let a = c.validate().unwrap().rho;
        c.seed = 99;
        let b = c.validate().unwrap().rho;
        assert_ne!(a, b);
        c.state = StateConfig::Random {
            seed: Some(99),
            purity: Purity::Mixed,
        };
        c.seed = 5;
        assert_eq!(c.validate().unwrap().rho, b);
    }

    #[test]
    fn overlapping_interaction_rejected() {
        let mut c = ExperimentConfig::default_qubit();
        c.interaction = Some(InteractionConfig {
            t1: 0.0,
            t2: 0.1,
            width1: 0.2,
            width2: 0.2,
        });
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("overlap"));
        c.interaction = Some(InteractionConfig {
            t1: 0.0,
            t2: 1.0,
            width1: 0.2,
            width2: 0.2,
        });
        assert!(c.validate().is_ok());
    }

    #[test]
    fn bad_values_rejected() {
        let base = ExperimentConfig::default_qubit();
        let mut c = base.clone();
        c.eps1 = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.noise_sigma = -1.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.dim = 3;
        c.state = StateConfig::Explicit {
            rho: MatrixJson::from_matrix(DensityMatrix::maximally_mixed(2).matrix()),
        };
        assert!(matches!(c.validate(), Err(Error::DimensionMismatch { .. })));
        let mut c = base.clone();
        c.basis_pair = BasisPairConfig::Explicit {
            first: MatrixJson::from_matrix(&CMatrix::identity(2, 2)),
            second: MatrixJson::from_matrix(&CMatrix::identity(2, 2)),
        };
        assert!(matches!(c.validate(), Err(Error::NonComplementaryPair { .. })));
        let mut c = base;
        c.sweep = Some(SweepConfig {
            parameter: SweepParameter::Eps1,
            values: vec![],
        });
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"dim": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn default_observables_are_nondegenerate() {
        let e = ExperimentConfig::default_qubit().validate().unwrap();
        assert_eq!(e.observables.0.eigenvalues().len(), 2);
        assert!((e.observables.1.max_abs_eigenvalue() - 1.0).abs() < 1e-12);
    }
}
