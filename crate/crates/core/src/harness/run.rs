//! Experiment runners behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{correlation_set, corr_pq, corr_qq, CorrelationSet, SuccessiveSetup};
use crate::hilbert::{trace_distance, CMatrix, DensityMatrix, ObservableSpectral};
use crate::oracle::{JointState, MeterIndex, MeterOp, OracleGrid};
use crate::quasiprob::{quasiprob_of_state, QuasiProbTable};
use crate::reconstruct::{noisy_reconstruct, reconstruct, ReconstructionReport};

use super::config::{Experiment, SweepParameter};

/// Oracle runs are limited to small systems; the joint grid holds
/// `d * n1 * n2` amplitudes per branch.
pub const ORACLE_MAX_DIM: usize = 4;
/// Deviations below this are roundoff and count as converged.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;
/// `|lambda|` below which reports carry a `small_lambda` flag.
pub const SMALL_LAMBDA: f64 = 1e-3;

/// Write through a sibling temporary file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

/// Trace-distance statistics of noisy reconstructions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSummary {
    pub noise_sigma: f64,
    pub trials: usize,
    pub distances: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
    pub clipped_trials: usize,
}

/// Outcome of one forward-and-invert pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    #[serde(with = "crate::serde_complex")]
    pub lambda: Complex64,
    #[serde(with = "crate::serde_complex")]
    pub lambda_tilde: Complex64,
    pub noiseless: ReconstructionReport,
    pub noise: Option<NoiseSummary>,
    /// Headline error: the mean noisy distance when noise is on, else the
    /// noiseless distance.
    pub trace_distance: f64,
    pub flags: Vec<String>,
}

fn response_flags(corr: &CorrelationSet) -> Vec<String> {
    let mut flags = Vec::new();
    if corr.lambda.im.abs() < 1e-12 && corr.lambda_tilde.im.abs() < 1e-12 {
        flags.push("real_lambda_mode".to_string());
    }
    if corr.lambda.norm() < SMALL_LAMBDA {
        flags.push("small_lambda".to_string());
    }
    flags
}

fn noise_seed(seed: u64, trial: usize) -> u64 {
    seed.wrapping_add(trial as u64)
}

/// Forward simulation, exact inversion and optional noisy trials.
pub fn evaluate(exp: &Experiment) -> Result<(CorrelationSet, PointResult)> {
    let c = &exp.config;
    let corr = correlation_set(&exp.rho, &exp.pair, exp.meter1(), exp.meter2(), c.eps1, c.eps2)?;
    let rho = reconstruct(&corr, &exp.pair)?;
    let flags = response_flags(&corr);
    let noiseless = ReconstructionReport::new(rho, Some(&exp.rho), flags.clone())?;
    let noise = if c.noise_sigma > 0.0 {
        let runs: Vec<(f64, bool)> = (0..c.trials)
            .into_par_iter()
            .map(|t| {
                let (noisy, report) = noisy_reconstruct(&corr, &exp.pair, c.noise_sigma, noise_seed(c.seed, t))?;
                Ok((trace_distance(&noisy, &exp.rho)?, report.projection.clipped_eigenvalues > 0))
            })
            .collect::<Result<_>>()?;
        let distances: Vec<f64> = runs.iter().map(|r| r.0).collect();
        let n = distances.len() as f64;
        let mean = distances.iter().sum::<f64>() / n;
        let var = distances.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(NoiseSummary {
            noise_sigma: c.noise_sigma,
            trials: c.trials,
            mean,
            std: var.sqrt(),
            max: distances.iter().copied().fold(0.0, f64::max),
            clipped_trials: runs.iter().filter(|r| r.1).count(),
            distances,
        })
    } else {
        None
    };
    let mut flags = flags;
    if noise.as_ref().is_some_and(|n| n.clipped_trials > 0) {
        flags.push("physicality_projection".to_string());
    }
    let trace_distance = match &noise {
        Some(n) => n.mean,
        None => noiseless.trace_distance_to_reference.unwrap_or(f64::NAN),
    };
    Ok((
        corr.clone(),
        PointResult {
            lambda: corr.lambda,
            lambda_tilde: corr.lambda_tilde,
            noiseless,
            noise,
            trace_distance,
            flags,
        },
    ))
}

/// Files: `correlations.json`, `reconstruction.json` and, with noise,
/// `noise_trials.json`. Correlations are written even when the inversion
/// fails.
pub fn run_roundtrip(exp: &Experiment, out: &Path) -> Result<PointResult> {
    let c = &exp.config;
    let corr = correlation_set(&exp.rho, &exp.pair, exp.meter1(), exp.meter2(), c.eps1, c.eps2)?;
    write_json(&out.join("correlations.json"), &corr)?;
    let (_, result) = evaluate(exp)?;
    write_json(&out.join("reconstruction.json"), &result.noiseless)?;
    if let Some(noise) = &result.noise {
        write_json(&out.join("noise_trials.json"), noise)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub label: String,
    pub analytic_qq: f64,
    pub oracle_qq: f64,
    pub analytic_pq: f64,
    pub oracle_pq: f64,
    pub refined_oracle_qq: Option<f64>,
    pub refined_oracle_pq: Option<f64>,
}

impl OracleEntry {
    pub fn deviation(&self) -> f64 {
        (self.analytic_qq - self.oracle_qq).abs().max((self.analytic_pq - self.oracle_pq).abs())
    }

    pub fn refined_deviation(&self) -> Option<f64> {
        Some(
            (self.analytic_qq - self.refined_oracle_qq?)
                .abs()
                .max((self.analytic_pq - self.refined_oracle_pq?).abs()),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub grid: OracleGrid,
    pub refined_grid: Option<OracleGrid>,
    pub entries: Vec<OracleEntry>,
    pub max_deviation: f64,
    pub refined_max_deviation: Option<f64>,
    /// Refinement did not increase the deviation, up to [`ROUNDOFF_FLOOR`].
    pub monotone: Option<bool>,
    pub flags: Vec<String>,
}

fn oracle_pair(
    exp: &Experiment,
    a: &ObservableSpectral,
    b: &ObservableSpectral,
    grid: OracleGrid,
) -> Result<(f64, f64, JointState)> {
    let c = &exp.config;
    let joint = JointState::from_meters(&exp.rho, exp.meter1(), exp.meter2(), grid.n1, grid.n2)?
        .evolve(a, MeterIndex::First, c.eps1)?
        .evolve(b, MeterIndex::Second, c.eps2)?;
    Ok((
        joint.expect_meter_product(MeterOp::Q, MeterOp::Q),
        joint.expect_meter_product(MeterOp::P, MeterOp::Q),
        joint,
    ))
}

/// Analytic against grid-oracle correlations for the configured
/// observables and for every projector pair `(P_k, P_mu)`. A second pass
/// quadruples the first meter's grid (Gaussian meters only; grid meters
/// carry a fixed discretization). Writes `oracle_check.json` and the
/// pointer marginals in `oracle_diagnostics.json`.
pub fn run_oracle_check(exp: &Experiment, out: &Path) -> Result<OracleReport> {
    let d = exp.pair.dim();
    if d > ORACLE_MAX_DIM {
        return Err(Error::Config(format!("oracle-check supports d <= {ORACLE_MAX_DIM}, got {d}")));
    }
    let c = &exp.config;
    let mut cases: Vec<(String, ObservableSpectral, ObservableSpectral)> =
        vec![("A,B".to_string(), exp.observables.0.clone(), exp.observables.1.clone())];
    for k in 0..d {
        for mu in 0..d {
            cases.push((
                format!("P_k={k},P_mu={mu}"),
                ObservableSpectral::rank_one_projector(&exp.pair.first().vector(k)),
                ObservableSpectral::rank_one_projector(&exp.pair.second().vector(mu)),
            ));
        }
    }
    let refined_grid = match exp.meter1() {
        crate::meter::Meter::Gaussian(_) => Some(OracleGrid {
            n1: 4 * exp.grid.n1,
            n2: exp.grid.n2,
        }),
        crate::meter::Meter::Grid(_) => None,
    };
    let mut diagnostics = None;
    let mut entries = Vec::with_capacity(cases.len());
    for (i, (label, a, b)) in cases.iter().enumerate() {
        let setup = SuccessiveSetup {
            rho: &exp.rho,
            first: a,
            second: b,
            meter1: exp.meter1(),
            meter2: exp.meter2(),
            eps1: c.eps1,
            eps2: c.eps2,
        };
        let (oracle_qq, oracle_pq, joint) = oracle_pair(exp, a, b, exp.grid)?;
        if i == 0 {
            diagnostics = Some(joint.diagnostics());
        }
        drop(joint);
        let (refined_oracle_qq, refined_oracle_pq) = match refined_grid {
            Some(g) => {
                let (q, p, _) = oracle_pair(exp, a, b, g)?;
                (Some(q), Some(p))
            }
            None => (None, None),
        };
        entries.push(OracleEntry {
            label: label.clone(),
            analytic_qq: corr_qq(&setup)?,
            oracle_qq,
            analytic_pq: corr_pq(&setup)?,
            oracle_pq,
            refined_oracle_qq,
            refined_oracle_pq,
        });
    }
    let max_deviation = entries.iter().map(OracleEntry::deviation).fold(0.0, f64::max);
    let refined_max_deviation = refined_grid.map(|_| {
        entries
            .iter()
            .filter_map(OracleEntry::refined_deviation)
            .fold(0.0, f64::max)
    });
    let monotone = refined_max_deviation.map(|r| r <= max_deviation || r < ROUNDOFF_FLOOR);
    let mut flags = Vec::new();
    if refined_grid.is_none() {
        flags.push("refinement_skipped_grid_meter".to_string());
    }
    if max_deviation < ROUNDOFF_FLOOR {
        flags.push("roundoff_limited".to_string());
    }
    let report = OracleReport {
        grid: exp.grid,
        refined_grid,
        entries,
        max_deviation,
        refined_max_deviation,
        monotone,
        flags,
    };
    write_json(&out.join("oracle_check.json"), &report)?;
    if let Some(diag) = diagnostics {
        write_json(&out.join("oracle_diagnostics.json"), &diag)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    #[serde(with = "crate::serde_complex")]
    pub lambda: Complex64,
    #[serde(with = "crate::serde_complex")]
    pub lambda_tilde: Complex64,
    pub trace_distance: f64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Header, then one row per value. `flags` is `;`-separated.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.parameter.name(),
            "lambda_re",
            "lambda_im",
            "lambda_tilde_re",
            "lambda_tilde_im",
            "trace_distance",
            "flags",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.lambda.re.to_string(),
                r.lambda.im.to_string(),
                r.lambda_tilde.re.to_string(),
                r.lambda_tilde.im.to_string(),
                r.trace_distance.to_string(),
                r.flags.join(";"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn sweep_point(exp: &Experiment) -> Result<SweepRow> {
    let value_of = |r: PointResult| SweepRow {
        value: 0.0,
        lambda: r.lambda,
        lambda_tilde: r.lambda_tilde,
        trace_distance: r.trace_distance,
        flags: r.flags,
    };
    match evaluate(exp) {
        Ok((_, r)) => Ok(value_of(r)),
        // Coherences are gone; report how far the populations-only state is.
        Err(Error::StrongCouplingSingular { populations, .. }) => {
            let c = &exp.config;
            let m = exp.meter1();
            let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                populations.len(),
                populations.iter().map(|&p| Complex64::new(p, 0.0)),
            ));
            let pops = DensityMatrix::new(diag)?;
            Ok(SweepRow {
                value: 0.0,
                lambda: m.lambda(c.eps1)?,
                lambda_tilde: m.lambda_tilde(c.eps1)?,
                trace_distance: trace_distance(&pops, &exp.rho)?,
                flags: vec!["strong_coupling_singular".into(), "populations_only".into()],
            })
        }
        Err(e) => Err(e),
    }
}

/// One row per swept value, computed in parallel. Each point is also
/// written as `sweep_point_NNN.json`; the table goes to `sweep.csv`.
pub fn run_sweep(exp: &Experiment, out: &Path) -> Result<SweepReport> {
    let sweep = exp
        .config
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("sweep subcommand needs a \"sweep\" block".into()))?;
    let rows: Vec<SweepRow> = sweep
        .values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            let point = exp.with_parameter(sweep.parameter, v)?;
            let mut row = sweep_point(&point)?;
            row.value = v;
            write_json(&out.join(format!("sweep_point_{i:03}.json")), &row)?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let report = SweepReport {
        parameter: sweep.parameter,
        rows,
    };
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_atomic(&out.join("sweep.csv"), &buf)?;
    Ok(report)
}

/// `W11` table of the configured state at the first meter's `lambda(eps1)`;
/// written as `quasiprob.json` and `quasiprob.csv`.
pub fn run_quasiprob(exp: &Experiment, out: &Path) -> Result<QuasiProbTable> {
    let eps1 = exp.config.eps1;
    let mut table = quasiprob_of_state(&exp.rho, &exp.pair, exp.meter1().lambda(eps1)?)?;
    table.eps1 = Some(eps1);
    write_json(&out.join("quasiprob.json"), &table)?;
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    write_atomic(&out.join("quasiprob.csv"), &buf)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, SweepConfig};

    #[test]
    fn atomic_write_leaves_no_partial() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.json");
        write_atomic(&p, b"{}").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "{}");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn single_value_sweep_matches_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = ExperimentConfig::default_qubit();
        c.noise_sigma = 1e-3;
        c.trials = 4;
        c.sweep = Some(SweepConfig {
            parameter: SweepParameter::Eps1,
            values: vec![c.eps1],
        });
        let exp = c.validate().unwrap();
        let rt = run_roundtrip(&exp, dir.path()).unwrap();
        let sw = run_sweep(&exp, dir.path()).unwrap();
        assert_eq!(sw.rows.len(), 1);
        assert_eq!(sw.rows[0].trace_distance, rt.trace_distance);
        assert_eq!(sw.rows[0].lambda, rt.lambda);
    }

    #[test]
    fn strong_coupling_sweep_point_falls_back() {
        let mut c = ExperimentConfig::default_qubit();
        c.sweep = Some(SweepConfig {
            parameter: SweepParameter::Eps1,
            values: vec![0.5, 60.0],
        });
        let exp = c.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sw = run_sweep(&exp, dir.path()).unwrap();
        assert!(sw.rows[0].trace_distance < 1e-9);
        assert!(sw.rows[1].flags.contains(&"populations_only".to_string()));
        let off = exp.rho.matrix()[(0, 1)].norm();
        assert!((sw.rows[1].trace_distance - off).abs() < 1e-12);
    }
}
