//! Reconstruction error under correlation noise as the first coupling grows.

use seqtomo::harness::config::{SweepConfig, SweepParameter};
use seqtomo::harness::{run_sweep, ExperimentConfig};

fn main() -> seqtomo::Result<()> {
    let mut config = ExperimentConfig::default_qubit();
    config.dim = 3;
    config.noise_sigma = 1e-4;
    config.trials = 50;
    config.sweep = Some(SweepConfig {
        parameter: SweepParameter::Eps1,
        values: (1..=10).map(|i| 0.5 * i as f64).collect(),
    });
    let out = std::env::temp_dir().join("seqtomo-noise-sweep");
    let report = run_sweep(&config.validate()?, &out)?;
    report.write_csv(std::io::stdout())?;
    eprintln!("files written to {}", out.display());
    Ok(())
}
