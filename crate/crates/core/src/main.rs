use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use seqtomo::harness::{run_oracle_check, run_quasiprob, run_roundtrip, run_sweep, ExperimentConfig};
use seqtomo::Error;

#[derive(Parser)]
#[command(name = "seqtomo", version, about = "Reconstruct quantum states from pointer correlations of two sequential measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate correlations, reconstruct, report the trace distance.
    Roundtrip,
    /// Compare analytic correlations with the grid oracle.
    OracleCheck,
    /// Sweep eps1, noise_sigma or sigma_p and write a CSV.
    Sweep,
    /// Write the quasi-probability table of the configured state.
    Quasiprob,
}

fn run(cli: &Cli) -> Result<serde_json::Value, Error> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default_qubit(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let exp = config.validate()?;
    let out = &config.output_dir;
    Ok(match cli.command {
        Command::Roundtrip => {
            let r = run_roundtrip(&exp, out)?;
            json!({
                "command": "roundtrip",
                "trace_distance": r.trace_distance,
                "noiseless_trace_distance": r.noiseless.trace_distance_to_reference,
                "flags": r.flags,
            })
        }
        Command::OracleCheck => {
            let r = run_oracle_check(&exp, out)?;
            json!({
                "command": "oracle-check",
                "max_deviation": r.max_deviation,
                "refined_max_deviation": r.refined_max_deviation,
                "monotone": r.monotone,
                "flags": r.flags,
            })
        }
        Command::Sweep => {
            let r = run_sweep(&exp, out)?;
            json!({
                "command": "sweep",
                "parameter": r.parameter,
                "points": r.rows.len(),
            })
        }
        Command::Quasiprob => {
            let t = run_quasiprob(&exp, out)?;
            json!({
                "command": "quasiprob",
                "dim": t.dim,
                "total": [t.total().re, t.total().im],
            })
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
