//! Config-driven experiments: one JSON document in, JSON and CSV reports out.

pub mod config;
pub mod run;

pub use config::{Experiment, ExperimentConfig, SweepParameter};
pub use run::{run_oracle_check, run_quasiprob, run_roundtrip, run_sweep};
