//! Configuration, orchestration and persistence of evolution campaigns.

pub mod config;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, ExportConfig, ExperimentSection, OUTPUT_DIR_ENV};
pub use runner::{load_runs, run_experiment, run_repeat, run_seed, Manifest, RunSummary, StoredRun};
