//! Batch runner: reads a JSON experiment configuration, runs every solver on
//! every generated instance, and writes traces, a summary table and a hashed
//! manifest.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod runner;

use std::path::Path;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use runner::{run_experiment, ExperimentResult, RunResult};

/// Runs `cfg` and writes its outputs under `out_dir`.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<ExperimentResult> {
    let result = run_experiment(cfg, jobs)?;
    output::write_all(&result, out_dir)?;
    Ok(result)
}
