//! Command-line experiments on top of `wva-core`: readout sweeps,
//! probability scaling, Monte Carlo estimation and verification runs.
//!
//! Every command is a deterministic function of its settings and seed.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::process::ExitCode;

use cli::{Cli, Command};
use config::{resolve, FileConfig};
use error::{LabError, LabResult};

pub const THREADS_ENV: &str = "WVA_LAB_THREADS";

/// Thread pool sized by `WVA_LAB_THREADS`, or rayon's default when unset.
pub fn thread_pool() -> LabResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            LabError::Config(format!(
                "{THREADS_ENV}: expected a positive integer, got {v:?}"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

pub fn run(cli: &Cli) -> LabResult<ExitCode> {
    let file = match &cli.options.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let settings = resolve(cli.command, &cli.options, file)?;
    let pool = thread_pool()?;
    pool.install(|| match cli.command {
        Command::Sweep => output::emit_rows(&settings, cli.command, &commands::sweep(&settings)?),
        Command::Scaling => {
            output::emit_rows(&settings, cli.command, &commands::scaling(&settings)?)
        }
        Command::Estimate => output::emit_estimate(&settings, &commands::estimate(&settings)?),
        Command::Verify => {
            let report = commands::verify(&settings)?;
            output::emit_verify(&settings, &report)?;
            if report.passed {
                Ok(())
            } else {
                Err(LabError::Verification(format!(
                    "worst instance: {}",
                    output::worst_instance_json(&report)
                )))
            }
        }
    })?;
    Ok(ExitCode::SUCCESS)
}
