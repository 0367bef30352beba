//! Config-driven experiments and their data products.
//!
//! Each sub-command reads a TOML [`RunConfig`], runs in internal units and
//! writes SI-valued CSV and JSON files plus a `manifest.json` with checksums.
//! If a run fails midway, every file it wrote is removed again.

mod config;
mod experiments;
mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

pub use config::{
    AttenuationSection, IntegratorSection, ProfileSection, RunConfig, SamplerKind,
    TrajectorySection, VerifySection, SCHEMA_VERSION,
};
pub use experiments::{CheckResult, SweepRow};
pub use output::{
    data_section, fmt_f64, sha256_hex, FileEntry, Manifest, OutputDir, MANIFEST_NAME,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl RunError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        RunError::Runtime(format!("{}: {e}", path.display()))
    }

    /// Process exit status: 1 for bad input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => 1,
            RunError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Trajectories,
    SweepA,
    DualityTable,
    Verify,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Trajectories => "trajectories",
            Command::SweepA => "sweep-a",
            Command::DualityTable => "duality-table",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub manifest: Manifest,
    /// `false` only when `verify` found a check outside its tolerance
    pub passed: bool,
}

/// Loads the config and runs one sub-command.
pub fn run(options: &RunOptions) -> Result<RunSummary, RunError> {
    let text = std::fs::read_to_string(&options.config).map_err(|e| {
        RunError::Validation(format!(
            "cannot read config {}: {e}",
            options.config.display()
        ))
    })?;
    let config = RunConfig::from_toml(&text)?;
    run_config(
        options.command,
        &config,
        &sha256_hex(text.as_bytes()),
        &options.out_dir,
        options.seed,
    )
}

pub fn run_config(
    command: Command,
    config: &RunConfig,
    config_sha256: &str,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let mut out = OutputDir::create(out_dir)?;
    let ctx = experiments::Context::new(command, config, config_sha256, seed)?;
    let result = match command {
        Command::Profile => experiments::profile(&ctx, &mut out),
        Command::Trajectories => experiments::trajectories(&ctx, &mut out),
        Command::SweepA => experiments::sweep_a(&ctx, &mut out),
        Command::DualityTable => experiments::duality_table(&ctx, &mut out),
        Command::Verify => experiments::verify(&ctx, &mut out),
    };
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => {
            out.abort();
            return Err(e);
        }
    };
    let manifest = out.finish(Manifest {
        tool: "qsweep",
        version: env!("CARGO_PKG_VERSION"),
        command: command.as_str().to_string(),
        schema_version: SCHEMA_VERSION,
        config_sha256: config_sha256.to_string(),
        seed: ctx.seed(),
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: outcome.warnings,
        files: Vec::new(),
    })?;
    Ok(RunSummary {
        manifest,
        passed: outcome.passed,
    })
}
