//! Command-line driver: linear sweeps, nonlinear runs, threshold bisection
//! and bootstrap reports, written as CSV plus a JSON manifest.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::Config;
use output::{content_hash, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("output error: {0}")]
    Io(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("{0}")]
    Bracket(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Bracket(_) => 4,
        }
    }
}

impl From<poiseuille::Error> for CliError {
    fn from(e: poiseuille::Error) -> Self {
        match e {
            poiseuille::Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            poiseuille::Error::Bracket { .. } => CliError::Bracket(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Resolvent-norm sweeps and Orr-Sommerfeld bound constants.
    Resolvent,
    /// Pseudospectral bound Ψ over the coefficient grid.
    Psi,
    /// Semigroup norms, Gearhart-Prüss check and decay rates.
    Semigroup,
    /// Nonlinear runs with energy ledgers.
    Simulate,
    /// Bisection of the stability threshold amplitude.
    Threshold,
    /// Bootstrap constants from `simulate` output in the same directory.
    Bootstrap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Resolvent => "resolvent",
            Command::Psi => "psi",
            Command::Semigroup => "semigroup",
            Command::Simulate => "simulate",
            Command::Threshold => "threshold",
            Command::Bootstrap => "bootstrap",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "poiseuille", version, about = "Stability experiments around plane Poiseuille flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML, required).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "./out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides `physics.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Result of one invocation.
#[derive(Debug)]
pub struct Invocation {
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn run(cli: &Cli) -> Result<Invocation, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut loaded = Config::load(path)?;
    if let Some(seed) = cli.seed {
        loaded.config.physics.seed = seed;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(jobs);
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut out = OutputDir::create(&cli.out)?;
    let report = pool.install(|| commands::dispatch(cli.command, &loaded.config, &mut out))?;

    let manifest = json!({
        "command": cli.command.name(),
        "config_path": path.display().to_string(),
        "config_hash": content_hash(loaded.raw.as_bytes()),
        "config": loaded.config,
        "sim_configs": report.sim_configs,
        "seed": loaded.config.physics.seed,
        "jobs": pool.current_num_threads(),
        "versions": {
            "poiseuille": poiseuille::VERSION,
            "poiseuille-cli": env!("CARGO_PKG_VERSION"),
        },
        "started_unix": started,
        "wall_time_seconds": clock.elapsed().as_secs_f64(),
        "outputs": out.files(),
        "summary": report.summary,
    });
    out.write_json("manifest.json", &manifest)?;
    if let Some(err) = report.deferred {
        return Err(err);
    }
    Ok(Invocation {
        files: out.files().to_vec(),
        summary: report.summary,
    })
}
