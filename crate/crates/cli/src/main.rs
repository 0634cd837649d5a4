//! `phasepos`: batch runner for decoherence positivity experiments.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 numerical-contract violation.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use config::{Command, Config};
use output::Outputs;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing config keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error(transparent)]
    Core(#[from] phasepos::Error),
    #[error("numerical contract violated: {0}")]
    Contract(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use phasepos::Error as E;
        match self {
            CliError::Config(_) | CliError::Missing(_) => 2,
            CliError::Core(E::Domain(_)) => 2,
            CliError::Core(E::Coverage { .. } | E::Stability { .. } | E::Factorization { .. }) => 3,
            CliError::Contract(_) => 3,
            CliError::Core(_) | CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "phasepos",
    version,
    about = "Wigner, Q and P positivity under position decoherence"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "phasepos-out")]
    out: PathBuf,
    #[command(flatten)]
    overrides: Config,
}

#[derive(Subcommand)]
enum Sub {
    /// Evolve a state and export W, Q, P and a trace.
    Evolve(RunArgs),
    /// Certify Wigner positivity over a probe schedule.
    CertifyW(RunArgs),
    /// Certify forward-route P positivity over a probe schedule.
    CertifyP(RunArgs),
    /// Print the Wigner and P positivity times.
    DecoherenceTimes(RunArgs),
    /// Thresholds over a grid of (m, D, family).
    Sweep(RunArgs),
    /// Compare the propagator with the finite-difference solver.
    OracleCompare(RunArgs),
}

impl Sub {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Sub::Evolve(a) => (Command::Evolve, a),
            Sub::CertifyW(a) => (Command::CertifyW, a),
            Sub::CertifyP(a) => (Command::CertifyP, a),
            Sub::DecoherenceTimes(a) => (Command::DecoherenceTimes, a),
            Sub::Sweep(a) => (Command::Sweep, a),
            Sub::OracleCompare(a) => (Command::OracleCompare, a),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PHASEPOS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "PHASEPOS_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(command: Command, args: RunArgs) -> Result<(), CliError> {
    configure_threads()?;
    let mut cfg = match &args.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.overlay(&args.overrides);
    let cfg = cfg.resolve(command)?;
    let mut out = Outputs::create(&args.out, cfg.hash(command))?;
    let result = match command {
        Command::Evolve => commands::evolve(&cfg, &mut out),
        Command::CertifyW => commands::certify_w(&cfg, &mut out),
        Command::CertifyP => commands::certify_p(&cfg, &mut out),
        Command::DecoherenceTimes => commands::decoherence_times(&cfg, &mut out),
        Command::Sweep => commands::sweep(&cfg, &mut out),
        Command::OracleCompare => commands::oracle_compare(&cfg, &mut out),
    };
    // artifacts of a contract violation are still worth a manifest
    if matches!(result, Ok(()) | Err(CliError::Contract(_))) {
        out.finish(command, &cfg)?;
    }
    result
}

fn main() -> ExitCode {
    let (command, args) = Cli::parse().command.split();
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("phasepos: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
