//! `levisqueeze`: coefficient estimation, propagation, protocol runs and
//! figure reproduction.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
//! error, 3 physical divergence.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use levisqueeze::experiments::OutputFormat;
use levisqueeze::noise::UnitSystem;

use commands::{CoeffsArgs, Context, FigureArgs, PropagateArgs, ProtocolArgs, SweepArgs};
use config::RunConfig;

/// Bad invocation or configuration (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

/// The requested asymptote does not exist (exit code 3).
#[derive(Debug)]
pub struct DivergentError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for DivergentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "divergent: {}", self.0)
    }
}

impl std::error::Error for UsageError {}
impl std::error::Error for DivergentError {}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Natural,
    Si,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "levisqueeze", version, about = "Squeezing of a levitated nanoparticle by trap-frequency switching")]
struct Cli {
    /// Run configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed recorded in outputs and used by stochastic runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "LEVISQUEEZE_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the dynamics coefficients and the momentum-noise breakdown.
    Coeffs(CoeffsArgs),
    /// Propagate the configured initial state at a fixed trap frequency.
    Propagate(PropagateArgs),
    /// Equilibrate, run the protocol and report its asymptote.
    Protocol(ProtocolArgs),
    /// Reproduce a figure or table dataset.
    Figure(FigureArgs),
    /// One-parameter sweep of named observables.
    Sweep(SweepArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| UsageError(format!("LEVISQUEEZE_THREADS: {e}")))?;
    }
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let mode = config.resolve_mode(cli.mode.map(|m| match m {
        ModeArg::Natural => UnitSystem::Natural,
        ModeArg::Si => UnitSystem::Si,
    }))?;
    let format = match cli.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        None => config.output.format.unwrap_or_default(),
    };
    let ctx = Context {
        seed: cli.seed.or(config.output.seed),
        out: cli.out.or_else(|| config.output.path.clone()).unwrap_or_else(|| "out".into()),
        format,
        mode,
        config,
    };
    match &cli.command {
        Command::Coeffs(a) => commands::coeffs(&ctx, a),
        Command::Propagate(a) => commands::propagate(&ctx, a),
        Command::Protocol(a) => commands::protocol(&ctx, a),
        Command::Figure(a) => commands::figure(&ctx, a),
        Command::Sweep(a) => commands::run_sweep(&ctx, a),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    use levisqueeze::Error as E;
    for cause in e.chain() {
        if cause.is::<DivergentError>() {
            return 3;
        }
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::InvalidParameter { .. } | E::InvalidEfficiency(_) | E::Overdamped { .. } => 2,
                E::SpectralRadiusGEOne(_)
                | E::NotHurwitz { .. }
                | E::NoStabilizingSolution(_)
                | E::NonConverged { .. }
                | E::SingularDeltaInversion { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
