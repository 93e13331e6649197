//! `wave`: batch front-end for the htwave experiments.
//!
//! Every subcommand writes its artifacts atomically into `--out` (default `wave-out`),
//! each CSV next to a `<name>.meta.json` metadata block (config hash, seed, tolerances,
//! mollifier id, quadrature budgets). A JSON config (`--config`) overrides the flags key
//! by key. `WAVE_THREADS` caps the worker threads.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 invalid input or budget,
//! 3 failed resolution certificate (or convergence/aliasing guard). Failures print one
//! JSON error record on stderr.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, EXIT_OK, EXIT_VALIDATION};

#[derive(Parser, Debug)]
#[command(name = "wave", version, about = "Wave kernels on Heisenberg-type groups: experiments and checks")]
struct Cli {
    /// JSON config whose keys (long flag names in snake case) override the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct Global {
    /// Output directory.
    #[arg(long, global = true, default_value = "wave-out")]
    pub out: PathBuf,
    /// Seed of every randomized sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Group preset.
    #[arg(long, global = true, value_enum, default_value_t = GroupPreset::Heisenberg)]
    pub group: GroupPreset,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupPreset {
    /// H_1: d1 = 2, d2 = 1.
    Heisenberg,
    /// Quaternionic H-type group: d1 = 4, d2 = 3.
    Quaternionic,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assemble one kernel piece and store it as an HTWK field with JSON sidecar.
    Kernel(commands::KernelArgs),
    /// Sample the singular curve (r(t), v(t)) and its derivatives.
    Curve(commands::CurveArgs),
    /// L1 / L-infinity norms of kernel pieces and fitted log-log slopes.
    Scaling(commands::ScalingArgs),
    /// Reconstruct the localized multiplier from a_lambda and rho_lambda.
    Subordination(commands::SubordinationArgs),
    /// Mixed-Hessian determinant identity on random cone samples.
    Hessian(commands::HessianArgs),
    /// The quantity A_R of the multiplier condition and its verdict.
    Multiplier(commands::MultiplierArgs),
    /// Run the acceptance criteria and report pass/fail with measured values.
    Checks(commands::ChecksArgs),
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("WAVE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Validation(format!("WAVE_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(format!("cannot configure the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let file = cli.config.as_deref().map(config::read_config).transpose()?;
    match cli.command {
        Command::Kernel(a) => commands::kernel(commands::resolve(&cli.global, &a, file, "kernel")?),
        Command::Curve(a) => commands::curve(commands::resolve(&cli.global, &a, file, "curve")?),
        Command::Scaling(a) => commands::scaling(commands::resolve(&cli.global, &a, file, "scaling")?),
        Command::Subordination(a) => commands::subordination(commands::resolve(&cli.global, &a, file, "subordination")?),
        Command::Hessian(a) => commands::hessian(commands::resolve(&cli.global, &a, file, "hessian")?),
        Command::Multiplier(a) => commands::multiplier(commands::resolve(&cli.global, &a, file, "multiplier")?),
        Command::Checks(a) => commands::checks(commands::resolve(&cli.global, &a, file, "checks")?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Validation(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
