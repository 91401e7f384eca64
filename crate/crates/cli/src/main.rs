//! `fp-resonator`: batch driver for the resonance, scattering and
//! time-domain solvers.
//!
//! Exit codes: 0 on success, 2 for invalid input (config, flags, paths),
//! 3 when a numerical operation fails; the failing operation is named on
//! stderr.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::Context;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "fp-resonator", version, about = "Minnaert and Fabry-Perot resonances of high-contrast inclusions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "FPR_THREADS")]
    threads: Option<usize>,
    /// Override the solver tolerance of the subcommand.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// OFF surface mesh (capacitance).
    #[arg(long, global = true)]
    mesh: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Refined resonance table of the unit ball.
    Resonances,
    /// Check the Minnaert and Fabry-Perot asymptotics and zero counts.
    VerifyAsymptotics,
    /// Peak resolvent norm over frequency for a list of contrasts.
    ScanResolvent,
    /// Plane-wave scattering coefficients and solve diagnostics.
    Scatter,
    /// Far-field pattern of the plane-wave scattering solution.
    Farfield,
    /// Point-scatterer prediction for a small resonator against the exact field.
    Micro,
    /// Contour-synthesized time traces and the two-pole approximation.
    Timedomain,
    /// Electrostatic capacitance of a closed surface.
    Capacitance,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical { op: &'static str, message: String },
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical { op, message } => write!(f, "{op} failed: {message}"),
            CliError::Io(m) => write!(f, "cannot write output: {m}"),
        }
    }
}

/// Tag a solver error with the operation that produced it.
pub fn numerical<T>(op: &'static str, r: fpr_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Numerical { op, message: e.to_string() })
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Validation(format!("--tol {t} must lie in (0, 1)")));
        }
    }
    let scenario = cli.config.as_deref().map(config::load).transpose()?;
    let ctx = Context { out: cli.out.clone(), tol: cli.tol, mesh: cli.mesh.clone() };
    if !matches!(cli.command, Command::Capacitance) {
        std::fs::create_dir_all(&ctx.out)
            .map_err(|e| CliError::Validation(format!("--out {}: {e}", ctx.out.display())))?;
    }
    let need = || scenario.as_ref().ok_or_else(|| CliError::Validation("this subcommand needs --config".into()));
    match cli.command {
        Command::Resonances => commands::resonances(need()?, &ctx),
        Command::VerifyAsymptotics => commands::verify_asymptotics(need()?, &ctx),
        Command::ScanResolvent => commands::scan_resolvent(need()?, &ctx),
        Command::Scatter => commands::scatter(need()?, &ctx),
        Command::Farfield => commands::farfield(need()?, &ctx),
        Command::Micro => commands::micro(need()?, &ctx),
        Command::Timedomain => commands::timedomain(need()?, &ctx),
        Command::Capacitance => commands::capacitance_cmd(scenario.as_ref(), &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fp-resonator: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
