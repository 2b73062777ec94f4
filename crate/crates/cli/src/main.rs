//! `dpgossip`: run, sweep, and audit differentially private quantized
//! gossip optimization experiments from JSON configs.
//!
//! Exit codes: 0 success, 2 config error, 3 assumption-validation failure,
//! 4 numerical divergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod io;

/// Environment variable supplying the default output directory when
/// `--out` is omitted.
pub const OUT_DIR_ENV: &str = "DPGOSSIP_OUT";

#[derive(Debug, Parser)]
#[command(name = "dpgossip", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $DPGOSSIP_OUT, else the current dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override; beats `run.seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trajectory CSV files produced by `run` or `sweep`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory (default: $DPGOSSIP_OUT, else the current dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Failure probability for the high-probability tail check.
    #[arg(long, default_value_t = 0.2)]
    delta_star: f64,
    /// Target accuracy for the oracle-complexity probe.
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory and write CSV + JSON summary.
    Run(CommonArgs),
    /// Run a Cartesian grid of (quantizer delta, noise exponent, seed) cells.
    Sweep(CommonArgs),
    /// Emit the analytic privacy ledger without simulating.
    Budget(CommonArgs),
    /// Check the step-size feasibility conditions and report slacks.
    Validate(CommonArgs),
    /// Post-process trajectory CSVs into a JSON report.
    Analyze(AnalyzeArgs),
}

/// Resolves the output directory: flag, then env var, then current dir.
fn resolve_out(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::cmd_run(&a.config, &resolve_out(a.out.as_deref()), a.seed),
        Command::Sweep(a) => {
            commands::cmd_sweep(&a.config, &resolve_out(a.out.as_deref()), a.seed, a.jobs)
        }
        Command::Budget(a) => commands::cmd_budget(&a.config, &resolve_out(a.out.as_deref())),
        Command::Validate(a) => commands::cmd_validate(&a.config, &resolve_out(a.out.as_deref())),
        Command::Analyze(a) => commands::cmd_analyze(
            &a.inputs,
            &resolve_out(a.out.as_deref()),
            a.delta_star,
            a.eta,
        ),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
