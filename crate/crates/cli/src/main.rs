//! Command-line front end: configuration parsing, experiment orchestration
//! and data export for the verification and simulation workflows.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 runtime singularity/integration failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{CmdError, Ctx};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "curvlab",
    version,
    about = "Superintegrable Hamiltonians on deformed geometries: verification, curvature scans and symplectic flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the sampling seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Suppress progress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check bracket relations, involutions and independence ranks.
    Verify,
    /// Integrate one trajectory and export CSV plus a drift summary.
    Simulate,
    /// Scan closed-form and numeric curvature over a grid.
    Curvature,
    /// Run a parameter grid of trajectories with deterministic aggregation.
    Sweep,
    /// Polar-chart roundtrip and scale-relation diagnostics.
    Transform,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        seed: cli.seed,
        quiet: cli.quiet,
    };
    match dispatch(&cli, &ctx) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("curvlab: {}", err.message());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli, ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Verify => commands::verify::run(&cfg, ctx),
        Command::Simulate => commands::simulate::run(&cfg, ctx),
        Command::Curvature => commands::curvature::run(&cfg, ctx),
        Command::Sweep => commands::sweep::run(&cfg, ctx),
        Command::Transform => commands::transform::run(&cfg, ctx),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CmdError> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CmdError::Config(format!("reading {}: {e}", path.display())))?;
            config::parse_config(&text).map_err(CmdError::Config)
        }
        None => match cli.command {
            Command::Verify => Ok(RunConfig::default_verify()),
            _ => Err(CmdError::Config(
                "this command requires --config <file>".into(),
            )),
        },
    }
}
