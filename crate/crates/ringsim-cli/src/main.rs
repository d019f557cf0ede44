//! Batch front end: run scheme pipelines and precision sweeps from a TOML
//! config, writing CSV tables and plot scripts. Exit codes: 0 success,
//! 2 parse failure, 3 validation failure, 4 numeric failure.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::CliError;

#[derive(Parser)]
#[command(
    name = "ringsim",
    version,
    about = "Three-site ring gyroscope simulator: pipelines, loss sweeps, and precision analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file
    Run(RunArgs),
    /// Check a config file and list every violated constraint without
    /// running anything
    Validate {
        /// Path to the TOML config
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML config
    config: PathBuf,
    /// Directory for CSV and plot outputs
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the config's random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep points (default: one per core)
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(&args),
        Command::Validate { config } => validate(&config),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let config = config::load(&args.config)?;
    let artifacts = commands::execute(&config, &args.out, args.seed, args.threads)?;
    println!(
        "wrote {} ({} rows)",
        artifacts.csv_path.display(),
        artifacts.rows
    );
    if let Some(plot) = artifacts.plot_path {
        println!("wrote {}", plot.display());
    }
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let config = config::load(path)?;
    let diags = config.validate();
    if diags.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(diags))
    }
}
