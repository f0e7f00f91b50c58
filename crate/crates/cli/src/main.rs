use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use mpp_lab_cli::app::{env_seed, execute, Action};
use mpp_lab_cli::config::Overrides;
use mpp_lab_cli::{CliError, EXIT_FAIL, EXIT_PASS};

/// Multiparameter Poisson process analytics and Monte Carlo validation.
#[derive(Parser)]
#[command(name = "mpp-lab", version)]
struct Cli {
    /// Master seed (overrides MPP_LAB_SEED and the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replica count override.
    #[arg(long, global = true)]
    replicas: Option<u64>,
    /// Output path; `.csv` or `.json`/`.jsonl` picks the format.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic pmf against Monte Carlo frequencies.
    Pmf { config: PathBuf },
    /// Closed-form moments against Monte Carlo estimates.
    Moments { config: PathBuf },
    /// One sampled value per replica.
    Simulate { config: PathBuf },
    /// Run a validation suite.
    Validate {
        suite: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    let action = match cli.command {
        Command::Pmf { config } => Action::Pmf(config),
        Command::Moments { config } => Action::Moments(config),
        Command::Simulate { config } => Action::Simulate(config),
        Command::Validate { suite, config } => Action::Validate { suite, config },
    };
    let ov = Overrides {
        seed: cli.seed,
        replicas: cli.replicas,
        output: cli.output,
    };
    let (pass, notes) = execute(&action, &ov, env_seed()).context("mpp-lab")?;
    for n in notes {
        eprintln!("{n}");
    }
    Ok(pass)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::from(EXIT_PASS),
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<CliError>()
                .map_or(EXIT_FAIL, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
