use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dualist_cli::commands;
use dualist_cli::config::{parse_config, SimConfig};
use dualist_cli::CliError;

/// Stochastic pilot-wave ensemble simulator.
#[derive(Parser)]
#[command(name = "dualist", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for the result bundle.
    #[arg(long)]
    out: PathBuf,
    /// Override the seed declared in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results are identical for any
    /// thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the seed declared in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the configured trajectory ensemble.
    Run(CommonArgs),
    /// Evolve the ensemble density with the independent grid solver.
    Oracle(CommonArgs),
    /// Goodness-of-fit test of the transition-event phase sampler.
    SteTest(CommonArgs),
    /// Stationarity test of the phase-decohered equilibrium ensemble.
    Dqe(CommonArgs),
    /// Spontaneous-localization (Gaussian hit) comparison model.
    Grw(CommonArgs),
    /// Center-of-mass reduction and phase-averaged drift scan.
    #[command(name = "macro")]
    MacroScan(CommonArgs),
    /// Parse and validate a configuration without running anything.
    Validate(ValidateArgs),
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Runtime(format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut cfg = parse_config(&text).map_err(CliError::Validation)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation(vec!["--threads: must be >= 1".into()]));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<serde_json::Value, CliError> {
    match cli.cmd {
        Cmd::Run(a) => {
            set_threads(a.threads)?;
            commands::cmd_run(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::Oracle(a) => {
            set_threads(a.threads)?;
            commands::cmd_oracle(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::SteTest(a) => {
            set_threads(a.threads)?;
            commands::cmd_ste_test(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::Dqe(a) => {
            set_threads(a.threads)?;
            commands::cmd_dqe(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::Grw(a) => {
            set_threads(a.threads)?;
            commands::cmd_grw(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::MacroScan(a) => {
            set_threads(a.threads)?;
            commands::cmd_macro(&load_config(&a.config, a.seed)?, &a.out)
        }
        Cmd::Validate(a) => commands::cmd_validate(&load_config(&a.config, a.seed)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
