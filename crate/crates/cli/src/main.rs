mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use crate::commands::Failure;
use crate::config::RunConfig;

/// Environment variable that overrides the output directory.
const OUT_ENV: &str = "CHRONO_DUHAMEL_OUT";

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Propagate,
    Evolve,
    Invariance,
    Certify,
    Trees,
    Selftest,
}

#[derive(Debug, Parser)]
#[command(name = "chrono-duhamel", version, about = "Batch driver for free-solution dynamics experiments")]
struct Cli {
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config and the environment.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(dir) = std::env::var_os(OUT_ENV) {
        cfg.output.dir = PathBuf::from(dir);
    }
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let result = match cli.command {
        Command::Propagate => commands::propagate(&cfg),
        Command::Evolve => commands::evolve(&cfg),
        Command::Invariance => commands::invariance(&cfg),
        Command::Certify => commands::certify(&cfg),
        Command::Trees => commands::trees(&cfg),
        Command::Selftest => commands::selftest(&cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical { stage, message }) => {
            eprintln!("numerical failure in {stage}: {message}");
            ExitCode::from(1)
        }
    }
}
