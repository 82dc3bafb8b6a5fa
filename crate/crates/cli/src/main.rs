//! `qfisher`: run generalized Fisher information experiments from the
//! command line.
//!
//! Exit status: 0 when every checked inequality holds, 2 when one is
//! violated, 1 on a numerical or I/O failure and 64 on a configuration
//! error. A configuration error leaves the output directory untouched.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::*;
use config::{resolve, GlobalFlags};
use error::{CliError, EXIT_CONFIG, EXIT_OK, EXIT_VIOLATED};

#[derive(Debug, Parser)]
#[command(name = "qfisher", version, about = "Generalized Fisher information, Cramér-Rao and uncertainty checks")]
struct Cli {
    /// Flat JSON file with parameters; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for the JSON summary, CSV tables and density files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat truncated densities and unconverged runs as violations.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Divergence(DivergenceFlags),
    Fisher(FisherFlags),
    QcrCheck(QcrFlags),
    Minimize(MinimizeFlags),
    Debruijn(DebruijnFlags),
    Uncertainty(UncertaintyFlags),
}

fn execute<E: Experiment>(cli: &Cli, flags: &impl Serialize) -> Result<i32, CliError> {
    let globals = GlobalFlags {
        seed: cli.seed,
        strict: cli.strict.then_some(true),
        out_dir: cli.out_dir.clone(),
    };
    let resolved = resolve::<E::Params>(E::NAME, cli.config.as_deref(), E::defaults(), &globals, flags)?;
    let report = E::run(&resolved.params, &resolved.global)?;

    let mut echo = serde_json::to_value(&resolved.params).expect("parameters serialize");
    if let serde_json::Value::Object(m) = &mut echo {
        m.insert("seed".into(), resolved.global.seed.into());
        m.insert("strict".into(), resolved.global.strict.into());
    }
    output::write(&resolved.global.out_dir, E::NAME, echo, &report)?;
    for v in &report.violations {
        log::error!("violated: {v}");
    }
    Ok(if report.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATED })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = match &cli.command {
        Command::Divergence(f) => execute::<Divergence>(&cli, f),
        Command::Fisher(f) => execute::<Fisher>(&cli, f),
        Command::QcrCheck(f) => execute::<QcrCheck>(&cli, f),
        Command::Minimize(f) => execute::<Minimize>(&cli, f),
        Command::Debruijn(f) => execute::<Debruijn>(&cli, f),
        Command::Uncertainty(f) => execute::<Uncertainty>(&cli, f),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("qfisher: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
