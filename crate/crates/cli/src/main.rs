//! `codesign`: runs the co-design experiments from a JSON config and writes
//! a CSV/JSON result bundle.

mod commands;
mod config;
mod experiment;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use codesign::Execution;

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "codesign", version, about = "Architecture/accelerator co-design experiments")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the evaluation grids (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every grid on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or reuse) the full performance table.
    Table,
    /// Latency and energy SRCC matrices and CDFs.
    Srcc {
        /// Use an existing table CSV instead of a config.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Optimal-architecture set on the proxy (every accelerator with `all_proxies`).
    Stage1,
    /// Compare the three strategies on every constraint triple.
    Codesign,
    /// Mixed-dataflow plans and their SRCC CDFs.
    Mixed,
    /// Summarize an existing bundle.
    Report,
}

#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn runtime<E: Into<anyhow::Error>>(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<codesign::Error> for CliError {
    fn from(e: codesign::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn load(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config(vec!["--config is required".into()]))?;
    let mut config = ExperimentConfig::load(path).map_err(CliError::Config)?;
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    let out = config.output_dir.clone();
    Ok((config, out))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config(vec!["--threads must be at least 1".into()]));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(CliError::runtime)?;
    }
    let mode = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    match &cli.command {
        Command::Table => {
            let (config, out) = load(cli)?;
            commands::table(&config, &out, mode)
        }
        Command::Srcc { table: Some(table) } => {
            let loaded = cli.config.as_ref().map(|_| load(cli)).transpose()?;
            let out = match (&cli.out, &loaded) {
                (Some(out), _) => out.clone(),
                (None, Some((_, out))) => out.clone(),
                (None, None) => table.parent().map_or_else(|| PathBuf::from("."), PathBuf::from),
            };
            commands::srcc_cmd(None, Some(table), &out, mode)
        }
        Command::Srcc { table: None } => {
            let (config, out) = load(cli)?;
            commands::srcc_cmd(Some(&config), None, &out, mode)
        }
        Command::Stage1 => {
            let (config, out) = load(cli)?;
            commands::stage1(&config, &out, mode)
        }
        Command::Codesign => {
            let (config, out) = load(cli)?;
            commands::codesign(&config, &out, mode)
        }
        Command::Mixed => {
            let (config, out) = load(cli)?;
            commands::mixed(&config, &out, mode)
        }
        Command::Report => {
            let out = match &cli.out {
                Some(out) => out.clone(),
                None => load(cli)?.1,
            };
            commands::report(&out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.log_level).format_timestamp(None).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(problems)) => {
            eprintln!("invalid configuration:");
            for p in problems {
                eprintln!("  - {p}");
            }
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
