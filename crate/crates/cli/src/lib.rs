//! Library side of the `gmnash` binary: configuration, subcommands and
//! output formats. Exposed so tests can drive the commands in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gmnash::Execution;

pub use commands::{cmd_moments, cmd_nash, cmd_sweep, with_threads};
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "gmnash",
    version,
    about = "LQ feedback Nash games under Gauss-Markov execution deviations"
)]
pub struct Cli {
    /// Print the built-in default configuration and exit.
    #[arg(long)]
    pub dump_default_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the feedback Nash game and write gains, value matrices and diagnostics.
    Nash(CommonArgs),
    /// Propagate analytic moments and write the sigma0 scaling table and bounds.
    Moments(CommonArgs),
    /// Paired Monte Carlo sweep of nominal vs. predictive policies.
    Sweep(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// TOML configuration; the built-in default is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `output.directory` from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `mc.base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `mc.trials`.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads for Monte Carlo trials.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.mc.base_seed = seed;
        }
        if let Some(trials) = self.trials {
            config.mc.trials = trials;
        }
        let out = self
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(&config.output.directory));
        Ok((config, out))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if cli.dump_default_config {
        print!("{}", config::DEFAULT_CONFIG);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Validation(
            "no subcommand given (expected nash, moments or sweep)".into(),
        ));
    };
    match command {
        Command::Nash(args) => {
            let (config, out) = args.resolve()?;
            cmd_nash(&config, &out)
        }
        Command::Moments(args) => {
            let (config, out) = args.resolve()?;
            cmd_moments(&config, &out)
        }
        Command::Sweep(args) => {
            let (config, out) = args.resolve()?;
            with_threads(args.threads, || {
                cmd_sweep(&config, &out, Execution::Parallel)
            })?
        }
    }
}
