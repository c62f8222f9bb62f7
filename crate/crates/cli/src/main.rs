//! `blochhom`: runs the band, physical, matching, modeling and convergence
//! experiments from a TOML configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "blochhom", version, about = "Bloch-wave homogenization experiments")]
struct Cli {
    /// TOML run configuration; omitted keys take the reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `workers` in the configuration).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Bloch eigenvalues over the k grid: bands.csv, bands.json.
    Band,
    /// Physical eigenvalues and requested profiles: physical.csv, mode_<p>.csv.
    Physical,
    /// Best two-scale match per physical mode: match.csv, match.json.
    Match,
    /// Residual-minimising ℓ for one (k, n): model.json, model.csv.
    Model,
    /// Error decay over an ε sequence: converge.csv, converge.json.
    Converge,
}

fn run(cli: Cli) -> CliResult<()> {
    let source = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let mut cfg = LoadedConfig::parse(&source)?;
    if let Some(out) = cli.out {
        cfg.config.out = out;
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        cfg.config.workers = Some(w);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.config.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let out = OutDir::new(&cfg.config.out);
    pool.install(|| match cli.command {
        Command::Band => commands::band(&cfg, &out),
        Command::Physical => commands::physical(&cfg, &out),
        Command::Match => commands::matching(&cfg, &out),
        Command::Model => commands::model(&cfg, &out),
        Command::Converge => commands::converge(&cfg, &out),
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("blochhom: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
