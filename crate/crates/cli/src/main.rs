//! `grushin-lab`: fixture construction, solving, profiles and inequality batches.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 usage or config error,
//! 3 numerical failure.

mod commands;
mod config;
mod output;
mod selftest;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] grushin_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use grushin_core::Error as E;
        match self {
            CliError::Core(
                E::NonConvergence { .. }
                | E::Stagnation { .. }
                | E::DivisionHazard { .. }
                | E::DegenerateFrequency { .. }
                | E::DegenerateSampling { .. },
            ) => 3,
            _ => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "grushin-lab", version, about = "Numerical lab for the Baouendi-Grushin operator")]
struct Cli {
    /// Config file in `key = value` format.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Config override, `key=value`; may be repeated and wins over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Identity suite on analytic forms and the configured grid.
    Selftest,
    /// Manufactured pair from an expression for u.
    Manufacture {
        #[arg(long)]
        u: String,
        #[arg(long, default_value = "manufactured")]
        label: String,
    },
    /// Dirichlet problem with potential V and boundary data for u and w.
    Solve {
        #[arg(long)]
        v: String,
        #[arg(long)]
        gu: String,
        #[arg(long)]
        gw: String,
        #[arg(long, default_value = "solved")]
        label: String,
    },
    /// H, I, N and M on the configured radii, with the monotonicity verdict.
    Frequency {
        #[arg(long)]
        pair: PathBuf,
    },
    /// Three-ball inequality on one radius triple.
    ThreeBall {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        r3: f64,
    },
    /// Hardy, Rellich, Zu, Caccioppoli and Moser batch.
    Inequalities {
        #[arg(long)]
        pair: PathBuf,
    },
    /// Vanishing-order fit and the sup-norm bound check.
    VanishingOrder {
        #[arg(long)]
        pair: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            RunConfig::parse(&text).map_err(CliError::Usage)?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k, v).map_err(CliError::Usage)?;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = load_config(&cli)?;
    let mut inputs = Vec::new();
    if let Some(path) = &cli.config {
        inputs.push(output::hash_file(path)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} workers: {e}", cfg.workers)))?;
    pool.install(|| match &cli.command {
        Command::Selftest => commands::selftest(&cfg, inputs),
        Command::Manufacture { u, label } => commands::manufacture(&cfg, inputs, u, label),
        Command::Solve { v, gu, gw, label } => commands::solve(&cfg, inputs, v, gu, gw, label),
        Command::Frequency { pair } => commands::frequency(&cfg, inputs, pair),
        Command::ThreeBall { pair, r1, r2, r3 } => commands::three_ball(&cfg, inputs, pair, [*r1, *r2, *r3]),
        Command::Inequalities { pair } => commands::inequalities(&cfg, inputs, pair),
        Command::VanishingOrder { pair } => commands::vanishing_order(&cfg, inputs, pair),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
