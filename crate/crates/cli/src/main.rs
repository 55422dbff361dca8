//! `hetrecip`: analyze, simulate, embed, diagnose and verify from one config file.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "hetrecip", version, about = "Preferential attachment with heterogeneous reciprocity")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for both the simulation and the Monte Carlo estimates.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the equilibrium and report spectra, regularity and predicted tails.
    Analyze,
    /// Grow one network.
    Simulate {
        #[arg(long)]
        n_steps: Option<u64>,
    },
    /// Estimate the limiting joint degree pmf.
    Embed {
        #[arg(long)]
        replicates: Option<u64>,
        /// Grid size in both coordinates.
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Tail diagnostics on a degree or pmf CSV, or on a fresh simulation.
    Diagnose {
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long)]
        n_steps: Option<u64>,
        /// Replicate count used to expand a pmf input.
        #[arg(long)]
        replicates: Option<u64>,
    },
    /// Compare the embedding chain with the exact graph law.
    Verify {
        #[arg(long)]
        replicates: Option<u64>,
    },
}

fn execute(cli: Cli) -> Result<commands::Artifacts, CliError> {
    let path = cli.common.config.as_ref().ok_or_else(|| CliError::InvalidConfig("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    let mut o = Overrides { seed: cli.common.seed, out: cli.common.out.clone(), ..Overrides::default() };
    match &cli.command {
        Command::Simulate { n_steps } => o.n_steps = *n_steps,
        Command::Embed { replicates, kmax } => {
            o.replicates = *replicates;
            o.kmax = *kmax;
        }
        Command::Diagnose { n_steps, replicates, .. } => {
            o.n_steps = *n_steps;
            o.replicates = *replicates;
        }
        Command::Verify { replicates } => o.replicates = *replicates,
        Command::Analyze => {}
    }
    cfg.apply(&o)?;
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::InvalidConfig("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Analyze => commands::analyze(&cfg),
        Command::Simulate { .. } => commands::simulate(&cfg),
        Command::Embed { .. } => commands::embed(&cfg),
        Command::Diagnose { input, .. } => commands::diagnose(&cfg, input.as_deref()),
        Command::Verify { .. } => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(a) => {
            for p in a.written() {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
