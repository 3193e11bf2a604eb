use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use lortomo::config::{Experiment, ExperimentConfig};
use lortomo::report::Status;

#[derive(Parser)]
#[command(
    name = "lortomo",
    version,
    about = "Boundary rigidity experiments for stationary Lorentzian metrics"
)]
struct Cli {
    /// TOML experiment configuration; the built-in acceptance configuration
    /// when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Metric fields on a grid.
    Metric {
        #[command(subcommand)]
        action: Dump,
    },
    /// Bicharacteristics with their Hamiltonian.
    Flow {
        #[command(subcommand)]
        action: Trace,
    },
    /// Time separations of boundary pairs.
    Tau {
        #[command(subcommand)]
        action: Table,
    },
    /// Scattering relation and the pullback-pair checks.
    Scatter,
    /// Straightening diffeomorphisms.
    Straighten,
    /// The integral identity and the B-block asymptotics.
    Identity {
        #[command(subcommand)]
        action: RunCmd,
    },
    /// Fourier-side experiments.
    Fourier {
        #[command(subcommand)]
        action: RunCmd,
    },
    /// The Riemannian pipeline.
    Riemannian {
        #[command(subcommand)]
        action: RunCmd,
    },
    /// Every stage and every acceptance criterion.
    Full,
    /// Writes the built-in configuration as TOML.
    Config,
}

#[derive(Subcommand)]
enum Dump {
    Dump,
}

#[derive(Subcommand)]
enum Trace {
    Trace,
}

#[derive(Subcommand)]
enum Table {
    Table,
}

#[derive(Subcommand)]
enum RunCmd {
    Run,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.experiment = match cli.command {
        Command::Metric { .. } => Experiment::Metric,
        Command::Flow { .. } => Experiment::Flow,
        Command::Tau { .. } => Experiment::Tau,
        Command::Scatter => Experiment::Scatter,
        Command::Straighten => Experiment::Straighten,
        Command::Identity { .. } => Experiment::Identity,
        Command::Fourier { .. } => Experiment::Fourier,
        Command::Riemannian { .. } => Experiment::Riemannian,
        Command::Full => Experiment::Full,
        Command::Config => {
            print!("{}", cfg.to_toml());
            return Ok(ExitCode::SUCCESS);
        }
    };
    let report = lortomo::run_experiment(&cfg, &cli.out, cli.workers)?;
    for c in report
        .criteria
        .iter()
        .filter(|c| c.status != Status::NotRun)
    {
        println!("{}", c.line());
    }
    for e in &report.errors {
        eprintln!("stage error: {e}");
    }
    println!("config {} -> {}", report.config_hash, cli.out.display());
    let failed = report.criteria.iter().any(|c| c.status == Status::Fail);
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}
