//! `uncplab`: run one configured experiment and write its artifacts.

mod config;
mod experiments;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, Experiment};
use run::{Failure, Run};

#[derive(Parser)]
#[command(
    name = "uncplab",
    version,
    about = "Numerical laboratory for spectral inequalities of Schrödinger operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigendecomposition, projector and Poisson algebra, operator splitting.
    Project(Args),
    /// Observability sweep and exponential-law fit.
    Observe(Args),
    /// Carleman weights, constants and the three-term bound.
    Carleman(Args),
    /// Interpolation certificates.
    Interp(Args),
    /// End-to-end spectral inequality pipeline.
    Pipeline(Args),
    /// Thick set generation and verification.
    Thickness(Args),
}

#[derive(clap::Args)]
struct Args {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, value_name = "DIR", default_value = "uncplab-out")]
    out: PathBuf,
    /// Seed override for every random draw.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Progress on stderr.
    #[arg(long)]
    verbose: bool,
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("UNCPLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("UNCPLAB_THREADS must be a positive integer, got `{v}`"))?;
    if n == 0 {
        return Err("UNCPLAB_THREADS must be a positive integer, got `0`".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn execute(experiment: Experiment, args: &Args) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(path) => Config::load(path, experiment, args.seed)?,
        None => Config::parse("<defaults>", "", experiment, args.seed)?,
    };
    let mut run = Run::new(&cfg, &args.out, args.verbose)?;
    run.log(format!("config_sha256={}", run.hash));
    match experiment {
        Experiment::Project => experiments::project::run(&mut run)?,
        Experiment::Observe => experiments::observe::run(&mut run)?,
        Experiment::Carleman => experiments::carleman::run(&mut run)?,
        Experiment::Interp => experiments::interp::run(&mut run)?,
        Experiment::Pipeline => experiments::pipeline::run(&mut run)?,
        Experiment::Thickness => experiments::thickness::run(&mut run)?,
    }
    run.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let (experiment, args) = match &cli.command {
        Command::Project(a) => (Experiment::Project, a),
        Command::Observe(a) => (Experiment::Observe, a),
        Command::Carleman(a) => (Experiment::Carleman, a),
        Command::Interp(a) => (Experiment::Interp, a),
        Command::Pipeline(a) => (Experiment::Pipeline, a),
        Command::Thickness(a) => (Experiment::Thickness, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.status())
        }
    }
}
