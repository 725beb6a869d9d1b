//! `sll <subcommand> --config <path> [--seed N] [--out DIR]`
//!
//! Exit codes: 0 when every check passes, 1 when a check fails or a run
//! aborts, 2 for usage and config errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sll::harness::{run, Experiment, ExperimentConfig};
use sll::Error;

#[derive(Parser)]
#[command(name = "sll", version, about = "Run one experiment and write report.json plus CSV outputs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pathwise distance to the limit system along the eps ladder
    Converge(Args),
    /// Pseudo-energy balance residuals
    EnergyAudit(Args),
    /// Ornstein-Uhlenbeck second moments
    OuCheck(Args),
    /// Recombination of the velocity splitting
    SplitCheck(Args),
    /// Kinetic moment bound and uniform-in-eps boundedness
    BoundCheck(Args),
    /// One coupled trajectory per eps
    Simulate(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(&self) -> (Experiment, &Args) {
        match self {
            Command::Converge(a) => (Experiment::Converge, a),
            Command::EnergyAudit(a) => (Experiment::EnergyAudit, a),
            Command::OuCheck(a) => (Experiment::OuCheck, a),
            Command::SplitCheck(a) => (Experiment::SplitCheck, a),
            Command::BoundCheck(a) => (Experiment::BoundCheck, a),
            Command::Simulate(a) => (Experiment::Simulate, a),
        }
    }
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::InvalidParameter { .. })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = cli.command.split();

    let mut cfg = match ExperimentConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("sll: {e}");
            return ExitCode::from(2);
        }
    };
    match cfg.experiment {
        Some(e) if e != experiment => {
            eprintln!("sll: config is for `{e}` but the subcommand is `{experiment}`");
            return ExitCode::from(2);
        }
        _ => cfg.experiment = Some(experiment),
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }

    let outcome = match run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("sll: {e}");
            return ExitCode::from(if is_config_error(&e) { 2 } else { 1 });
        }
    };
    if let Err(e) = outcome.write(&cfg.out_dir) {
        eprintln!("sll: cannot write {}: {e}", cfg.out_dir.display());
        return ExitCode::from(1);
    }
    println!(
        "{experiment}: {} ({})",
        if outcome.passed { "pass" } else { "FAIL" },
        cfg.out_dir.display()
    );
    ExitCode::from(if outcome.passed { 0 } else { 1 })
}
