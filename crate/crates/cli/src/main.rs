//! Batch front door for the pricing library: load a JSON scenario, run one
//! of the pricing / audit / simulation / Riccati commands, and emit CSV
//! tables and JSON reports.  Every command is a deterministic function of
//! the scenario file — the seed is part of it — so output files are
//! byte-identical across reruns.

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Artifacts;

/// A command failure with its exit-code class: invalid input (2) or an
/// operation the scenario's model does not support (3).  Audit violations
/// are not failures — they are results — and exit with code 1.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Unsupported(String),
}

impl From<riskytimes::Error> for Failure {
    fn from(e: riskytimes::Error) -> Self {
        match e {
            riskytimes::Error::Unsupported(m) => Failure::Unsupported(m),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "riskytimes",
    version,
    about = "Defaultable bond pricing, drift-condition audits and Monte Carlo checks from JSON scenarios"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form bond prices for the scenario's maturities.
    Price(RunArgs),
    /// No-arbitrage drift-condition audit; exit 0 iff certified.
    Audit(RunArgs),
    /// Monte Carlo estimates with closed-form cross-checks.
    Simulate(RunArgs),
    /// Backward Riccati solve with the closed form side by side.
    Riccati(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Residual tolerance for the audit certificate (informational for
    /// riccati; unused elsewhere).
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    /// Directory for artifact files; without it results go to stdout only.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cmd: &Cmd) -> Result<u8, Failure> {
    let args = match cmd {
        Cmd::Price(a) | Cmd::Audit(a) | Cmd::Simulate(a) | Cmd::Riccati(a) => a,
    };
    if !(args.tolerance > 0.0 && args.tolerance.is_finite()) {
        return Err(Failure::Invalid(format!(
            "tolerance = {} must be positive",
            args.tolerance
        )));
    }
    let loaded = scenario::load(&args.scenario)?;
    let artifacts = Artifacts::new(args.out.clone(), &loaded.scenario.outputs);
    match cmd {
        Cmd::Price(_) => commands::price(&loaded, &artifacts),
        Cmd::Audit(_) => commands::run_audit(&loaded, args.tolerance, &artifacts),
        Cmd::Simulate(_) => commands::simulate(&loaded, &artifacts),
        Cmd::Riccati(_) => commands::riccati(&loaded, args.tolerance, &artifacts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Unsupported(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
