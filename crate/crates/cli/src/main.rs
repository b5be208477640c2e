//! `herald-sim`: heralded GHZ and NOON-fringe simulations from the command
//! line.

mod config;
mod error;
mod output;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Flags, Workflow};
use error::CliError;

#[derive(Parser)]
#[command(name = "herald-sim", version, about = "Heralded multi-photon entanglement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Herald probability and GHZ fidelity for one configuration (JSON).
    Herald(Flags),
    /// Full-coincidence fringe against mirror phase (CSV plus JSON summary).
    NoonScan(Flags),
    /// Bucket and number-resolving heralding over a range of tau.
    SweepTau(Flags),
    /// Heralding over a range of detector efficiencies.
    EtaScan(Flags),
}

/// Caps the worker pool from `HERALD_SIM_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("HERALD_SIM_THREADS") else {
        return Ok(());
    };
    let bad = || CliError::Config {
        key: "HERALD_SIM_THREADS".into(),
        message: format!("expected a positive integer, got {text:?}"),
    };
    let threads: usize = text.trim().parse().map_err(|_| bad())?;
    if threads == 0 {
        return Err(bad());
    }
    // a second initialization only happens in tests; keep the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (workflow, flags) = match &cli.command {
        Command::Herald(f) => (Workflow::Herald, f),
        Command::NoonScan(f) => (Workflow::NoonScan, f),
        Command::SweepTau(f) => (Workflow::SweepTau, f),
        Command::EtaScan(f) => (Workflow::EtaScan, f),
    };
    let outcome = configure_threads().and_then(|_| config::resolve(workflow, flags)).and_then(|c| run::execute(&c));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("herald-sim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
