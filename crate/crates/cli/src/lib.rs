//! Experiment harness: closed-form attack figures per copy count, seeded protocol sessions, attack-strength
//! sweeps and a Monte Carlo of the rotation-key estimation attack, reported as CSV or JSON.
//!
//! Every trial draws from its own seed derived from `(seed, trial index)`, so reports are
//! byte-identical across runs and thread counts.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_estimate_sim, cmd_session, cmd_sweep, cmd_table1};
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
pub use report::{write_report, OutputFormat, Report, ReportRow, Value};

use args::Command;

/// Runs one subcommand against a resolved configuration.
pub fn run_command(command: &Command, config: &ExperimentConfig) -> Result<Report> {
    match command {
        Command::Table1(_) => cmd_table1(config),
        Command::Session(_) => cmd_session(config),
        Command::Sweep(_) => cmd_sweep(config),
        Command::EstimateSim(_) => cmd_estimate_sim(config),
    }
}
