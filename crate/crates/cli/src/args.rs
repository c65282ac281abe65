//! Command-line surface. Every flag is optional so that it only overrides values it names.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_k_list, AdversaryName, ExperimentConfig, ModeName};
use crate::error::Result;
use crate::report::OutputFormat;

#[derive(Debug, Parser)]
#[command(
    name = "qpkc-lab",
    version,
    about = "Bell-pair QPKC and rotation-key attack experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args, Default)]
pub struct SharedArgs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// TOML file with defaults; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form fidelity, information and error rate per copy count.
    Table1(Table1Args),
    /// Independent protocol sessions, one row each plus a summary.
    Session(SessionArgs),
    /// Aggregate session statistics over a grid of attack strengths.
    Sweep(SweepArgs),
    /// Monte Carlo of the estimate-and-resend attack on rotation keys.
    EstimateSim(EstimateArgs),
}

/// A whole comma-separated list is one flag value.
type KList = Vec<u64>;

#[derive(Debug, Args, Default)]
pub struct Table1Args {
    /// Comma-separated copy counts.
    #[arg(long, value_parser = parse_k_list)]
    pub k: Option<KList>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    /// Round values to 4 decimals on output.
    #[arg(long)]
    pub round4: bool,
}

#[derive(Debug, Args, Default)]
pub struct SessionArgs {
    #[arg(long, value_enum)]
    pub adversary: Option<AdversaryName>,
    /// Bell pairs per session.
    #[arg(long = "n")]
    pub n: Option<usize>,
    #[arg(long)]
    pub decoys: Option<usize>,
    #[arg(long)]
    pub msg_len: Option<usize>,
    #[arg(long)]
    pub digest_bits: Option<u32>,
    #[arg(long)]
    pub attack_fraction: Option<f64>,
    #[arg(long)]
    pub flip_prob: Option<f64>,
    /// Depolarizing probability per transit qubit.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub abort_threshold: Option<f64>,
    #[arg(long)]
    pub recycle_fraction: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub session: SessionArgs,
    /// `start:stop:step` grid of attack fractions (flip probabilities for dos).
    #[arg(long)]
    pub fractions: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct EstimateArgs {
    /// Copies available to the estimator.
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub msg_len: Option<usize>,
    /// Resolution exponent of the attacked key.
    #[arg(long = "n")]
    pub n: Option<u32>,
    /// Fixed estimation fidelity instead of `1 − 1/(4K)`.
    #[arg(long)]
    pub fidelity: Option<f64>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl SessionArgs {
    fn apply(self, config: &mut ExperimentConfig) {
        let s = &mut config.session;
        set(&mut s.adversary, self.adversary);
        set(&mut s.n, self.n);
        if self.decoys.is_some() {
            s.decoys = self.decoys;
        }
        set(&mut s.msg_len, self.msg_len);
        set(&mut s.digest_bits, self.digest_bits);
        set(&mut s.attack_fraction, self.attack_fraction);
        set(&mut s.flip_prob, self.flip_prob);
        set(&mut s.noise, self.noise);
        set(&mut s.abort_threshold, self.abort_threshold);
        set(&mut s.recycle_fraction, self.recycle_fraction);
    }
}

impl Cli {
    /// Defaults, then the configuration file, then flags.
    pub fn resolve(self) -> Result<(ExperimentConfig, Option<Command>, bool)> {
        let shared = self.shared;
        let mut config = match &shared.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        set(&mut config.seed, shared.seed);
        set(&mut config.trials, shared.trials);
        if shared.out.is_some() {
            config.out = shared.out;
        }
        set(&mut config.format, shared.format);

        let mut command = self.command;
        match command.as_mut() {
            Some(Command::Table1(a)) => {
                set(&mut config.table1.k, a.k.take());
                set(&mut config.table1.mode, a.mode);
                config.table1.round4 |= a.round4;
            }
            Some(Command::Session(a)) => std::mem::take(a).apply(&mut config),
            Some(Command::Sweep(a)) => {
                std::mem::take(&mut a.session).apply(&mut config);
                set(&mut config.sweep.fractions, a.fractions.take());
            }
            Some(Command::EstimateSim(a)) => {
                let e = &mut config.estimate;
                set(&mut e.k, a.k);
                set(&mut e.msg_len, a.msg_len);
                set(&mut e.n, a.n);
                if a.fidelity.is_some() {
                    e.fidelity = a.fidelity;
                }
            }
            None => {}
        }
        Ok((config, command, shared.show_config))
    }
}
