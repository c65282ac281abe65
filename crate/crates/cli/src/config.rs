//! Experiment parameters: built-in defaults, overridden by an optional TOML file, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use qpkc_core::gmn::FidelityMode;
use qpkc_core::protocol::{AdversaryStrategy, NoiseModel, SessionConfig};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::report::OutputFormat;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Approx,
    Exact,
}

impl From<ModeName> for FidelityMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Approx => FidelityMode::Approximation,
            ModeName::Exact => FidelityMode::ExactSum,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AdversaryName {
    #[default]
    None,
    Intercept,
    Entangle,
    Dos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Table1Params {
    pub k: Vec<u64>,
    pub mode: ModeName,
    pub round4: bool,
}

impl Default for Table1Params {
    fn default() -> Self {
        Self {
            k: vec![10, 20, 50, 100, 1000],
            mode: ModeName::Approx,
            round4: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionParams {
    pub adversary: AdversaryName,
    pub n: usize,
    /// `None` selects `max(8, ⌈n/4⌉)`.
    pub decoys: Option<usize>,
    pub msg_len: usize,
    pub digest_bits: u32,
    pub attack_fraction: f64,
    pub flip_prob: f64,
    pub noise: f64,
    pub abort_threshold: f64,
    pub recycle_fraction: f64,
}

impl Default for SessionParams {
    fn default() -> Self {
        let base = SessionConfig::default();
        Self {
            adversary: AdversaryName::None,
            n: base.key_length,
            decoys: base.decoy_count,
            msg_len: base.message_length,
            digest_bits: base.digest_bits,
            attack_fraction: 1.0,
            flip_prob: 1.0,
            noise: 0.0,
            abort_threshold: base.abort_threshold,
            recycle_fraction: base.recycle_test_fraction,
        }
    }
}

impl SessionParams {
    /// Protocol configuration for one session; the per-trial seed is filled in later.
    pub fn session_config(&self) -> Result<SessionConfig> {
        let config = SessionConfig {
            key_length: self.n,
            decoy_count: self.decoys,
            message_length: self.msg_len,
            digest_bits: self.digest_bits,
            recycle_test_fraction: self.recycle_fraction,
            abort_threshold: self.abort_threshold,
            noise: (self.noise > 0.0).then_some(NoiseModel {
                depolarizing_probability: self.noise,
            }),
            message: None,
            seed: 0,
        };
        config.validate()?;
        Ok(config)
    }

    /// The adversary at attack strength `level`: the attacked fraction for intercept and
    /// entangle, the flip probability for dos, ignored for none.
    pub fn adversary_at(&self, level: f64) -> Result<AdversaryStrategy> {
        let strategy = match self.adversary {
            AdversaryName::None => AdversaryStrategy::none(),
            AdversaryName::Intercept => AdversaryStrategy::intercept(level),
            AdversaryName::Entangle => AdversaryStrategy::entangle(level),
            AdversaryName::Dos => AdversaryStrategy::dos(level),
        };
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn adversary(&self) -> Result<AdversaryStrategy> {
        match self.adversary {
            AdversaryName::Dos => self.adversary_at(self.flip_prob),
            _ => self.adversary_at(self.attack_fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    /// `start:stop:step`, both ends inclusive.
    pub fractions: String,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            fractions: "0:1:0.1".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateParams {
    pub k: u64,
    pub msg_len: usize,
    /// Resolution exponent of the attacked key.
    pub n: u32,
    /// Replaces `1 − 1/(4K)` by a fixed estimation fidelity.
    pub fidelity: Option<f64>,
}

impl Default for EstimateParams {
    fn default() -> Self {
        Self {
            k: 10,
            msg_len: 1,
            n: 16,
            fidelity: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub table1: Table1Params,
    pub session: SessionParams,
    pub sweep: SweepParams,
    pub estimate: EstimateParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 1000,
            out: None,
            format: OutputFormat::Csv,
            table1: Table1Params::default(),
            session: SessionParams::default(),
            sweep: SweepParams::default(),
            estimate: EstimateParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        toml::from_str(&text)
            .map_err(|e| HarnessError::Usage(format!("{}: {}", path.display(), e.message())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Internal(e.to_string()))
    }

    pub fn validate_common(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(HarnessError::Usage("trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Parses `start:stop:step` into an inclusive grid. Points are computed as `start + i·step` and
/// rounded to 12 decimals so that e.g. `0:1:0.1` ends exactly at `1`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| HarnessError::Usage(format!("fractions '{spec}': {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(&format!("'{s}' is not a number")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0 && step.is_finite()) {
        return Err(bad("step must be positive"));
    }
    if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) {
        return Err(bad("fractions must lie in [0, 1]"));
    }
    if start > stop {
        return Err(bad("empty grid"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

/// Parses a comma-separated list of positive copy counts.
pub fn parse_k_list(spec: &str) -> Result<Vec<u64>> {
    let list = spec
        .split(',')
        .map(|s| match s.trim().parse::<u64>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(HarnessError::Usage(format!(
                "K = '{}' is not a positive integer",
                s.trim()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(list)
}
