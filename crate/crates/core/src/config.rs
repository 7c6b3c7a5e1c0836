//! Experiment configuration and its validation.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Protocol, SeqBits, TimingModel, MAX_SEQ_BITS};
use crate::population::Churn;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub k_initial: u32,
    /// Slot count of the first frame.
    pub frame_slots: u32,
    pub seq_bits: SeqBits,
    pub trials: u32,
    pub seed: u64,
    pub max_rounds: u32,
    /// Expected new tags per round.
    pub arrival_rate: f64,
    /// Per-tag, per-round probability of leaving.
    pub departure_prob: f64,
    #[serde(default)]
    pub timing: TimingModel,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            protocol: Protocol::Afsa,
            k_initial: 100,
            frame_slots: 128,
            seq_bits: SeqBits::Auto,
            trials: 25,
            seed: 1,
            max_rounds: 1000,
            arrival_rate: 0.0,
            departure_prob: 0.0,
            timing: TimingModel::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn churn(&self) -> Churn {
        Churn {
            arrival_rate: self.arrival_rate,
            departure_prob: self.departure_prob,
        }
    }

    pub fn is_static(&self) -> bool {
        self.churn().is_static()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigViolation {
    #[error("slots must be ≥ 1")]
    ZeroSlots,
    #[error("seq_bits must be in [1,16]")]
    SeqBitsOutOfRange(u8),
    #[error("trials must be ≥ 1")]
    ZeroTrials,
    #[error("max_rounds must be ≥ 1")]
    ZeroMaxRounds,
    #[error("arrival_rate must be ≥ 0")]
    NegativeArrivalRate(f64),
    #[error("departure_prob must be in [0,1]")]
    DepartureProbOutOfRange(f64),
    #[error("invalid timing: {0}")]
    Timing(&'static str),
}

/// Every violation found in a config, in field order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigViolation>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Returns the config unchanged when valid, otherwise all violations.
pub fn validate_experiment(config: ExperimentConfig) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errors = Vec::new();
    if config.frame_slots == 0 {
        errors.push(ConfigViolation::ZeroSlots);
    }
    if let SeqBits::Fixed(n) = config.seq_bits {
        if !(1..=MAX_SEQ_BITS).contains(&n) {
            errors.push(ConfigViolation::SeqBitsOutOfRange(n));
        }
    }
    if config.trials == 0 {
        errors.push(ConfigViolation::ZeroTrials);
    }
    if config.max_rounds == 0 {
        errors.push(ConfigViolation::ZeroMaxRounds);
    }
    // Written so NaN fails too.
    if !(config.arrival_rate >= 0.0 && config.arrival_rate.is_finite()) {
        errors.push(ConfigViolation::NegativeArrivalRate(config.arrival_rate));
    }
    if !(0.0..=1.0).contains(&config.departure_prob) {
        errors.push(ConfigViolation::DepartureProbOutOfRange(config.departure_prob));
    }
    if let Err(crate::error::Error::InvalidTiming(why)) = config.timing.validate() {
        errors.push(ConfigViolation::Timing(why));
    }
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors))
    }
}
