//! Multi-trial Monte Carlo runs and parameter sweeps.
//!
//! Trial `t` draws everything from `RngStream::new(seed, t)`, so a trial's
//! outcome does not depend on which worker ran it. Results are collected in
//! trial order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afsa::{run_afsa_inventory_with_churn, InventoryResult};
use crate::baselines::{run_edfsa_inventory, run_fsa_inventory};
use crate::config::{validate_experiment, ConfigErrors, ExperimentConfig};
use crate::error::Error;
use crate::estimator::AdaptationPolicy;
use crate::model::{Protocol, RoundTrace};
use crate::population::random_population;
use crate::rng::RngStream;

/// Slot counts of one round, without the per-slot detail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: u32,
    pub slots: u32,
    /// 0 for protocols without a reservation phase.
    pub seq_bits: u8,
    pub k_active: u32,
    pub idle: u32,
    pub reserved_true: u32,
    pub detected_collisions: u32,
    pub undetected_collisions: u32,
    pub identified: u32,
    pub round_time_us: f64,
}

impl RoundSummary {
    pub fn from_trace(round: u32, trace: &RoundTrace) -> Self {
        Self {
            round,
            slots: trace.slots,
            seq_bits: trace.seq_bits.unwrap_or(0),
            k_active: trace.k_active,
            idle: trace.idle_count,
            reserved_true: trace.reserved_true_count,
            detected_collisions: trace.detected_collision_count,
            undetected_collisions: trace.undetected_collision_count,
            identified: trace.identified_epcs.len() as u32,
            round_time_us: trace.total_us,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: u32,
    pub rounds_used: u32,
    pub tags_identified: u32,
    /// Initial tags plus arrivals.
    pub ever_present: u32,
    pub total_time_us: f64,
    pub per_tag_mean_us: Option<f64>,
    pub undetected_collisions_total: u64,
    /// False when `max_rounds` ran out with tags still unread.
    pub completed: bool,
    pub rounds: Vec<RoundSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Statistics of per-trial per-tag time over trials that read ≥ 1 tag.
    pub mean_per_tag_us: Option<f64>,
    /// Sample standard deviation; 0 with a single trial.
    pub stddev_per_tag_us: Option<f64>,
    pub min_per_tag_us: Option<f64>,
    pub max_per_tag_us: Option<f64>,
    /// Identified over ever-present, across all trials. 1.0 when no tag was
    /// ever present.
    pub identification_rate: f64,
    pub incomplete_trials: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub per_trial: Vec<TrialResult>,
    pub aggregate: Aggregate,
}

/// Recomputes the aggregate from per-trial records.
pub fn aggregate(per_trial: &[TrialResult]) -> Aggregate {
    let times: Vec<f64> = per_trial.iter().filter_map(|t| t.per_tag_mean_us).collect();
    let (mean, stddev, min, max) = if times.is_empty() {
        (None, None, None, None)
    } else {
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = if times.len() > 1 {
            times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let min = times.iter().copied().fold(f64::INFINITY, f64::min);
        let max = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (Some(mean), Some(var.sqrt()), Some(min), Some(max))
    };
    let identified: u64 = per_trial.iter().map(|t| u64::from(t.tags_identified)).sum();
    let present: u64 = per_trial.iter().map(|t| u64::from(t.ever_present)).sum();
    Aggregate {
        mean_per_tag_us: mean,
        stddev_per_tag_us: stddev,
        min_per_tag_us: min,
        max_per_tag_us: max,
        identification_rate: if present == 0 {
            1.0
        } else {
            identified as f64 / present as f64
        },
        incomplete_trials: per_trial.iter().filter(|t| !t.completed).count() as u32,
    }
}

/// Runs one trial of a validated config.
pub fn run_trial(config: &ExperimentConfig, trial_id: u32) -> Result<TrialResult, Error> {
    let mut rng = RngStream::new(config.seed, u64::from(trial_id));
    let mut tags = random_population(config.k_initial, &mut rng);
    let churn = config.churn();
    let outcome = match config.protocol {
        Protocol::Afsa => {
            let policy = AdaptationPolicy::with_seq_bits(config.seq_bits);
            let initial = policy.initial_frame(config.frame_slots);
            run_afsa_inventory_with_churn(
                &mut tags,
                initial,
                &policy,
                &config.timing,
                &mut rng,
                config.max_rounds,
                &churn,
            )
        }
        Protocol::Fsa => run_fsa_inventory(
            &mut tags,
            config.frame_slots,
            &config.timing,
            &mut rng,
            config.max_rounds,
            &churn,
        ),
        Protocol::Edfsa => run_edfsa_inventory(
            &mut tags,
            config.frame_slots,
            &config.timing,
            &mut rng,
            config.max_rounds,
            &churn,
        ),
    };
    let (inventory, completed) = match outcome {
        Ok(inv) => (inv, true),
        Err(Error::NonTermination(partial)) => (*partial, false),
        Err(e) => return Err(e),
    };
    Ok(summarize(trial_id, config.k_initial, &inventory, completed))
}

fn summarize(trial_id: u32, k_initial: u32, inv: &InventoryResult, completed: bool) -> TrialResult {
    TrialResult {
        trial_id,
        rounds_used: inv.rounds.len() as u32,
        tags_identified: inv.tags_identified,
        ever_present: k_initial + inv.arrivals,
        total_time_us: inv.total_time_us,
        per_tag_mean_us: inv.per_tag_mean_us,
        undetected_collisions_total: inv.undetected_collisions(),
        completed,
        rounds: inv
            .rounds
            .iter()
            .enumerate()
            .map(|(i, r)| RoundSummary::from_trace(i as u32, r))
            .collect(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Invalid(#[from] ConfigErrors),
    #[error("trial {trial}: {source}")]
    Trial { trial: u32, source: Error },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Runs every trial on the global rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    let config = validate_experiment(*config)?;
    let per_trial = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(&config, t).map_err(|source| ExperimentError::Trial { trial: t, source }))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregate = aggregate(&per_trial);
    Ok(ExperimentResult {
        config,
        per_trial,
        aggregate,
    })
}

/// Runs on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<ExperimentResult, ExperimentError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    pool.install(|| run_experiment(config))
}

/// One sweep cell: the swept parameter values and the run's outcome.
#[derive(Debug)]
pub struct SweepCell {
    pub labels: Vec<(String, String)>,
    pub config: ExperimentConfig,
    pub outcome: Result<ExperimentResult, ExperimentError>,
}

/// Runs each config independently. A failing cell keeps its error and the
/// sweep moves on.
pub fn sweep(cells: Vec<(Vec<(String, String)>, ExperimentConfig)>) -> Vec<SweepCell> {
    cells
        .into_iter()
        .map(|(labels, config)| SweepCell {
            outcome: run_experiment(&config),
            labels,
            config,
        })
        .collect()
}
