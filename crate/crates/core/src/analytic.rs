//! Closed-form slot expectations, round duration and the optimal
//! reservation sequence length.
//!
//! Tag counts are real-valued so the same functions serve both configured
//! populations and backlog estimates. With `K` tags choosing uniformly among
//! `N` slots:
//!
//! ```text
//! E[R]  = K (1 - 1/N)^(K-1)          truly reserved (single-occupant) slots
//! E[I]  = N (1 - 1/N)^K              idle slots
//! E[U]  = N - E[I] - E[R]            multi-occupant slots
//! E[UC] = E[U] · 2^-n                multi-occupant slots that look reserved
//! S     = E[R] + E[UC]               slots the reader schedules for data
//! ```

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{check_seq_bits, ExpectedSlotProfile, TimingModel};

/// Probability that colliding tags picked the same sequence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SameSequenceFactor {
    /// `2^-n`, the factor the round-duration expansion is built on.
    #[default]
    PerSequence,
    /// `2^-(n-1)`, as written in the undetected-collision sum. Only for
    /// sensitivity runs.
    Halved,
}

impl SameSequenceFactor {
    pub fn probability(self, seq_bits: u8) -> f64 {
        match self {
            SameSequenceFactor::PerSequence => (-f64::from(seq_bits)).exp2(),
            SameSequenceFactor::Halved => (1.0 - f64::from(seq_bits)).exp2(),
        }
    }
}

/// Coefficients of `n* = log_coeff · log10(arg_coeff · E[U] / N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalSeqConstants {
    pub log_coeff: f64,
    pub arg_coeff: f64,
}

impl Default for OptimalSeqConstants {
    fn default() -> Self {
        Self {
            log_coeff: 3.32,
            arg_coeff: 19.13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalSeqLen {
    pub raw: f64,
    /// Nearest integer to `raw` (ties up), at least 1 and at most 16.
    pub rounded: u8,
}

fn check_slots(slots: u32) -> Result<(), Error> {
    if slots == 0 {
        Err(Error::ZeroSlots)
    } else {
        Ok(())
    }
}

/// E[R]: expected number of slots holding exactly one tag.
pub fn expected_reserved(tags: f64, slots: u32) -> Result<f64, Error> {
    check_slots(slots)?;
    if tags <= 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 - 1.0 / f64::from(slots);
    Ok(tags * q.powf(tags - 1.0))
}

/// E[I]: expected number of empty slots.
pub fn expected_idle(tags: f64, slots: u32) -> Result<f64, Error> {
    check_slots(slots)?;
    let n = f64::from(slots);
    Ok(n * (1.0 - 1.0 / n).powf(tags.max(0.0)))
}

/// E[U]: expected number of slots chosen by two or more tags.
pub fn expected_unresolved(tags: f64, slots: u32) -> Result<f64, Error> {
    let u = f64::from(slots) - expected_idle(tags, slots)? - expected_reserved(tags, slots)?;
    Ok(u.max(0.0))
}

/// E[UC] = E[U] · 2^-n.
pub fn expected_undetected(tags: f64, slots: u32, seq_bits: u8) -> Result<f64, Error> {
    expected_undetected_with(tags, slots, seq_bits, SameSequenceFactor::PerSequence)
}

pub fn expected_undetected_with(
    tags: f64,
    slots: u32,
    seq_bits: u8,
    factor: SameSequenceFactor,
) -> Result<f64, Error> {
    check_seq_bits(seq_bits)?;
    Ok(expected_unresolved(tags, slots)? * factor.probability(seq_bits))
}

/// Exact expected number of undetected collisions.
///
/// A slot with `i ≥ 2` occupants goes unnoticed only when all of them sent
/// the same sequence, which happens with probability `2^(-n(i-1))`. Summed
/// over the binomial occupancy of each slot. Always ≤ [`expected_undetected`].
pub fn expected_undetected_exact(tags: u32, slots: u32, seq_bits: u8) -> Result<f64, Error> {
    check_slots(slots)?;
    check_seq_bits(seq_bits)?;
    if tags < 2 {
        return Ok(0.0);
    }
    let per_extra = (-f64::from(seq_bits)).exp2();
    if slots == 1 {
        return Ok(per_extra.powi(tags as i32 - 1));
    }
    let n = f64::from(slots);
    let k = f64::from(tags);
    let ln_p = -n.ln();
    let ln_q = (1.0 - 1.0 / n).ln();
    let ln_ratio = ln_p - ln_q;
    let ln_extra = per_extra.ln();
    // ln P(occupancy = i), built up from i = 0.
    let mut ln_pmf = k * ln_q;
    let mut sum = 0.0;
    for i in 1..=tags {
        let fi = f64::from(i);
        ln_pmf += ((k - fi + 1.0) / fi).ln() + ln_ratio;
        if i >= 2 {
            sum += (ln_pmf + (fi - 1.0) * ln_extra).exp();
        }
    }
    Ok(n * sum)
}

/// S = E[R] + E[UC].
pub fn expected_successful(tags: f64, slots: u32, seq_bits: u8) -> Result<f64, Error> {
    Ok(expected_reserved(tags, slots)? + expected_undetected(tags, slots, seq_bits)?)
}

pub fn expected_profile(tags: f64, slots: u32, seq_bits: u8) -> Result<ExpectedSlotProfile, Error> {
    let e_reserved = expected_reserved(tags, slots)?;
    let e_idle = expected_idle(tags, slots)?;
    let e_unresolved = expected_unresolved(tags, slots)?;
    let e_undetected = expected_undetected(tags, slots, seq_bits)?;
    Ok(ExpectedSlotProfile {
        e_reserved,
        e_idle,
        e_unresolved,
        e_undetected,
        s_expected: e_reserved + e_undetected,
    })
}

/// Expected AFSA round time in µs.
///
/// `T = T_ad + t_b·N·n + T_su + (t_data + t_b)·S` where `t_b` is the
/// reader bit time and every apparently reserved slot costs one data slot
/// plus one acknowledgement bit.
pub fn round_duration(tags: f64, slots: u32, seq_bits: u8, timing: &TimingModel) -> Result<f64, Error> {
    let s = expected_successful(tags, slots, seq_bits)?;
    round_duration_for_successes(slots, seq_bits, s, timing)
}

/// Round time with a given (expected or realized) count of apparently
/// reserved slots substituted for S.
pub fn round_duration_for_successes(
    slots: u32,
    seq_bits: u8,
    successes: f64,
    timing: &TimingModel,
) -> Result<f64, Error> {
    check_slots(slots)?;
    check_seq_bits(seq_bits)?;
    timing.validate()?;
    let bit = timing.reader_bit_time_us;
    let n = f64::from(slots);
    Ok(f64::from(timing.advert_bits) * bit
        + bit * n * f64::from(seq_bits)
        + n * bit
        + (timing.data_slot_us() + bit) * successes)
}

/// Optimal reservation sequence length for a frame with `e_unresolved`
/// expected collision slots.
///
/// When the log argument is ≤ 1 the raw value is 0. The rounded value is
/// clamped to `[1, 16]`.
pub fn optimal_seq_len(e_unresolved: f64, slots: u32, constants: &OptimalSeqConstants) -> OptimalSeqLen {
    let arg = if slots == 0 {
        0.0
    } else {
        constants.arg_coeff * e_unresolved / f64::from(slots)
    };
    let raw = if arg > 1.0 {
        constants.log_coeff * arg.log10()
    } else {
        0.0
    };
    let rounded = (raw + 0.5).floor().clamp(1.0, 16.0) as u8;
    OptimalSeqLen { raw, rounded }
}
