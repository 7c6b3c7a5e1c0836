//! Backlog estimation from a finished round and the frame adaptation rules
//! that pick the next round's `(N, n, d)`.

use serde::{Deserialize, Serialize};

use crate::analytic::{expected_unresolved, optimal_seq_len, OptimalSeqConstants};
use crate::error::Error;
use crate::model::{FrameConfig, RoundTrace, SeqBits, MAX_SEQ_BITS};

/// Tags assumed per slot known to hold a collision, used when a round has
/// no idle slot to invert.
pub const COLLISION_MULTIPLIER: f64 = 2.39;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EstimateMethod {
    IdleInversion,
    CollisionFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacklogEstimate {
    /// Estimated tags still unidentified after the round.
    pub k_est: f64,
    pub method: EstimateMethod,
}

/// Estimates how many tags remain after `trace`.
///
/// With at least one idle slot the idle-count expectation
/// `E[I] = N(1 - 1/N)^K` is solved for `K`. Without one, every collided
/// slot is assumed to hold [`COLLISION_MULTIPLIER`] tags. In both cases the
/// tags identified in the round are subtracted. When only one in `d` tags
/// took part, the participant estimate is scaled by `d`.
pub fn estimate_backlog(trace: &RoundTrace) -> Result<BacklogEstimate, Error> {
    if trace.slots == 0 {
        return Err(Error::ZeroSlots);
    }
    let n = f64::from(trace.slots);
    let identified = trace.identified_epcs.len() as f64;
    let scale = trace.participation_divisor.max(1) as f64;

    let (participants, method) = if trace.idle_count == 0 {
        let floor = COLLISION_MULTIPLIER * f64::from(trace.detected_collision_count)
            + f64::from(trace.apparent_reserved());
        (floor, EstimateMethod::CollisionFloor)
    } else if trace.slots == 1 || trace.idle_count == trace.slots {
        // ln(1 - 1/N) is -inf at N = 1; an idle lone slot means nobody answered.
        (0.0, EstimateMethod::IdleInversion)
    } else {
        let k = (f64::from(trace.idle_count) / n).ln() / (1.0 - 1.0 / n).ln();
        (k, EstimateMethod::IdleInversion)
    };
    Ok(BacklogEstimate {
        k_est: (participants * scale - identified).max(0.0),
        method,
    })
}

/// Rules for choosing the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationPolicy {
    pub n_mode: SeqBits,
    pub min_slots: u32,
    pub max_slots: u32,
    /// The participation divisor is raised above 1 only once the backlog
    /// exceeds this many tags per slot.
    pub overload_ratio: f64,
    /// When false `d` stays at 1.
    pub adapt_divisor: bool,
    pub constants: OptimalSeqConstants,
}

impl Default for AdaptationPolicy {
    fn default() -> Self {
        Self {
            n_mode: SeqBits::Auto,
            min_slots: 8,
            max_slots: 1024,
            overload_ratio: 4.0,
            adapt_divisor: true,
            constants: OptimalSeqConstants::default(),
        }
    }
}

impl AdaptationPolicy {
    pub fn with_seq_bits(n_mode: SeqBits) -> Self {
        Self {
            n_mode,
            ..Self::default()
        }
    }

    /// Sequence length for a frame of `slots` facing `k_est` tags.
    pub fn seq_bits_for(&self, k_est: f64, slots: u32) -> u8 {
        match self.n_mode {
            SeqBits::Fixed(n) => n.clamp(1, MAX_SEQ_BITS),
            SeqBits::Auto => {
                // slots ≥ 1 here, so the estimate cannot fail.
                let e_u = expected_unresolved(k_est, slots).unwrap_or(0.0);
                optimal_seq_len(e_u, slots, &self.constants).rounded
            }
        }
    }

    /// First frame of an inventory. Without an estimate the reader assumes
    /// one tag per slot when choosing `n`.
    pub fn initial_frame(&self, slots: u32) -> FrameConfig {
        let slots = slots.max(1);
        FrameConfig {
            slots,
            seq_bits: self.seq_bits_for(f64::from(slots), slots),
            participation_divisor: 1,
        }
    }
}

/// Power of two closest to `x` (ties go up), clamped to `[lo, hi]`.
pub fn nearest_power_of_two(x: f64, lo: u32, hi: u32) -> u32 {
    let lo = lo.max(1);
    let hi = hi.max(lo);
    if !(x > f64::from(lo)) {
        return lo;
    }
    if x >= f64::from(hi) {
        return hi;
    }
    let below = 1u32 << x.log2().floor() as u32;
    let above = below.saturating_mul(2);
    let pick = if x - f64::from(below) < f64::from(above) - x {
        below
    } else {
        above
    };
    pick.clamp(lo, hi)
}

/// Frame for the next round given the backlog estimate.
pub fn next_frame(est: &BacklogEstimate, policy: &AdaptationPolicy) -> FrameConfig {
    let k = est.k_est.max(0.0);
    let slots = nearest_power_of_two(k, policy.min_slots, policy.max_slots);
    let n = f64::from(slots);
    let participation_divisor = if policy.adapt_divisor && k > policy.overload_ratio * n {
        ((k / n).round() as u64).max(1)
    } else {
        1
    };
    FrameConfig {
        slots,
        seq_bits: policy.seq_bits_for(k, slots),
        participation_divisor,
    }
}
