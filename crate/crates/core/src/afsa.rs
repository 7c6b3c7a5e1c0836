//! The five-phase accelerated frame slotted ALOHA round and the inventory
//! loop built on it.
//!
//! One round:
//!
//! 1. **Advertisement.** The reader broadcasts `(N, n, d)`. Each pending tag
//!    draws a participation number and joins when it is divisible by `d`.
//! 2. **Reservation.** Each participant picks a slot in `[0, N)` and an
//!    `n`-bit sequence, and sends the sequence in its slot.
//! 3. **Summary.** The reader broadcasts an N-bit bitmap with a `1` for every
//!    slot where it heard one clean sequence. Slots that were idle and slots
//!    with mismatched sequences both show `0`.
//! 4. **Data.** Each `1` slot gets a full EPC+CRC transmission. A lone
//!    occupant is identified. Several occupants that happened to send the
//!    same sequence collide here and nobody is identified.
//! 5. **Acknowledgement.** One reader bit per `1` slot.
//!
//! Per tag the random draws are taken in a fixed order: participation,
//! slot, sequence. Tags are visited in population order.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::estimator::{estimate_backlog, next_frame, AdaptationPolicy};
use crate::model::{
    FrameConfig, PhaseDurations, Protocol, RoundHeader, RoundTrace, SlotKind, SlotObservation, Tag,
    TagRoundDecision, TimingModel,
};
use crate::population::{pending_count, Churn};
use crate::rng::draw_below;

/// Outcome of running rounds until every present tag is read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryResult {
    pub protocol: Protocol,
    pub rounds: Vec<RoundTrace>,
    pub total_time_us: f64,
    pub tags_identified: u32,
    /// `total_time_us / tags_identified`; `None` when nothing was read.
    pub per_tag_mean_us: Option<f64>,
    /// Present tags still unidentified when the inventory stopped.
    pub remaining: u32,
    pub arrivals: u32,
    pub departures: u32,
}

impl InventoryResult {
    pub(crate) fn new(protocol: Protocol) -> Self {
        Self {
            protocol,
            rounds: Vec::new(),
            total_time_us: 0.0,
            tags_identified: 0,
            per_tag_mean_us: None,
            remaining: 0,
            arrivals: 0,
            departures: 0,
        }
    }

    pub(crate) fn push(&mut self, trace: RoundTrace) {
        self.total_time_us += trace.total_us;
        self.tags_identified += trace.identified_epcs.len() as u32;
        self.rounds.push(trace);
    }

    /// Seals the result; a non-empty backlog becomes [`Error::NonTermination`].
    pub(crate) fn finish(mut self, tags: &[Tag]) -> Result<Self, Error> {
        self.per_tag_mean_us =
            (self.tags_identified > 0).then(|| self.total_time_us / f64::from(self.tags_identified));
        self.remaining = pending_count(tags);
        if self.remaining > 0 {
            Err(Error::NonTermination(Box::new(self)))
        } else {
            Ok(self)
        }
    }

    pub fn undetected_collisions(&self) -> u64 {
        self.rounds.iter().map(|r| u64::from(r.undetected_collision_count)).sum()
    }
}

/// A pending tag's choices for one round.
pub fn tag_decide<R: RngCore + ?Sized>(frame: &FrameConfig, rng: &mut R) -> TagRoundDecision {
    let ticket = rng.next_u64();
    if ticket % frame.participation_divisor.max(1) != 0 {
        return TagRoundDecision::Silent;
    }
    let slot = draw_below(rng, u64::from(frame.slots)) as u32;
    let sequence = draw_below(rng, u64::from(frame.sequence_space())) as u16;
    TagRoundDecision::Reserve { slot, sequence }
}

/// What the reader hears in each reservation slot.
///
/// A slot is clean when all of its occupants sent the same sequence, so
/// collisions are caught only when at least two distinct sequences meet.
pub fn reader_observe(decisions: &[TagRoundDecision], frame: &FrameConfig) -> Result<Vec<SlotObservation>, Error> {
    let space = frame.sequence_space();
    let mut observations = vec![
        SlotObservation {
            kind: SlotKind::Idle,
            occupants: 0,
        };
        frame.slots as usize
    ];
    for decision in decisions {
        let TagRoundDecision::Reserve { slot, sequence } = *decision else {
            continue;
        };
        if slot >= frame.slots {
            return Err(Error::SlotOutOfRange {
                slot,
                slots: frame.slots,
            });
        }
        if u32::from(sequence) >= space {
            return Err(Error::SequenceOutOfRange {
                sequence,
                seq_bits: frame.seq_bits,
            });
        }
        let obs = &mut observations[slot as usize];
        obs.occupants += 1;
        obs.kind = match obs.kind {
            SlotKind::Idle => SlotKind::ReservedApparent { sequence },
            SlotKind::ReservedApparent { sequence: heard } if heard == sequence => obs.kind,
            _ => SlotKind::DetectedCollision,
        };
    }
    Ok(observations)
}

/// Realized phase durations of an AFSA round with `apparent` slots marked in
/// the bitmap.
pub fn afsa_phases(frame: &FrameConfig, apparent: u32, timing: &TimingModel) -> PhaseDurations {
    PhaseDurations {
        t_ad: timing.advertisement_us(),
        t_r: timing.reservation_us(frame.slots, frame.seq_bits),
        t_su: timing.summary_us(frame.slots),
        t_d: timing.data_slot_us() * f64::from(apparent),
        t_ack: timing.ack_us(apparent),
    }
}

/// Runs one round over `tags`, marking the tags it identifies.
pub fn run_afsa_round<R: RngCore + ?Sized>(
    tags: &mut [Tag],
    frame: &FrameConfig,
    timing: &TimingModel,
    rng: &mut R,
) -> Result<RoundTrace, Error> {
    frame.validate()?;
    timing.validate()?;

    let mut decisions = Vec::new();
    // Index of the tag behind each participating decision.
    let mut owners = Vec::new();
    let mut k_active = 0;
    for (i, tag) in tags.iter().enumerate() {
        if !tag.pending() {
            continue;
        }
        k_active += 1;
        let decision = tag_decide(frame, rng);
        if decision.participating() {
            decisions.push(decision);
            owners.push(i);
        }
    }

    let observations = reader_observe(&decisions, frame)?;

    let mut sole_owner = vec![None; frame.slots as usize];
    for (decision, &owner) in decisions.iter().zip(&owners) {
        if let TagRoundDecision::Reserve { slot, .. } = *decision {
            sole_owner[slot as usize] = Some(owner);
        }
    }
    let mut identified = Vec::new();
    let mut apparent = 0;
    for (obs, owner) in observations.iter().zip(&sole_owner) {
        if !obs.apparent() {
            continue;
        }
        apparent += 1;
        if obs.occupants == 1 {
            let tag = &mut tags[owner.expect("occupied slot has an owner")];
            tag.identified = true;
            identified.push(tag.epc);
        }
    }

    let header = RoundHeader {
        protocol: Protocol::Afsa,
        slots: frame.slots,
        seq_bits: Some(frame.seq_bits),
        participation_divisor: frame.participation_divisor,
        k_active,
    };
    let phases = afsa_phases(frame, apparent, timing);
    Ok(RoundTrace::assemble(header, observations, identified, phases))
}

/// Repeats AFSA rounds, re-planning the frame after each one, until every
/// present tag is identified or `max_rounds` is used up.
pub fn run_afsa_inventory<R: RngCore + ?Sized>(
    tags: &mut Vec<Tag>,
    initial: FrameConfig,
    policy: &AdaptationPolicy,
    timing: &TimingModel,
    rng: &mut R,
    max_rounds: u32,
) -> Result<InventoryResult, Error> {
    run_afsa_inventory_with_churn(tags, initial, policy, timing, rng, max_rounds, &Churn::none())
}

/// As [`run_afsa_inventory`], applying `churn` before every round but the
/// first.
pub fn run_afsa_inventory_with_churn<R: RngCore + ?Sized>(
    tags: &mut Vec<Tag>,
    initial: FrameConfig,
    policy: &AdaptationPolicy,
    timing: &TimingModel,
    rng: &mut R,
    max_rounds: u32,
    churn: &Churn,
) -> Result<InventoryResult, Error> {
    if max_rounds == 0 {
        return Err(Error::ZeroMaxRounds);
    }
    initial.validate()?;
    timing.validate()?;

    let mut result = InventoryResult::new(Protocol::Afsa);
    let mut frame = initial;
    for round in 0..max_rounds {
        if round > 0 {
            let ev = churn.apply(tags, rng);
            result.arrivals += ev.arrivals;
            result.departures += ev.departures;
        }
        let trace = run_afsa_round(tags, &frame, timing, rng)?;
        let estimate = estimate_backlog(&trace)?;
        result.push(trace);
        if pending_count(tags) == 0 {
            break;
        }
        frame = next_frame(&estimate, policy);
    }
    result.finish(tags)
}
