//! Shared domain types: timing constants, frame parameters, tags, slot
//! observations and the per-round trace every protocol produces.
//!
//! Nothing in here runs a protocol. The types are plain values that are
//! cheap to clone and safe to hand to other trial workers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Reader bit time used by the round-duration expansion.
pub const DEFAULT_READER_BIT_TIME_US: f64 = 12.5;
/// Reader bit time as quoted for the reader's command clock. Kept for
/// sensitivity runs; [`TimingModel::default`] uses 12.5 µs.
pub const NOMINAL_READER_BIT_TIME_US: f64 = 12.0;
/// Largest supported reservation sequence length.
pub const MAX_SEQ_BITS: u8 = 16;

/// Physical-layer timing constants.
///
/// The data slot length is derived from the EPC and CRC lengths so it can
/// never disagree with them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Microseconds per tag-transmitted bit.
    pub tag_bit_time_us: f64,
    /// Microseconds per reader-clocked bit.
    pub reader_bit_time_us: f64,
    pub epc_bits: u32,
    pub crc_bits: u32,
    /// Reader bits in the advertisement (frame-size broadcast) command.
    pub advert_bits: u32,
}

impl Default for TimingModel {
    fn default() -> Self {
        Self {
            tag_bit_time_us: 4.0,
            reader_bit_time_us: DEFAULT_READER_BIT_TIME_US,
            epc_bits: 64,
            crc_bits: 16,
            advert_bits: 16,
        }
    }
}

impl TimingModel {
    /// Default constants with the reader clocked at 12 µs per bit.
    pub fn with_nominal_reader_clock() -> Self {
        Self {
            reader_bit_time_us: NOMINAL_READER_BIT_TIME_US,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.tag_bit_time_us) {
            return Err(Error::InvalidTiming("tag_bit_time_us must be > 0"));
        }
        if !positive(self.reader_bit_time_us) {
            return Err(Error::InvalidTiming("reader_bit_time_us must be > 0"));
        }
        if self.epc_bits + self.crc_bits == 0 {
            return Err(Error::InvalidTiming("epc_bits + crc_bits must be > 0"));
        }
        if self.advert_bits == 0 {
            return Err(Error::InvalidTiming("advert_bits must be > 0"));
        }
        Ok(())
    }

    /// One data-transmission slot: EPC plus CRC at the tag bit rate.
    pub fn data_slot_us(&self) -> f64 {
        f64::from(self.epc_bits + self.crc_bits) * self.tag_bit_time_us
    }

    pub fn advertisement_us(&self) -> f64 {
        f64::from(self.advert_bits) * self.reader_bit_time_us
    }

    /// `N·n` sequence bits, clocked at the reader rate.
    pub fn reservation_us(&self, slots: u32, seq_bits: u8) -> f64 {
        self.reader_bit_time_us * f64::from(slots) * f64::from(seq_bits)
    }

    /// The N-bit reservation bitmap broadcast.
    pub fn summary_us(&self, slots: u32) -> f64 {
        f64::from(slots) * self.reader_bit_time_us
    }

    pub fn ack_us(&self, acked_slots: u32) -> f64 {
        f64::from(acked_slots) * self.reader_bit_time_us
    }
}

/// Per-round frame parameters broadcast by the reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameConfig {
    /// Slot count N.
    pub slots: u32,
    /// Reservation sequence length n.
    pub seq_bits: u8,
    /// A tag joins the round iff its participation draw is divisible by this.
    pub participation_divisor: u64,
}

impl FrameConfig {
    pub fn new(slots: u32, seq_bits: u8, participation_divisor: u64) -> Result<Self, Error> {
        let frame = Self {
            slots,
            seq_bits,
            participation_divisor,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.slots == 0 {
            return Err(Error::ZeroSlots);
        }
        check_seq_bits(self.seq_bits)?;
        if self.participation_divisor == 0 {
            return Err(Error::ZeroDivisor);
        }
        Ok(())
    }

    /// Number of distinct reservation sequences, `2^n`.
    pub fn sequence_space(&self) -> u32 {
        1u32 << self.seq_bits
    }
}

pub(crate) fn check_seq_bits(seq_bits: u8) -> Result<(), Error> {
    if (1..=MAX_SEQ_BITS).contains(&seq_bits) {
        Ok(())
    } else {
        Err(Error::SeqBitsOutOfRange(seq_bits))
    }
}

/// Reservation sequence length: fixed, or chosen per round from the backlog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeqBits {
    Fixed(u8),
    Auto,
}

impl fmt::Display for SeqBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqBits::Fixed(n) => write!(f, "{n}"),
            SeqBits::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tag {
    pub epc: u64,
    pub identified: bool,
    pub present: bool,
}

impl Tag {
    pub fn new(epc: u64) -> Self {
        Self {
            epc,
            identified: false,
            present: true,
        }
    }

    /// Present and still waiting to be read.
    pub fn pending(&self) -> bool {
        self.present && !self.identified
    }
}

/// What one tag does in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagRoundDecision {
    /// Failed the participation test; stays quiet this round.
    Silent,
    Reserve { slot: u32, sequence: u16 },
}

impl TagRoundDecision {
    pub fn participating(&self) -> bool {
        matches!(self, TagRoundDecision::Reserve { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    Idle,
    /// Every occupant sent the same sequence, so the reader hears a clean
    /// reservation. With more than one occupant this is an undetected
    /// collision.
    ReservedApparent { sequence: u16 },
    DetectedCollision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotObservation {
    pub kind: SlotKind,
    /// Ground-truth number of tags that picked the slot.
    pub occupants: u32,
}

impl SlotObservation {
    pub fn apparent(&self) -> bool {
        matches!(self.kind, SlotKind::ReservedApparent { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Afsa,
    Fsa,
    Edfsa,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Afsa => "afsa",
            Protocol::Fsa => "fsa",
            Protocol::Edfsa => "edfsa",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "afsa" => Ok(Protocol::Afsa),
            "fsa" => Ok(Protocol::Fsa),
            "edfsa" => Ok(Protocol::Edfsa),
            other => Err(format!("unknown protocol '{other}', expected afsa|fsa|edfsa")),
        }
    }
}

/// Realized duration of each phase of one round, in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseDurations {
    /// Advertisement.
    pub t_ad: f64,
    /// Reservation.
    pub t_r: f64,
    /// Reservation summary (bitmap broadcast).
    pub t_su: f64,
    /// Data transmission.
    pub t_d: f64,
    /// Acknowledgement.
    pub t_ack: f64,
}

impl PhaseDurations {
    pub fn total(&self) -> f64 {
        self.t_ad + self.t_r + self.t_su + self.t_d + self.t_ack
    }
}

/// Ground truth and reader-side outcome of a single round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub protocol: Protocol,
    pub slots: u32,
    /// `None` for protocols without a reservation phase.
    pub seq_bits: Option<u8>,
    pub participation_divisor: u64,
    /// Tags eligible to answer this round (present, unidentified, in group).
    pub k_active: u32,
    pub observations: Vec<SlotObservation>,
    pub bitmap: Vec<bool>,
    pub idle_count: u32,
    pub reserved_true_count: u32,
    pub detected_collision_count: u32,
    pub undetected_collision_count: u32,
    pub identified_epcs: Vec<u64>,
    pub phase_durations_us: PhaseDurations,
    pub total_us: f64,
}

/// Round metadata that does not come from the slot observations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RoundHeader {
    pub protocol: Protocol,
    pub slots: u32,
    pub seq_bits: Option<u8>,
    pub participation_divisor: u64,
    pub k_active: u32,
}

impl RoundTrace {
    pub(crate) fn assemble(
        header: RoundHeader,
        observations: Vec<SlotObservation>,
        identified_epcs: Vec<u64>,
        phases: PhaseDurations,
    ) -> Self {
        let mut trace = Self {
            protocol: header.protocol,
            slots: header.slots,
            seq_bits: header.seq_bits,
            participation_divisor: header.participation_divisor,
            k_active: header.k_active,
            bitmap: observations.iter().map(SlotObservation::apparent).collect(),
            observations,
            idle_count: 0,
            reserved_true_count: 0,
            detected_collision_count: 0,
            undetected_collision_count: 0,
            identified_epcs,
            phase_durations_us: phases,
            total_us: phases.total(),
        };
        for obs in &trace.observations {
            match (obs.kind, obs.occupants) {
                (SlotKind::Idle, _) => trace.idle_count += 1,
                (SlotKind::ReservedApparent { .. }, 1) => trace.reserved_true_count += 1,
                (SlotKind::ReservedApparent { .. }, _) => trace.undetected_collision_count += 1,
                (SlotKind::DetectedCollision, _) => trace.detected_collision_count += 1,
            }
        }
        trace
    }

    /// Slots that looked reserved to the reader: the realized S.
    pub fn apparent_reserved(&self) -> u32 {
        self.reserved_true_count + self.undetected_collision_count
    }

    /// The reservation bitmap as a 0/1 string, slot 0 first.
    pub fn bitmap_string(&self) -> String {
        self.bitmap.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    /// Checks the structural invariants every protocol must uphold.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.slots as usize;
        if self.observations.len() != n || self.bitmap.len() != n {
            return Err(format!(
                "expected {n} observations and bitmap bits, got {} and {}",
                self.observations.len(),
                self.bitmap.len()
            ));
        }
        let counted = u64::from(self.idle_count)
            + u64::from(self.reserved_true_count)
            + u64::from(self.detected_collision_count)
            + u64::from(self.undetected_collision_count);
        if counted != u64::from(self.slots) {
            return Err(format!("slot classes sum to {counted}, frame has {}", self.slots));
        }
        if self.identified_epcs.len() != self.reserved_true_count as usize {
            return Err(format!(
                "{} identified but {} truly reserved slots",
                self.identified_epcs.len(),
                self.reserved_true_count
            ));
        }
        let mut undetected = 0;
        for (i, obs) in self.observations.iter().enumerate() {
            if self.bitmap[i] != obs.apparent() {
                return Err(format!("bitmap bit {i} disagrees with observation"));
            }
            match obs.kind {
                SlotKind::Idle if obs.occupants != 0 => {
                    return Err(format!("slot {i} idle with {} occupants", obs.occupants))
                }
                SlotKind::ReservedApparent { .. } if obs.occupants == 0 => {
                    return Err(format!("slot {i} reserved with no occupants"))
                }
                SlotKind::DetectedCollision if obs.occupants < 2 => {
                    return Err(format!("slot {i} collided with {} occupants", obs.occupants))
                }
                SlotKind::ReservedApparent { .. } if obs.occupants >= 2 => undetected += 1,
                _ => {}
            }
            if obs.kind != SlotKind::Idle && obs.occupants == 0 {
                return Err(format!("slot {i} has no occupants but is not idle"));
            }
        }
        if undetected != self.undetected_collision_count {
            return Err(format!(
                "undetected count {} but {undetected} multi-occupant apparent slots",
                self.undetected_collision_count
            ));
        }
        let sum = self.phase_durations_us.total();
        if (sum - self.total_us).abs() > 1e-9 * sum.max(1.0) {
            return Err(format!("total_us {} != phase sum {sum}", self.total_us));
        }
        Ok(())
    }
}

/// Closed-form slot expectations for a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedSlotProfile {
    /// E[R]
    pub e_reserved: f64,
    /// E[I]
    pub e_idle: f64,
    /// E[U]
    pub e_unresolved: f64,
    /// E[UC]
    pub e_undetected: f64,
    /// S = E[R] + E[UC]
    pub s_expected: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_data_slot_is_320us() {
        let timing = TimingModel::default();
        assert_eq!(timing.data_slot_us(), 320.0);
        assert_eq!(timing.advertisement_us(), 200.0);
        assert!(timing.validate().is_ok());
    }

    #[test]
    fn nominal_clock_only_changes_reader_rate() {
        let timing = TimingModel::with_nominal_reader_clock();
        assert_eq!(timing.reader_bit_time_us, 12.0);
        assert_eq!(timing.data_slot_us(), 320.0);
    }

    #[test]
    fn timing_rejects_non_positive() {
        let timing = TimingModel {
            tag_bit_time_us: 0.0,
            ..TimingModel::default()
        };
        assert!(timing.validate().is_err());
        let timing = TimingModel {
            reader_bit_time_us: f64::NAN,
            ..TimingModel::default()
        };
        assert!(timing.validate().is_err());
    }

    #[test]
    fn frame_bounds() {
        assert_eq!(FrameConfig::new(0, 2, 1), Err(Error::ZeroSlots));
        assert_eq!(FrameConfig::new(4, 0, 1), Err(Error::SeqBitsOutOfRange(0)));
        assert_eq!(FrameConfig::new(4, 17, 1), Err(Error::SeqBitsOutOfRange(17)));
        assert_eq!(FrameConfig::new(4, 2, 0), Err(Error::ZeroDivisor));
        let frame = FrameConfig::new(1, 16, 1).unwrap();
        assert_eq!(frame.sequence_space(), 65536);
    }

    #[test]
    fn protocol_names_round_trip() {
        for p in [Protocol::Afsa, Protocol::Fsa, Protocol::Edfsa] {
            assert_eq!(p.as_str().parse::<Protocol>().unwrap(), p);
        }
        assert!("asap".parse::<Protocol>().is_err());
    }

    fn obs(kind: SlotKind, occupants: u32) -> SlotObservation {
        SlotObservation { kind, occupants }
    }

    fn header(slots: u32) -> RoundHeader {
        RoundHeader {
            protocol: Protocol::Afsa,
            slots,
            seq_bits: Some(2),
            participation_divisor: 1,
            k_active: 0,
        }
    }

    #[test]
    fn assemble_classifies_slots() {
        let observations = vec![
            obs(SlotKind::ReservedApparent { sequence: 1 }, 1),
            obs(SlotKind::Idle, 0),
            obs(SlotKind::DetectedCollision, 3),
            obs(SlotKind::ReservedApparent { sequence: 2 }, 2),
        ];
        let phases = PhaseDurations {
            t_ad: 200.0,
            t_r: 100.0,
            t_su: 50.0,
            t_d: 640.0,
            t_ack: 25.0,
        };
        let trace = RoundTrace::assemble(header(4), observations, vec![7], phases);
        assert_eq!(trace.bitmap_string(), "1001");
        assert_eq!(trace.idle_count, 1);
        assert_eq!(trace.reserved_true_count, 1);
        assert_eq!(trace.detected_collision_count, 1);
        assert_eq!(trace.undetected_collision_count, 1);
        assert_eq!(trace.apparent_reserved(), 2);
        assert_eq!(trace.total_us, 1015.0);
        trace.check_invariants().unwrap();
    }

    #[test]
    fn checker_catches_bad_identification_count() {
        let observations = vec![obs(SlotKind::ReservedApparent { sequence: 0 }, 1)];
        let trace = RoundTrace::assemble(header(1), observations, vec![], PhaseDurations::default());
        assert!(trace.check_invariants().is_err());
    }

    #[test]
    fn checker_catches_inconsistent_idle() {
        let observations = vec![obs(SlotKind::Idle, 2)];
        let trace = RoundTrace::assemble(header(1), observations, vec![], PhaseDurations::default());
        assert!(trace.check_invariants().is_err());
    }
}
