use thiserror::Error;

use crate::afsa::InventoryResult;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("slots must be ≥ 1")]
    ZeroSlots,
    #[error("seq_bits must be in [1,16], got {0}")]
    SeqBitsOutOfRange(u8),
    #[error("participation divisor must be ≥ 1")]
    ZeroDivisor,
    #[error("invalid timing: {0}")]
    InvalidTiming(&'static str),
    #[error("max_rounds must be ≥ 1")]
    ZeroMaxRounds,
    #[error("decision for slot {slot} lies outside a frame of {slots} slots")]
    SlotOutOfRange { slot: u32, slots: u32 },
    #[error("sequence {sequence} does not fit in {seq_bits} bits")]
    SequenceOutOfRange { sequence: u16, seq_bits: u8 },
    #[error(
        "inventory stopped after {} rounds with {} tags unidentified",
        .0.rounds.len(),
        .0.remaining
    )]
    NonTermination(Box<InventoryResult>),
}
