//! Slot-accurate simulation and closed-form analysis of accelerated frame
//! slotted ALOHA (AFSA) for RFID tag anti-collision, with plain FSA and a
//! simplified EDFSA as baselines.
//!
//! Slot indices are 0-based throughout: a bitmap written `1001` marks slots
//! 0 and 3 as reserved.

pub mod afsa;
pub mod analytic;
pub mod baselines;
pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod model;
pub mod population;
pub mod report;
pub mod rng;

pub use error::Error;
pub use model::{
    ExpectedSlotProfile, FrameConfig, PhaseDurations, Protocol, RoundTrace, SeqBits, SlotKind, SlotObservation, Tag,
    TagRoundDecision, TimingModel,
};
