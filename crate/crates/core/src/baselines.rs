//! Plain framed slotted ALOHA and a simplified enhanced dynamic FSA, used
//! as comparison points for AFSA.
//!
//! Neither baseline has a reservation phase, so every slot of the frame is a
//! full EPC+CRC data slot whether it ends up idle, successful or collided.
//! That per-slot cost is exactly what AFSA's short reservations avoid.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::afsa::InventoryResult;
use crate::error::Error;
use crate::estimator::estimate_backlog;
use crate::model::{PhaseDurations, Protocol, RoundHeader, RoundTrace, SlotKind, SlotObservation, Tag, TimingModel};
use crate::population::{pending_count, Churn};
use crate::rng::draw_below;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    Fsa,
    Edfsa,
}

impl BaselineKind {
    pub fn protocol(self) -> Protocol {
        match self {
            BaselineKind::Fsa => Protocol::Fsa,
            BaselineKind::Edfsa => Protocol::Edfsa,
        }
    }
}

/// Frame sizes EDFSA may advertise.
pub const EDFSA_FRAME_SIZES: [u32; 5] = [16, 32, 64, 128, 256];

pub fn fsa_phases(slots: u32, timing: &TimingModel) -> PhaseDurations {
    PhaseDurations {
        t_ad: timing.advertisement_us(),
        t_d: f64::from(slots) * timing.data_slot_us(),
        ..PhaseDurations::default()
    }
}

/// One FSA frame over every pending tag.
pub fn run_fsa_round<R: RngCore + ?Sized>(
    tags: &mut [Tag],
    slots: u32,
    timing: &TimingModel,
    rng: &mut R,
) -> Result<RoundTrace, Error> {
    fsa_round_where(tags, slots, timing, rng, Protocol::Fsa, |_| true)
}

/// One FSA frame over the pending tags accepted by `eligible`. Each tag
/// takes a single slot draw, in population order.
fn fsa_round_where<R, F>(
    tags: &mut [Tag],
    slots: u32,
    timing: &TimingModel,
    rng: &mut R,
    protocol: Protocol,
    eligible: F,
) -> Result<RoundTrace, Error>
where
    R: RngCore + ?Sized,
    F: Fn(&Tag) -> bool,
{
    if slots == 0 {
        return Err(Error::ZeroSlots);
    }
    timing.validate()?;

    let mut observations = vec![
        SlotObservation {
            kind: SlotKind::Idle,
            occupants: 0,
        };
        slots as usize
    ];
    let mut owner = vec![0usize; slots as usize];
    let mut k_active = 0;
    for (i, tag) in tags.iter().enumerate() {
        if !tag.pending() || !eligible(tag) {
            continue;
        }
        k_active += 1;
        let slot = draw_below(rng, u64::from(slots)) as usize;
        let obs = &mut observations[slot];
        obs.occupants += 1;
        // Distinct EPCs always garble each other, so any second occupant is
        // a detected collision.
        obs.kind = if obs.occupants == 1 {
            owner[slot] = i;
            SlotKind::ReservedApparent { sequence: 0 }
        } else {
            SlotKind::DetectedCollision
        };
    }

    let mut identified = Vec::new();
    for (obs, &i) in observations.iter().zip(&owner) {
        if obs.occupants == 1 {
            tags[i].identified = true;
            identified.push(tags[i].epc);
        }
    }

    let header = RoundHeader {
        protocol,
        slots,
        seq_bits: None,
        participation_divisor: 1,
        k_active,
    };
    Ok(RoundTrace::assemble(header, observations, identified, fsa_phases(slots, timing)))
}

/// Fixed-frame FSA, repeated until every present tag is read.
pub fn run_fsa_inventory<R: RngCore + ?Sized>(
    tags: &mut Vec<Tag>,
    slots: u32,
    timing: &TimingModel,
    rng: &mut R,
    max_rounds: u32,
    churn: &Churn,
) -> Result<InventoryResult, Error> {
    if max_rounds == 0 {
        return Err(Error::ZeroMaxRounds);
    }
    let mut result = InventoryResult::new(Protocol::Fsa);
    for round in 0..max_rounds {
        if round > 0 {
            let ev = churn.apply(tags, rng);
            result.arrivals += ev.arrivals;
            result.departures += ev.departures;
        }
        result.push(run_fsa_round(tags, slots, timing, rng)?);
        if pending_count(tags) == 0 {
            break;
        }
    }
    result.finish(tags)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdfsaPlan {
    pub slots: u32,
    /// Tags answer only in the cycle step where `epc % groups` equals the
    /// step index.
    pub groups: u32,
}

/// Frame size and group count for an estimated backlog.
///
/// The frame is the allowed size closest to the backlog (ties go to the
/// larger frame). Beyond the largest frame the population is split into
/// `ceil(K / 256)` modulo groups.
pub fn edfsa_plan(k_est: f64) -> EdfsaPlan {
    let k = if k_est.is_finite() { k_est.max(0.0) } else { 0.0 };
    let max = *EDFSA_FRAME_SIZES.last().unwrap();
    if k > f64::from(max) {
        return EdfsaPlan {
            slots: max,
            groups: (k / f64::from(max)).ceil() as u32,
        };
    }
    let slots = EDFSA_FRAME_SIZES
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let da = (f64::from(a) - k).abs();
            let db = (f64::from(b) - k).abs();
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .unwrap();
    EdfsaPlan { slots, groups: 1 }
}

/// Estimates the backlog, plans a frame and runs one FSA round per group;
/// repeats until every present tag is read. `max_rounds` counts FSA rounds.
pub fn run_edfsa_inventory<R: RngCore + ?Sized>(
    tags: &mut Vec<Tag>,
    initial_slots: u32,
    timing: &TimingModel,
    rng: &mut R,
    max_rounds: u32,
    churn: &Churn,
) -> Result<InventoryResult, Error> {
    if max_rounds == 0 {
        return Err(Error::ZeroMaxRounds);
    }
    let mut result = InventoryResult::new(Protocol::Edfsa);
    let mut plan = EdfsaPlan {
        slots: edfsa_plan(f64::from(initial_slots)).slots,
        groups: 1,
    };
    let mut rounds = 0;
    'cycles: loop {
        let mut backlog = 0.0;
        for group in 0..plan.groups {
            if rounds == max_rounds {
                break 'cycles;
            }
            if rounds > 0 {
                let ev = churn.apply(tags, rng);
                result.arrivals += ev.arrivals;
                result.departures += ev.departures;
            }
            let groups = u64::from(plan.groups);
            let in_group = |t: &Tag| t.epc % groups == u64::from(group);
            let trace = fsa_round_where(tags, plan.slots, timing, rng, Protocol::Edfsa, in_group)?;
            rounds += 1;
            backlog += estimate_backlog(&trace)?.k_est;
            result.push(trace);
            if pending_count(tags) == 0 {
                break 'cycles;
            }
        }
        plan = edfsa_plan(backlog);
    }
    result.finish(tags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::random_population;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    #[test]
    fn empty_fsa_round() {
        let mut rng = RngStream::new(0, 0);
        let trace = run_fsa_round(&mut [], 4, &TimingModel::default(), &mut rng).unwrap();
        assert!(trace.identified_epcs.is_empty());
        assert_eq!(trace.total_us, 1480.0);
        trace.check_invariants().unwrap();
    }

    #[test]
    fn single_tag_fsa_round() {
        let mut tags = [Tag::new(3)];
        let mut rng = RngStream::new(0, 0);
        let trace = run_fsa_round(&mut tags, 1, &TimingModel::default(), &mut rng).unwrap();
        assert_eq!(trace.identified_epcs, vec![3]);
        assert_eq!(trace.undetected_collision_count, 0);
        trace.check_invariants().unwrap();
    }

    #[test]
    fn fsa_collisions_are_always_detected() {
        let mut rng = RngStream::new(2, 0);
        let mut tags = random_population(40, &mut rng);
        let trace = run_fsa_round(&mut tags, 8, &TimingModel::default(), &mut rng).unwrap();
        assert_eq!(trace.undetected_collision_count, 0);
        assert_eq!(trace.k_active, 40);
        trace.check_invariants().unwrap();
    }

    #[test]
    fn fsa_rejects_zero_slots() {
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            run_fsa_round(&mut [], 0, &TimingModel::default(), &mut rng),
            Err(Error::ZeroSlots)
        );
    }

    #[test]
    fn plan_examples() {
        assert_eq!(edfsa_plan(0.0), EdfsaPlan { slots: 16, groups: 1 });
        assert_eq!(edfsa_plan(100.0), EdfsaPlan { slots: 128, groups: 1 });
        assert_eq!(edfsa_plan(600.0), EdfsaPlan { slots: 256, groups: 3 });
        assert_eq!(edfsa_plan(256.0), EdfsaPlan { slots: 256, groups: 1 });
        assert_eq!(edfsa_plan(48.0), EdfsaPlan { slots: 64, groups: 1 });
        assert_eq!(edfsa_plan(f64::INFINITY), EdfsaPlan { slots: 16, groups: 1 });
    }

    #[test]
    fn edfsa_inventory_small_cases() {
        let timing = TimingModel::default();
        let mut rng = RngStream::new(0, 0);
        let res = run_edfsa_inventory(&mut Vec::new(), 128, &timing, &mut rng, 5, &Churn::none()).unwrap();
        assert_eq!(res.tags_identified, 0);

        let mut tags = vec![Tag::new(77)];
        let res = run_edfsa_inventory(&mut tags, 128, &timing, &mut rng, 1, &Churn::none()).unwrap();
        assert_eq!(res.tags_identified, 1);
        assert_eq!(res.rounds.len(), 1);
    }

    #[test]
    fn edfsa_groups_large_population() {
        let timing = TimingModel::default();
        let mut rng = RngStream::new(8, 0);
        let mut tags = random_population(700, &mut rng);
        let res = run_edfsa_inventory(&mut tags, 1024, &timing, &mut rng, 2000, &Churn::none()).unwrap();
        assert_eq!(res.tags_identified, 700);
        for r in &res.rounds {
            r.check_invariants().unwrap();
            assert!(EDFSA_FRAME_SIZES.contains(&r.slots));
        }
        // The first cycle starts ungrouped; later cycles split the backlog.
        assert!(res.rounds.iter().skip(1).any(|r| r.k_active < 400));
    }

    #[test]
    fn fsa_inventory_terminates() {
        let timing = TimingModel::default();
        let mut rng = RngStream::new(4, 0);
        let mut tags = random_population(30, &mut rng);
        let res = run_fsa_inventory(&mut tags, 32, &timing, &mut rng, 500, &Churn::none()).unwrap();
        assert_eq!(res.tags_identified, 30);
        assert!(res.rounds.iter().all(|r| r.total_us == 200.0 + 32.0 * 320.0));
    }

    proptest! {
        #[test]
        fn groups_partition_population(epcs in proptest::collection::vec(any::<u64>(), 0..300), k in 257.0f64..5000.0) {
            let plan = edfsa_plan(k);
            let mut counts = vec![0usize; plan.groups as usize];
            for e in &epcs {
                let hits: Vec<u32> = (0..plan.groups).filter(|&g| e % u64::from(plan.groups) == u64::from(g)).collect();
                prop_assert_eq!(hits.len(), 1);
                counts[hits[0] as usize] += 1;
            }
            prop_assert_eq!(counts.iter().sum::<usize>(), epcs.len());
        }
    }
}
