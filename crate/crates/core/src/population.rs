//! Tag populations and between-round churn.

use std::collections::HashSet;

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::model::Tag;
use crate::rng::draw_unit;

/// Appends `count` tags with random EPCs that do not collide with any EPC
/// already in `tags`.
pub fn spawn_tags<R: RngCore + ?Sized>(tags: &mut Vec<Tag>, count: u32, rng: &mut R) {
    let mut seen: HashSet<u64> = tags.iter().map(|t| t.epc).collect();
    tags.reserve(count as usize);
    for _ in 0..count {
        let epc = loop {
            let candidate = rng.next_u64();
            if seen.insert(candidate) {
                break candidate;
            }
        };
        tags.push(Tag::new(epc));
    }
}

pub fn random_population<R: RngCore + ?Sized>(count: u32, rng: &mut R) -> Vec<Tag> {
    let mut tags = Vec::new();
    spawn_tags(&mut tags, count, rng);
    tags
}

/// Present tags that still need to be read.
pub fn pending_count(tags: &[Tag]) -> u32 {
    tags.iter().filter(|t| t.pending()).count() as u32
}

/// Population churn applied between rounds: Poisson arrivals and
/// independent per-tag departures.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Churn {
    /// Expected new tags per round.
    pub arrival_rate: f64,
    /// Probability that a present tag leaves before the next round.
    pub departure_prob: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChurnEvents {
    pub arrivals: u32,
    pub departures: u32,
}

impl Churn {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_static(&self) -> bool {
        self.arrival_rate == 0.0 && self.departure_prob == 0.0
    }

    /// Departures first (one draw per present tag, in population order),
    /// then the arrival count, then the new EPCs. A static churn draws
    /// nothing.
    pub fn apply<R: RngCore + ?Sized>(&self, tags: &mut Vec<Tag>, rng: &mut R) -> ChurnEvents {
        let mut events = ChurnEvents::default();
        if self.is_static() {
            return events;
        }
        if self.departure_prob > 0.0 {
            for tag in tags.iter_mut().filter(|t| t.present) {
                if draw_unit(rng) < self.departure_prob {
                    tag.present = false;
                    events.departures += 1;
                }
            }
        }
        if self.arrival_rate > 0.0 {
            events.arrivals = poisson(self.arrival_rate, rng);
            spawn_tags(tags, events.arrivals, rng);
        }
        events
    }
}

/// Poisson variate by inverse transform on a single uniform draw.
pub fn poisson<R: RngCore + ?Sized>(lambda: f64, rng: &mut R) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let u = draw_unit(rng);
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    // For large lambda e^-lambda underflows; cap the walk well past the mean.
    let cap = (lambda + 40.0 * lambda.sqrt() + 40.0) as u32;
    while u >= cdf && k < cap {
        k += 1;
        p *= lambda / f64::from(k);
        cdf += p;
    }
    k
}
