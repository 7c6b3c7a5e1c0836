//! Independent oracles for the closed forms: exhaustive enumeration on small
//! frames and a plain Monte Carlo that shares no code with the simulator.

use afsa::analytic::{
    expected_idle, expected_reserved, expected_undetected, expected_undetected_exact, expected_unresolved,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Integer totals over every equally likely outcome.
#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    outcomes: u64,
    reserved: u64,
    idle: u64,
    unresolved: u64,
    undetected_exact: u64,
    /// Multi-occupant slots whose two lowest-indexed occupants agree.
    undetected_first_pair: u64,
}

/// Enumerates all `N^K` slot assignments and, when `seq_bits > 0`, all
/// `2^(nK)` sequence choices.
fn enumerate(k: u32, slots: u32, seq_bits: u32) -> Tally {
    let space = 1u64 << seq_bits;
    let assignments = u64::from(slots).pow(k);
    let seq_choices = space.pow(k);
    let mut t = Tally::default();
    for a in 0..assignments {
        let mut slot_of = Vec::with_capacity(k as usize);
        let mut x = a;
        for _ in 0..k {
            slot_of.push((x % u64::from(slots)) as usize);
            x /= u64::from(slots);
        }
        for s in 0..seq_choices {
            let mut seq_of = Vec::with_capacity(k as usize);
            let mut y = s;
            for _ in 0..k {
                seq_of.push(y % space);
                y /= space;
            }
            t.outcomes += 1;
            for slot in 0..slots as usize {
                let occ: Vec<usize> = (0..k as usize).filter(|&i| slot_of[i] == slot).collect();
                match occ.len() {
                    0 => t.idle += 1,
                    1 => t.reserved += 1,
                    _ => {
                        t.unresolved += 1;
                        if occ.iter().all(|&i| seq_of[i] == seq_of[occ[0]]) {
                            t.undetected_exact += 1;
                        }
                        if seq_of[occ[0]] == seq_of[occ[1]] {
                            t.undetected_first_pair += 1;
                        }
                    }
                }
            }
        }
    }
    t
}

fn ratio(num: u64, den: u64) -> f64 {
    num as f64 / den as f64
}

fn assert_close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{what}: {a} vs {b}");
}

#[test]
fn enumeration_reproduces_reserved_idle_unresolved() {
    for k in 0..=4u32 {
        for slots in 1..=4u32 {
            let t = enumerate(k, slots, 0);
            let kf = f64::from(k);
            assert_close(expected_reserved(kf, slots).unwrap(), ratio(t.reserved, t.outcomes), "E[R]");
            assert_close(expected_idle(kf, slots).unwrap(), ratio(t.idle, t.outcomes), "E[I]");
            assert_close(expected_unresolved(kf, slots).unwrap(), ratio(t.unresolved, t.outcomes), "E[U]");
        }
    }
}

#[test]
fn two_by_two_is_exact() {
    let t = enumerate(2, 2, 0);
    assert_eq!(t.outcomes, 4);
    assert_eq!((t.reserved, t.idle, t.unresolved), (4, 2, 2));
    assert_eq!(expected_reserved(2.0, 2).unwrap(), 1.0);
    assert_eq!(expected_idle(2.0, 2).unwrap(), 0.5);
    assert_eq!(expected_unresolved(2.0, 2).unwrap(), 0.5);
}

#[test]
fn enumeration_reproduces_undetected_models() {
    for k in 0..=4u32 {
        for slots in 1..=4u32 {
            for n in 1..=2u32 {
                let t = enumerate(k, slots, n);
                let kf = f64::from(k);
                let nb = n as u8;
                // E[U]·2^-n is exact when each collided slot is judged on
                // one pair of sequences.
                assert_close(
                    expected_undetected(kf, slots, nb).unwrap(),
                    ratio(t.undetected_first_pair, t.outcomes),
                    "pairwise model",
                );
                assert_close(
                    expected_undetected_exact(k, slots, nb).unwrap(),
                    ratio(t.undetected_exact, t.outcomes),
                    "exact model",
                );
                if k <= 2 {
                    assert_close(
                        expected_undetected(kf, slots, nb).unwrap(),
                        ratio(t.undetected_exact, t.outcomes),
                        "two-tag agreement",
                    );
                }
            }
        }
    }
}

#[test]
fn three_tags_expose_the_approximation_gap() {
    // All three in one slot: the pairwise model says 1/4, truth is 1/16.
    let t = enumerate(3, 1, 2);
    assert_eq!(ratio(t.undetected_exact, t.outcomes), 0.0625);
    assert_eq!(expected_undetected(3.0, 1, 2).unwrap(), 0.25);
}

/// Throws `k` balls into `slots` bins `trials` times.
fn monte_carlo(k: u32, slots: u32, trials: u32, seed: u64) -> (f64, f64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut counts = vec![0u32; slots as usize];
    let (mut reserved, mut idle) = (0u64, 0u64);
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..k {
            counts[rng.random_range(0..slots as usize)] += 1;
        }
        reserved += counts.iter().filter(|&&c| c == 1).count() as u64;
        idle += counts.iter().filter(|&&c| c == 0).count() as u64;
    }
    (reserved as f64 / f64::from(trials), idle as f64 / f64::from(trials))
}

#[test]
fn monte_carlo_agrees_with_closed_forms() {
    let (r, i) = monte_carlo(100, 128, 100_000, 2024);
    let er = expected_reserved(100.0, 128).unwrap();
    let ei = expected_idle(100.0, 128).unwrap();
    assert!((r - er).abs() / er < 0.005, "E[R] {er} vs MC {r}");
    assert!((i - ei).abs() / ei < 0.005, "E[I] {ei} vs MC {i}");
    assert!((er - 46.00).abs() < 0.01);
    assert!((ei - 58.42).abs() < 0.01);
}
