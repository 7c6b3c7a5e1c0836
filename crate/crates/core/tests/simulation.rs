use afsa::afsa::{run_afsa_inventory, run_afsa_round};
use afsa::analytic::{
    expected_idle, expected_reserved, expected_undetected, expected_undetected_exact, round_duration_for_successes,
};
use afsa::baselines::run_fsa_round;
use afsa::config::ExperimentConfig;
use afsa::engine::run_experiment;
use afsa::estimator::AdaptationPolicy;
use afsa::population::random_population;
use afsa::rng::RngStream;
use afsa::{FrameConfig, Protocol, SeqBits, Tag, TimingModel};
use proptest::prelude::*;

fn reset(tags: &mut [Tag]) {
    tags.iter_mut().for_each(|t| t.identified = false);
}

#[test]
fn afsa_round_means_match_closed_forms() {
    let timing = TimingModel::default();
    let frame = FrameConfig::new(128, 2, 1).unwrap();
    let mut rng = RngStream::new(77, 0);
    let mut tags = random_population(100, &mut rng);
    let rounds = 20_000;
    let (mut idle, mut reserved, mut undetected) = (0u64, 0u64, 0u64);
    for _ in 0..rounds {
        reset(&mut tags);
        let trace = run_afsa_round(&mut tags, &frame, &timing, &mut rng).unwrap();
        trace.check_invariants().unwrap();
        idle += u64::from(trace.idle_count);
        reserved += u64::from(trace.reserved_true_count);
        undetected += u64::from(trace.undetected_collision_count);
    }
    let mean = |x: u64| x as f64 / f64::from(rounds);
    let ei = expected_idle(100.0, 128).unwrap();
    let er = expected_reserved(100.0, 128).unwrap();
    assert!((mean(idle) - ei).abs() / ei < 0.02);
    assert!((mean(reserved) - er).abs() / er < 0.02);

    let exact = expected_undetected_exact(100, 128, 2).unwrap();
    let approx = expected_undetected(100.0, 128, 2).unwrap();
    let uc = mean(undetected);
    // Poisson-like count; 4 standard errors of slack below the exact value.
    let se = (exact / f64::from(rounds)).sqrt();
    assert!(uc >= exact - 4.0 * se && uc <= approx, "exact {exact} observed {uc} approx {approx}");
}

#[test]
fn fsa_identified_per_round_matches_reserved() {
    let timing = TimingModel::default();
    let mut rng = RngStream::new(5, 1);
    let mut tags = random_population(100, &mut rng);
    let rounds = 20_000;
    let mut read = 0u64;
    for _ in 0..rounds {
        reset(&mut tags);
        let trace = run_fsa_round(&mut tags, 128, &timing, &mut rng).unwrap();
        read += trace.identified_epcs.len() as u64;
    }
    let mean = read as f64 / f64::from(rounds);
    let er = expected_reserved(100.0, 128).unwrap();
    assert!((mean - er).abs() / er < 0.02, "{mean} vs {er}");
}

#[test]
fn realized_round_time_matches_formula() {
    let timing = TimingModel::default();
    let mut rng = RngStream::new(3, 3);
    for case in 0..50u32 {
        let k = 1 + case * 7;
        let slots = 1 << (case % 9);
        let n = (case % 6 + 1) as u8;
        let mut tags = random_population(k, &mut rng);
        let policy = AdaptationPolicy::with_seq_bits(SeqBits::Fixed(n));
        let res = run_afsa_inventory(&mut tags, FrameConfig::new(slots, n, 1).unwrap(), &policy, &timing, &mut rng, 10_000)
            .unwrap();
        for r in &res.rounds {
            let expected =
                round_duration_for_successes(r.slots, r.seq_bits.unwrap(), f64::from(r.apparent_reserved()), &timing)
                    .unwrap();
            assert!((r.total_us - expected).abs() < 1e-6);
        }
    }
}

#[test]
fn afsa_beats_edfsa_across_populations() {
    for k in [50u32, 100, 200, 500] {
        let base = ExperimentConfig {
            k_initial: k,
            frame_slots: 128,
            seq_bits: SeqBits::Fixed(2),
            trials: 200,
            seed: 31,
            ..ExperimentConfig::default()
        };
        let afsa = run_experiment(&base).unwrap();
        let edfsa = run_experiment(&ExperimentConfig {
            protocol: Protocol::Edfsa,
            ..base
        })
        .unwrap();
        let a = afsa.aggregate.mean_per_tag_us.unwrap();
        let e = edfsa.aggregate.mean_per_tag_us.unwrap();
        assert!(a < e, "K={k}: afsa {a} edfsa {e}");
    }
}

#[test]
fn static_runs_read_everything() {
    for k in [1u32, 10, 250, 1000] {
        let res = run_experiment(&ExperimentConfig {
            k_initial: k,
            trials: 10,
            ..ExperimentConfig::default()
        })
        .unwrap();
        assert_eq!(res.aggregate.identification_rate, 1.0, "K={k}");
        assert_eq!(res.aggregate.incomplete_trials, 0);
    }
}

#[test]
fn churn_keeps_identified_within_ever_present() {
    let res = run_experiment(&ExperimentConfig {
        k_initial: 80,
        arrival_rate: 5.0,
        departure_prob: 0.1,
        trials: 50,
        seed: 12,
        ..ExperimentConfig::default()
    })
    .unwrap();
    for t in &res.per_trial {
        let arrivals = t.ever_present - 80;
        assert_eq!(t.ever_present, 80 + arrivals);
        assert!(t.tags_identified <= t.ever_present);
    }
    assert!(res.aggregate.identification_rate < 1.0);
}

#[test]
fn undetected_collisions_fall_with_sequence_length() {
    let mut prev = f64::INFINITY;
    for n in 1..=6u8 {
        let res = run_experiment(&ExperimentConfig {
            k_initial: 100,
            frame_slots: 64,
            seq_bits: SeqBits::Fixed(n),
            trials: 300,
            seed: 4,
            ..ExperimentConfig::default()
        })
        .unwrap();
        let mean =
            res.per_trial.iter().map(|t| t.undetected_collisions_total as f64).sum::<f64>() / res.per_trial.len() as f64;
        assert!(mean <= prev, "n={n}: {mean} > {prev}");
        prev = mean;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inventory_is_deterministic(seed in any::<u64>(), stream in any::<u64>(), k in 0u32..150, slots in 1u32..200) {
        let timing = TimingModel::default();
        let policy = AdaptationPolicy::default();
        let initial = policy.initial_frame(slots);
        let run = || {
            let mut rng = RngStream::new(seed, stream);
            let mut tags = random_population(k, &mut rng);
            run_afsa_inventory(&mut tags, initial, &policy, &timing, &mut rng, 5000).unwrap()
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn every_round_satisfies_trace_invariants(seed in any::<u64>(), k in 0u32..300, slots in 1u32..300, n in 1u8..=8, d in 1u64..4) {
        let timing = TimingModel::default();
        let mut rng = RngStream::new(seed, 0);
        let mut tags = random_population(k, &mut rng);
        let trace = run_afsa_round(&mut tags, &FrameConfig::new(slots, n, d).unwrap(), &timing, &mut rng).unwrap();
        prop_assert!(trace.check_invariants().is_ok());
        let singles = trace.observations.iter().filter(|o| o.apparent() && o.occupants == 1).count();
        prop_assert_eq!(trace.identified_epcs.len(), singles);
        prop_assert_eq!(tags.iter().filter(|t| t.identified).count(), singles);
    }
}
