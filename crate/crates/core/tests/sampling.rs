// SPDX-License-Identifier: Apache-2.0

use std::num::NonZeroU32;

use proptest::prelude::*;
use qlearn_core::sampling::{displayed_probabilities, ShotRng};
use qlearn_core::{sample, BitString, Distribution, SampleError, SamplingMode, ShotSession};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bits(s: &str) -> BitString {
    s.parse().unwrap()
}

#[test]
fn bell_histogram_100k() {
    let dist = Distribution::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
    let hist = sample(&dist, 100_000, 2024).unwrap();
    let total: u64 = hist.values().sum();
    assert_eq!(total, 100_000);
    for (key, truth) in [("00", 0.5), ("01", 0.0), ("10", 0.0), ("11", 0.5)] {
        let freq = *hist.get(&bits(key)).unwrap_or(&0) as f64 / 100_000.0;
        assert!((freq - truth).abs() <= 0.01, "{key}: {freq}");
    }
    // frozen for this seed
    assert_eq!(hist.get(&bits("00")), Some(&50_088));
    assert_eq!(hist.get(&bits("11")), Some(&49_912));
}

#[test]
fn golden_shot_sequences() {
    let dist = Distribution::new(vec![0.5, 0.5]).unwrap();
    let run = |seed, n| {
        let mut s = ShotSession::new(seed);
        (0..n)
            .map(|_| s.measure_shot(&dist, &bits("0")).output.to_string())
            .collect::<String>()
    };
    assert_eq!(run(42, 20), "11010001101111101000");
    assert_eq!(run(7, 10), "0011100101");
}

#[test]
fn shot_records_are_numbered_from_one() {
    let dist = Distribution::new(vec![0.5, 0.5]).unwrap();
    let mut s = ShotSession::new(1);
    let records: Vec<_> = (0..5).map(|_| s.measure_shot(&dist, &bits("0"))).collect();
    assert_eq!(records.iter().map(|r| r.index).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    assert!(records.iter().all(|r| r.input == bits("0") && r.output.len() == 1));
}

/// Draws follow the inverse CDF of the first ChaCha8 outputs.
#[test]
fn draws_match_reference_generator() {
    let probs = [0.1, 0.2, 0.3, 0.4];
    let dist = Distribution::new(probs.to_vec()).unwrap();
    let mut ours = ShotRng::from_seed(99);
    let mut reference = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let u = (reference.next_u64() >> 11) as f64 / 9_007_199_254_740_992.0;
        let mut acc = 0.0;
        let expected = probs
            .iter()
            .position(|p| {
                acc += p;
                u < acc
            })
            .unwrap_or(3);
        assert_eq!(ours.draw(&dist), expected);
    }
}

#[test]
fn deterministic_distribution() {
    let dist = Distribution::new(vec![0.0, 1.0]).unwrap();
    let mut s = ShotSession::new(0);
    assert_eq!(s.measure_shot(&dist, &bits("0")).output, bits("1"));
    assert_eq!(sample(&dist, 50, 3).unwrap().get(&bits("1")), Some(&50));
}

#[test]
fn zero_shots_is_an_error() {
    let dist = Distribution::new(vec![1.0, 0.0]).unwrap();
    assert_eq!(sample(&dist, 0, 0), Err(SampleError::ZeroShots));
}

#[test]
fn display_modes() {
    let dist = Distribution::new(vec![0.25, 0.75]).unwrap();
    assert_eq!(
        displayed_probabilities(&dist, SamplingMode::Matrix, 0, &[]),
        vec![0.25, 0.75]
    );
    let sampled = displayed_probabilities(&dist, SamplingMode::Sample(NonZeroU32::new(1000).unwrap()), 5, &[]);
    assert!((sampled.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((sampled[1] - 0.75).abs() < 0.05);
    assert_eq!(
        displayed_probabilities(&dist, SamplingMode::Manual, 0, &[]),
        vec![0.0, 0.0]
    );
    let mut s = ShotSession::new(3);
    let shots: Vec<_> = (0..4).map(|_| s.measure_shot(&dist, &bits("0"))).collect();
    let manual = displayed_probabilities(&dist, SamplingMode::Manual, 0, &shots);
    assert!((manual.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn arb_distribution() -> impl Strategy<Value = Distribution> {
    (1usize..=4).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], 1 << n).prop_filter_map("zero mass", |w| {
            let total: f64 = w.iter().sum();
            (total > 1e-6).then(|| Distribution::new(w.iter().map(|x| x / total).collect()).unwrap())
        })
    })
}

proptest! {
    #[test]
    fn counts_sum_and_support(dist in arb_distribution(), shots in 1u32..2000, seed in any::<u64>()) {
        let hist = sample(&dist, shots, seed).unwrap();
        prop_assert_eq!(hist.values().sum::<u64>(), u64::from(shots));
        for key in hist.keys() {
            prop_assert!(dist.probability(key) > 0.0, "zero-mass outcome {} drawn", key);
        }
        prop_assert_eq!(&hist, &sample(&dist, shots, seed).unwrap());
    }
}
