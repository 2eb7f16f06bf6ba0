mod common;

use explore_go::exploration::{intrinsic_reward, Rnd, RunningStd};
use explore_go::nn::{AdamConfig, Mlp};
use proptest::prelude::*;
use rand::Rng;

use common::*;

#[test]
fn bonus_strictly_decreases_on_a_repeated_observation() {
    let observations = cross_observations();
    for (seed, obs) in observations.iter().enumerate().step_by(7) {
        let trace = rnd_bonus_trace(seed as u64, obs, 100);
        assert!(trace.windows(2).all(|w| w[1] < w[0]), "seed {seed}");
    }
}

#[test]
fn trained_observation_is_less_novel() {
    let observations = cross_observations();
    let (seen, novel) = (&observations[0], &observations[observations.len() - 1]);
    for seed in 0..10 {
        let mut rnd = default_rnd(seed);
        for _ in 0..300 {
            rnd.update_predictor(&[seen]).unwrap();
        }
        assert!(rnd.raw_bonus(seen).unwrap() < rnd.raw_bonus(novel).unwrap(), "seed {seed}");
    }
}

#[test]
fn target_is_frozen() {
    let mut rnd = default_rnd(1);
    let before = rnd.target().clone();
    let observations = cross_observations();
    let batch: Vec<&[f64]> = observations.iter().map(Vec::as_slice).collect();
    let predictor_before = rnd.predictor().clone();
    for _ in 0..20 {
        rnd.update_predictor(&batch).unwrap();
    }
    assert_eq!(rnd.target(), &before);
    assert_eq!(rnd.target().params(), before.params());
    assert_ne!(rnd.predictor().params(), predictor_before.params());
}

#[test]
fn identical_networks_give_zero_bonus() {
    let net = Mlp::orthogonal(&[75, 16, 8], 1.0, &mut rng(2)).unwrap();
    let rnd = Rnd::from_networks(net.clone(), net, AdamConfig::default()).unwrap();
    for obs in cross_observations() {
        assert_eq!(rnd.raw_bonus(&obs).unwrap(), 0.0);
    }
}

#[test]
fn zero_learning_rate_keeps_the_predictor() {
    let mut rng = rng(3);
    let target = Mlp::orthogonal(&[75, 16, 8], 1.0, &mut rng).unwrap();
    let predictor = Mlp::orthogonal(&[75, 16, 8], 1.0, &mut rng).unwrap();
    let mut rnd = Rnd::from_networks(target, predictor.clone(), AdamConfig { learning_rate: 0.0, ..AdamConfig::default() }).unwrap();
    let obs = cross_observations();
    rnd.update_predictor(&[&obs[0], &obs[1]]).unwrap();
    assert_eq!(rnd.predictor().params(), predictor.params());
}

#[test]
fn predictor_step_descends_in_most_trials() {
    let observations = cross_observations();
    let mut rng = rng(4);
    let mut descended = 0;
    for trial in 0..50 {
        let mut rnd = default_rnd(1000 + trial);
        let batch: Vec<&[f64]> = (0..8).map(|_| observations[rng.gen_range(0..observations.len())].as_slice()).collect();
        let before = rnd.update_predictor(&batch).unwrap().unwrap();
        let after: f64 = batch.iter().map(|o| rnd.raw_bonus(o).unwrap()).sum::<f64>() / (batch.len() as f64 * 32.0);
        if after <= before {
            descended += 1;
        }
    }
    assert!(descended > 25, "{descended} of 50");
}

#[test]
fn terminal_free_intrinsic_reward_is_normalised() {
    let rnd = default_rnd(5);
    let mut running = RunningStd::new(1e-8);
    let observations = cross_observations();
    let rewards: Vec<f64> = observations.iter().map(|o| intrinsic_reward(&rnd, o, &mut running).unwrap()).collect();
    assert!(rewards.iter().all(|&r| r >= 0.0 && r.is_finite()));
    // first reward divides by its own magnitude
    assert!((rewards[0] - 1.0).abs() < 1e-12);
    assert_eq!(running.count(), observations.len() as u64);
}

proptest! {
    #[test]
    fn raw_bonus_is_non_negative(seed in 0u64..1000, obs in prop::collection::vec(-2.0..2.0f64, 75)) {
        let rnd = default_rnd(seed);
        prop_assert!(rnd.raw_bonus(&obs).unwrap() >= 0.0);
    }
}
