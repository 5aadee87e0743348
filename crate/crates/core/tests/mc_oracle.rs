mod common;

use std::collections::BTreeMap;

use zqwalk::circulant::IncrementLaw1D;
use zqwalk::grouped::GroupedChain;
use zqwalk::mc_oracle::*;
use zqwalk::product::{IncrementDist, StatePoint};
use zqwalk::zq_core::CountVector;

#[test]
fn explicit_law_paths_match_matrix_powers() {
    let mut rng = common::rng(40);
    let incr = common::random_explicit(&mut rng, 3, 2);
    let x0 = StatePoint::new(vec![2, 1], 3).unwrap();
    let p3 = matrix_power_reference(&incr, 3).unwrap();
    let obs = simulate_paths(&incr, &x0, 3, 100_000, 8, Observable::State).unwrap();
    let report = compare(&expected_table(&p3, &x0, Observable::State), &obs).unwrap();
    assert!(report.max_z < 4.0, "{report:?}");
}

#[test]
fn uniform_increments_mix_in_one_step() {
    let incr = IncrementDist::iid(IncrementLaw1D::<f64>::uniform(3).unwrap(), 3).unwrap();
    let x0 = StatePoint::zero(3, 3).unwrap();
    let obs = simulate_paths(&incr, &x0, 1, 100_000, 3, Observable::State).unwrap();
    let expected: BTreeMap<Vec<usize>, f64> = (0..27).map(|i| (common::point(i, 3, 3), 1.0 / 27.0)).collect();
    let report = compare(&expected, &obs).unwrap();
    assert!(report.max_z < 4.0, "{report:?}");
}

#[test]
fn grouped_counts_match_grouped_chain() {
    let mut rng = common::rng(41);
    let (q, d, t) = (3, 4, 2);
    let incr = common::random_exchangeable(&mut rng, q, d);
    let chain = GroupedChain::from_increment(&incr).unwrap().powi(t as u32);
    let x0 = StatePoint::zero(d, q).unwrap();
    let obs = simulate_paths(&incr, &x0, t, 100_000, 12, Observable::Counts).unwrap();
    let m0 = CountVector::origin(d, q).unwrap();
    let expected = zqwalk::zq_core::enumerate_count_vectors(d, q)
        .unwrap()
        .into_iter()
        .map(|n| (n.counts().to_vec(), chain.transition(&m0, &n).unwrap()))
        .filter(|(_, p)| *p > 1e-15)
        .collect();
    let report = compare(&expected, &obs).unwrap();
    assert!(report.passes(), "{report:?}");
}

#[test]
fn wrong_expectation_is_flagged() {
    let mut rng = common::rng(42);
    let incr = common::random_explicit(&mut rng, 3, 2);
    let other = common::random_explicit(&mut rng, 3, 2);
    let x0 = StatePoint::zero(2, 3).unwrap();
    let obs = simulate_paths(&incr, &x0, 2, 100_000, 1, Observable::State).unwrap();
    let wrong = expected_table(&matrix_power_reference(&other, 2).unwrap(), &x0, Observable::State);
    match compare(&wrong, &obs) {
        Ok(r) => assert!(r.max_z > 10.0),
        Err(e) => assert!(matches!(e, zqwalk::Error::ImpossibleOutcome(_))),
    }
}

#[test]
fn identical_seeds_reproduce_byte_for_byte() {
    let mut rng = common::rng(43);
    let incr = common::random_dist(&mut rng, 3, 3, 3);
    let x0 = StatePoint::zero(3, 3).unwrap();
    let a = serde_json::to_vec(&simulate_paths(&incr, &x0, 5, 20_000, 99, Observable::Counts).unwrap()).unwrap();
    let b = serde_json::to_vec(&simulate_paths(&incr, &x0, 5, 20_000, 99, Observable::Counts).unwrap()).unwrap();
    assert_eq!(a, b);
}
