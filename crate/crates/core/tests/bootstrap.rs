mod common;

use common::{assert_close, random_dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smoothsig::bootstrap::{
    bootstrap_quantile, draw_multipliers, resample_response, resample_response_keep_isolated,
    PreparedTest,
};
use smoothsig::{
    default_bandwidths, run_test, Bandwidths, Error, IsolatedPolicy, MultiplierLaw, TestConfig, VarianceEstimator,
};

fn config(n: usize) -> TestConfig {
    let mut cfg = TestConfig::new(default_bandwidths(n, 2.0).unwrap());
    cfg.seed = 99;
    cfg.bootstrap_reps = 49;
    cfg
}

#[test]
fn cached_matrices_match_a_fresh_fit() {
    for variance in [VarianceEstimator::VarHat, VarianceEstimator::VarTilde] {
        let d = random_dataset(8, 70, 2, false);
        let mut cfg = config(70);
        cfg.variance = variance;
        let p = PreparedTest::new(&d, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let eta = draw_multipliers(70, MultiplierLaw::MammenTwoPoint, &mut rng);
            let fast = p.bootstrap_statistic(&eta).unwrap().unwrap();
            let y_star = resample_response_keep_isolated(&p.smoother, &eta).unwrap();
            let fresh = PreparedTest::new(&d.with_response(y_star).unwrap(), &cfg).unwrap();
            let slow = fresh.evaluate(&fresh.smoother).0.decision_value().unwrap();
            assert_close("bootstrap statistic", fast, slow, 1e-12, 1e-12);
        }
    }
}

#[test]
fn degenerate_multipliers() {
    let d = random_dataset(2, 40, 1, false);
    let p = PreparedTest::new(&d, &config(40)).unwrap();
    let sm = &p.smoother;
    let zero = resample_response_keep_isolated(sm, &[0.0; 40]).unwrap();
    let one = resample_response_keep_isolated(sm, &[1.0; 40]).unwrap();
    for i in 0..40 {
        match sm.rhat[i] {
            Some(r) => assert_eq!(zero[i], r),
            None => assert_eq!(zero[i], sm.y[i]),
        }
        assert_close("eta = 1", one[i], sm.y[i], 1e-15, 1e-15);
    }
}

#[test]
fn constant_response_is_degenerate() {
    let d = random_dataset(2, 30, 1, false);
    let d = d.with_response(vec![1.5; 30]).unwrap();
    assert!(matches!(run_test(&d, &config(30)), Err(Error::Degenerate(_))));
}

#[test]
fn strict_policy_refuses_isolated_observations() {
    let d = random_dataset(2, 30, 1, false);
    let mut cfg = config(30);
    cfg.bandwidths = Bandwidths::new(0.05, 1.0, 2.0).unwrap();
    cfg.isolated = IsolatedPolicy::Error;
    let p = PreparedTest::new(&d, &cfg).unwrap();
    assert!(!p.smoother.isolated().is_empty());
    assert!(matches!(p.bootstrap_draws(), Err(Error::IsolatedObservation { .. })));
    let i = p.smoother.isolated()[0];
    assert!(matches!(
        resample_response(&p.smoother, &[1.0; 30]),
        Err(Error::IsolatedObservation { index }) if index == i
    ));
}

#[test]
fn draws_are_reproducible_across_pools() {
    let d = random_dataset(31, 80, 2, false);
    let cfg = config(80);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_test(&d, &cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a.bootstrap_draws, b.bootstrap_draws);
    assert_eq!(a.critical_value.to_bits(), b.critical_value.to_bits());
    assert_eq!(a, run(4));
}

#[test]
fn critical_value_decreases_with_alpha() {
    let d = random_dataset(12, 60, 1, false);
    let res = run_test(&d, &config(60)).unwrap();
    let mut draws = res.bootstrap_draws.unwrap();
    draws.sort_by(f64::total_cmp);
    assert_eq!(bootstrap_quantile(&draws, 0.05), res.critical_value);
    let mut prev = f64::INFINITY;
    for a in [0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 0.9] {
        let q = bootstrap_quantile(&draws, a);
        assert!(q <= prev);
        prev = q;
    }
}

#[test]
fn single_replication_is_its_own_critical_value() {
    let d = random_dataset(12, 40, 1, false);
    let mut cfg = config(40);
    cfg.bootstrap_reps = 1;
    let res = run_test(&d, &cfg).unwrap();
    assert_eq!(res.bootstrap_draws.as_deref(), Some(&[res.critical_value][..]));
}

#[test]
fn asymptotic_critical_value() {
    let d = random_dataset(12, 40, 1, false);
    let mut cfg = config(40);
    cfg.alpha = 0.10;
    cfg.critical = smoothsig::CriticalMethod::Asymptotic;
    let res = run_test(&d, &cfg).unwrap();
    assert_close("z_0.90", res.critical_value, 1.2815515655446004, 1e-12, 0.0);
    assert_eq!(res.reject, res.statistic > res.critical_value);
}
