mod common;

use common::random_dataset;
use smoothsig::bootstrap::PreparedTest;
use smoothsig::selfcheck::invariance_checks;
use smoothsig::{default_bandwidths, run_test, standardize, TestConfig, VarianceEstimator};

#[test]
fn invariance_suite_at_fifty() {
    let mut defined = 0;
    for seed in 0..6 {
        let checks = invariance_checks(seed, 50, default_bandwidths(50, 2.0).unwrap());
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        defined += checks
            .iter()
            .filter(|c| c.property.contains("T (var_tilde)") && !c.detail.starts_with("undefined"))
            .count();
    }
    assert!(defined >= 4, "only {defined} defined var_tilde comparisons");
}

#[test]
fn bootstrap_decision_ignores_observation_order() {
    let d = random_dataset(17, 60, 2, false);
    let mut perm: Vec<usize> = (0..60).rev().collect();
    perm.swap(3, 40);
    let mut cfg = TestConfig::new(default_bandwidths(60, 2.0).unwrap());
    cfg.critical = smoothsig::CriticalMethod::Asymptotic;
    let a = run_test(&d, &cfg).unwrap();
    let b = run_test(&d.permuted(&perm).unwrap(), &cfg).unwrap();
    assert!((a.statistic - b.statistic).abs() <= 1e-10 * a.statistic.abs().max(1.0));
}

#[test]
fn transposed_pair_matrices_are_a_no_op() {
    let d = standardize(&random_dataset(5, 30, 2, true)).unwrap();
    let mut cfg = TestConfig::new(default_bandwidths(30, 3.0).unwrap());
    cfg.variance = VarianceEstimator::VarTilde;
    let p = PreparedTest::from_scaled(d, &cfg).unwrap();
    let l = p.smoother.pairwise_l();
    let m = &p.weights.as_ref().unwrap().m;
    for i in 0..30 {
        for j in 0..30 {
            assert_eq!(l.get(i, j), l.get(j, i));
            assert_eq!(m.get(i, j), m.get(j, i));
        }
    }
}
