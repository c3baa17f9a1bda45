#![allow(dead_code)]

use smoothsig::selfcheck::fixture;
use smoothsig::{standardize, Dataset, PsiSpec, ScaledDataset};

/// Two W columns (the second optionally discrete) and `q` continuous X columns.
pub fn random_dataset(seed: u64, n: usize, q: usize, discrete_w: bool) -> Dataset {
    fixture(seed, n, q, discrete_w, false)
}

pub fn random_scaled(seed: u64, n: usize, q: usize, discrete_w: bool) -> ScaledDataset {
    standardize(&random_dataset(seed, n, q, discrete_w)).unwrap()
}

/// Random scaled data suited to `psi`: 0/1 X columns for the indicator.
pub fn random_scaled_for(seed: u64, n: usize, q: usize, discrete_w: bool, psi: PsiSpec) -> ScaledDataset {
    standardize(&fixture(seed, n, q, discrete_w, psi == PsiSpec::Indicator)).unwrap()
}

pub fn assert_close(what: &str, got: f64, want: f64, rel: f64, abs: f64) {
    assert!(
        smoothsig::oracle::within(got, want, rel, abs),
        "{what}: got {got:e}, oracle {want:e}"
    );
}
