//! Wild bootstrap critical values and the end-to-end test procedure.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{standardize, Dataset, ScaledDataset};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidths, KernelSpec, PsiSpec};
use crate::pairs::DEFAULT_DENSE_LIMIT;
use crate::smoother::{compute_smoother_with_limit, SmootherOutput};
use crate::statistics::{
    standardize_statistic, DominanceIndex, Evaluator, StatisticValue, TestWeights, VarianceEstimator,
};

/// Share of degenerate bootstrap draws above which the bootstrap fails.
pub const MAX_DEGENERATE_DRAW_SHARE: f64 = 0.10;

/// Distribution of the wild bootstrap multipliers `η_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierLaw {
    /// `(1-√5)/2` with probability `(5+√5)/10`, otherwise `(1+√5)/2`.
    #[default]
    MammenTwoPoint,
}

impl MultiplierLaw {
    /// Support points and the probability of the first one.
    pub fn two_point(self) -> (f64, f64, f64) {
        match self {
            MultiplierLaw::MammenTwoPoint => {
                let s5 = 5f64.sqrt();
                ((1.0 - s5) / 2.0, (1.0 + s5) / 2.0, (5.0 + s5) / 10.0)
            }
        }
    }

    /// `E η^k`, evaluated from the two-point law.
    pub fn raw_moment(self, k: i32) -> f64 {
        let (a, b, p) = self.two_point();
        p * a.powi(k) + (1.0 - p) * b.powi(k)
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let (a, b, p) = self.two_point();
        if rng.random_bool(p) {
            a
        } else {
            b
        }
    }
}

pub fn draw_multipliers<R: Rng + ?Sized>(n: usize, law: MultiplierLaw, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| law.sample(rng)).collect()
}

/// `Y*_i = r̂_i + η_i (Y_i - r̂_i)`.
pub fn resample_response(sm: &SmootherOutput, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.len() != sm.n() {
        return Err(Error::InvalidParameter(format!(
            "{} multipliers for {} observations",
            eta.len(),
            sm.n()
        )));
    }
    sm.rhat
        .iter()
        .zip(&sm.y)
        .zip(eta)
        .enumerate()
        .map(|(index, ((r, y), e))| match r {
            Some(r) => Ok(r + e * (y - r)),
            None => Err(Error::IsolatedObservation { index }),
        })
        .collect()
}

/// As [`resample_response`], but an observation with `f̂_i = 0` keeps its
/// response. Such an observation has `L_nik = 0` for every `k`, so `Y_i`
/// enters none of the statistics and its bootstrap value is immaterial.
pub fn resample_response_keep_isolated(sm: &SmootherOutput, eta: &[f64]) -> Result<Vec<f64>> {
    if eta.len() != sm.n() {
        return Err(Error::InvalidParameter(format!(
            "{} multipliers for {} observations",
            eta.len(),
            sm.n()
        )));
    }
    Ok(sm
        .rhat
        .iter()
        .zip(&sm.y)
        .zip(eta)
        .map(|((r, y), e)| match r {
            Some(r) => r + e * (y - r),
            None => *y,
        })
        .collect())
}

/// What the bootstrap does with observations that have no neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolatedPolicy {
    /// Keep `Y*_i = Y_i`.
    #[default]
    Keep,
    /// Refuse to bootstrap.
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatisticKind {
    /// `Ĩ_n`, diagonal terms removed.
    #[default]
    Itilde,
    Ihat,
    /// Joint-kernel competitor smoothing over `(W, X)`.
    Lv,
    /// Cramér–von Mises competitor; bootstrap only.
    Dgm,
}

impl StatisticKind {
    pub fn min_n(self) -> usize {
        match self {
            StatisticKind::Ihat | StatisticKind::Dgm => 3,
            StatisticKind::Itilde | StatisticKind::Lv => 5,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatisticKind::Itilde => "itilde",
            StatisticKind::Ihat => "ihat",
            StatisticKind::Lv => "lv",
            StatisticKind::Dgm => "dgm",
        })
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "itilde" => Ok(StatisticKind::Itilde),
            "ihat" => Ok(StatisticKind::Ihat),
            "lv" => Ok(StatisticKind::Lv),
            "dgm" => Ok(StatisticKind::Dgm),
            other => Err(Error::InvalidParameter(format!("unknown statistic `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticalMethod {
    Asymptotic,
    #[default]
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub statistic: StatisticKind,
    pub psi: PsiSpec,
    pub kernel: KernelSpec,
    pub bandwidths: Bandwidths,
    pub variance: VarianceEstimator,
    pub critical: CriticalMethod,
    pub alpha: f64,
    pub bootstrap_reps: usize,
    pub seed: u64,
    pub multipliers: MultiplierLaw,
    #[serde(default)]
    pub isolated: IsolatedPolicy,
    /// Pair matrices are materialized up to this many observations.
    pub dense_limit: usize,
}

impl TestConfig {
    /// Defaults: `Ĩ_n`, normal ψ, `ω̂²`, bootstrap with `B = 199`, `α = 0.05`.
    pub fn new(bandwidths: Bandwidths) -> Self {
        Self {
            statistic: StatisticKind::Itilde,
            psi: PsiSpec::Normal,
            kernel: KernelSpec::Epanechnikov,
            bandwidths,
            variance: VarianceEstimator::VarHat,
            critical: CriticalMethod::Bootstrap,
            alpha: 0.05,
            bootstrap_reps: 199,
            seed: 0,
            multipliers: MultiplierLaw::MammenTwoPoint,
            isolated: IsolatedPolicy::Keep,
            dense_limit: DEFAULT_DENSE_LIMIT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.critical == CriticalMethod::Bootstrap && self.bootstrap_reps == 0 {
            return Err(Error::InvalidParameter("bootstrap needs at least one replication".into()));
        }
        if self.statistic == StatisticKind::Dgm && self.critical != CriticalMethod::Bootstrap {
            return Err(Error::InvalidParameter(
                "the DGM statistic has no pivotal limit; use bootstrap critical values".into(),
            ));
        }
        Bandwidths::new(self.bandwidths.g, self.bandwidths.h, self.bandwidths.c)?;
        Ok(())
    }
}

/// The observed statistic: standardized for the kernel tests, raw for DGM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Observed {
    Standardized(StatisticValue),
    CramerVonMises { value: f64 },
}

impl Observed {
    /// The value compared against the critical value, if defined.
    pub fn decision_value(&self) -> Option<f64> {
        match self {
            Observed::Standardized(s) => s.standardized,
            Observed::CramerVonMises { value } => Some(*value),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `ω̃²` was not positive and `ω̂²` was used instead.
    pub fallback_used: bool,
    /// Observations with `f̂_i = 0`.
    pub isolated_observations: usize,
    /// Bootstrap draws discarded because their variance estimate was not positive.
    pub degenerate_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub observed: Observed,
    pub statistic: f64,
    pub critical_value: f64,
    /// Asymptotic: `1 - Φ(T_n)`. Bootstrap: `(1 + #{T* ≥ T_n}) / (B + 1)`.
    pub p_value: f64,
    pub reject: bool,
    pub config: TestConfig,
    pub bootstrap_draws: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// Everything about a test that does not depend on the response: the scaled
/// data, the smoother's `L` matrix and the test weights or dominance index.
#[derive(Debug, Clone)]
pub struct PreparedTest {
    pub scaled: ScaledDataset,
    pub smoother: SmootherOutput,
    pub weights: Option<TestWeights>,
    pub order: Option<DominanceIndex>,
    pub config: TestConfig,
}

impl PreparedTest {
    pub fn new(d: &Dataset, config: &TestConfig) -> Result<Self> {
        config.validate()?;
        let scaled = standardize(d)?;
        Self::from_scaled(scaled, config)
    }

    pub fn from_scaled(scaled: ScaledDataset, config: &TestConfig) -> Result<Self> {
        config.validate()?;
        let n = scaled.n();
        let mut min = config.statistic.min_n();
        if config.variance == VarianceEstimator::VarTilde && config.statistic != StatisticKind::Dgm {
            min = min.max(7);
        }
        if n < min {
            return Err(Error::TooFewObservations {
                what: "this statistic",
                min,
                n,
            });
        }
        let bw = config.bandwidths;
        let smoother = compute_smoother_with_limit(&scaled, bw.g, config.kernel, config.dense_limit)?;
        let (weights, order) = match config.statistic {
            StatisticKind::Itilde | StatisticKind::Ihat => (
                Some(TestWeights::with_limit(&scaled, bw.h, config.kernel, config.psi, config.dense_limit)?),
                None,
            ),
            StatisticKind::Lv => (
                Some(TestWeights::lv_with_limit(&scaled, bw.h, config.kernel, config.dense_limit)?),
                None,
            ),
            StatisticKind::Dgm => (None, Some(DominanceIndex::new(&scaled))),
        };
        Ok(Self {
            scaled,
            smoother,
            weights,
            order,
            config: config.clone(),
        })
    }

    /// Evaluates the configured statistic for the smoother state `sm`
    /// (either the original fit or a bootstrap refit). The flag reports a
    /// fallback from `ω̃²` to `ω̂²`.
    pub fn evaluate(&self, sm: &SmootherOutput) -> (Observed, bool) {
        if let Some(order) = &self.order {
            return (
                Observed::CramerVonMises {
                    value: order.cramer_von_mises(&sm.uf),
                },
                false,
            );
        }
        let weights = self.weights.as_ref().expect("kernel statistic without weights");
        let ev = Evaluator::new(sm.pairwise_l(), weights);
        let raw = match self.config.statistic {
            StatisticKind::Ihat => ev.ihat(&sm.uf),
            _ => ev.itilde(&sm.y, &sm.uf),
        };
        let (omega2, fallback) = match self.config.variance {
            VarianceEstimator::VarHat => (ev.var_hat(&sm.uf), false),
            VarianceEstimator::VarTilde => {
                let v = ev.var_tilde(&sm.y, &sm.uf);
                if v > 0.0 {
                    (v, false)
                } else {
                    (ev.var_hat(&sm.uf), true)
                }
            }
        };
        let value = standardize_statistic(raw, omega2, sm.n(), weights.h, weights.rate_dim);
        (Observed::Standardized(value), fallback)
    }

    /// Statistic for a bootstrap response, reusing every cached matrix.
    pub fn evaluate_response(&self, y: Vec<f64>) -> Result<(Observed, bool)> {
        let sm = self.smoother.refit(y)?;
        Ok(self.evaluate(&sm))
    }

    /// Bootstrapped statistics for replications `0..B`, in replication order.
    /// `None` marks a draw with a degenerate variance estimate.
    pub fn bootstrap_draws(&self) -> Result<Vec<Option<f64>>> {
        if self.config.isolated == IsolatedPolicy::Error {
            if let Some(&index) = self.smoother.isolated().first() {
                return Err(Error::IsolatedObservation { index });
            }
        }
        let cfg = &self.config;
        (0..cfg.bootstrap_reps)
            .into_par_iter()
            .map(|b| {
                let mut rng = replication_rng(cfg.seed, b as u64);
                let eta = draw_multipliers(self.scaled.n(), cfg.multipliers, &mut rng);
                self.bootstrap_statistic(&eta)
            })
            .collect()
    }

    /// The bootstrapped statistic for one multiplier vector.
    pub fn bootstrap_statistic(&self, eta: &[f64]) -> Result<Option<f64>> {
        let y_star = match self.config.isolated {
            IsolatedPolicy::Keep => resample_response_keep_isolated(&self.smoother, eta)?,
            IsolatedPolicy::Error => resample_response(&self.smoother, eta)?,
        };
        let (obs, _) = self.evaluate_response(y_star)?;
        Ok(obs.decision_value())
    }
}

/// RNG stream for bootstrap replication `b` under `seed`.
pub fn replication_rng(seed: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(b);
    rng
}

/// Order statistic of rank `⌈(1-α)(B+1)⌉` (clamped to `1..=B`) of `sorted`.
pub fn bootstrap_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let b = sorted.len();
    assert!(b > 0, "empty bootstrap sample");
    let rank = ((1.0 - alpha) * (b + 1) as f64 - 1e-9).ceil() as usize;
    sorted[rank.clamp(1, b) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutcome {
    pub critical: f64,
    /// Non-degenerate draws in replication order.
    pub draws: Vec<f64>,
    pub degenerate: usize,
}

/// Runs the wild bootstrap for a prepared test and extracts the critical value.
pub fn bootstrap_critical_value(prepared: &PreparedTest) -> Result<BootstrapOutcome> {
    let cfg = &prepared.config;
    if cfg.critical != CriticalMethod::Bootstrap {
        return Err(Error::InvalidParameter("configuration does not ask for bootstrap".into()));
    }
    let raw = prepared.bootstrap_draws()?;
    let total = raw.len();
    let draws: Vec<f64> = raw.into_iter().flatten().collect();
    let degenerate = total - draws.len();
    if degenerate as f64 > MAX_DEGENERATE_DRAW_SHARE * total as f64 || draws.is_empty() {
        return Err(Error::Degenerate(format!(
            "{degenerate} of {total} bootstrap draws have a degenerate variance estimate"
        )));
    }
    let mut sorted = draws.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapOutcome {
        critical: bootstrap_quantile(&sorted, cfg.alpha),
        draws,
        degenerate,
    })
}

pub fn standard_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn run_test(d: &Dataset, cfg: &TestConfig) -> Result<TestResult> {
    let prepared = PreparedTest::new(d, cfg)?;
    run_prepared(&prepared)
}

pub fn run_prepared(prepared: &PreparedTest) -> Result<TestResult> {
    let cfg = &prepared.config;
    let (observed, fallback_used) = prepared.evaluate(&prepared.smoother);
    let statistic = observed.decision_value().ok_or_else(|| {
        Error::Degenerate("variance estimate is not positive (constant residuals or empty kernel support)".into())
    })?;
    let mut diagnostics = Diagnostics {
        fallback_used,
        isolated_observations: prepared.smoother.isolated().len(),
        degenerate_draws: 0,
    };
    let (critical_value, p_value, bootstrap_draws) = match cfg.critical {
        CriticalMethod::Asymptotic => {
            let z = standard_normal_quantile(1.0 - cfg.alpha);
            let p = 1.0 - Normal::standard().cdf(statistic);
            (z, p, None)
        }
        CriticalMethod::Bootstrap => {
            let outcome = bootstrap_critical_value(prepared)?;
            diagnostics.degenerate_draws = outcome.degenerate;
            let exceed = outcome.draws.iter().filter(|t| **t >= statistic).count();
            let p = (1 + exceed) as f64 / (outcome.draws.len() + 1) as f64;
            (outcome.critical, p, Some(outcome.draws))
        }
    };
    Ok(TestResult {
        observed,
        statistic,
        critical_value,
        p_value,
        reject: statistic > critical_value,
        config: cfg.clone(),
        bootstrap_draws,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mammen_probabilities_and_moments() {
        let law = MultiplierLaw::MammenTwoPoint;
        let (_, _, p) = law.two_point();
        let s5 = 5f64.sqrt();
        assert!((p + (5.0 - s5) / 10.0 - 1.0).abs() < 1e-15);
        assert!(law.raw_moment(1).abs() < 1e-15);
        assert!((law.raw_moment(2) - 1.0).abs() < 1e-15);
        assert!((law.raw_moment(3) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_ranks() {
        let sorted: Vec<f64> = (1..=199).map(f64::from).collect();
        assert_eq!(bootstrap_quantile(&sorted, 0.05), 190.0);
        assert_eq!(bootstrap_quantile(&sorted, 0.10), 180.0);
        assert_eq!(bootstrap_quantile(&[4.2], 0.05), 4.2);
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let q = bootstrap_quantile(&sorted, k as f64 / 100.0);
            assert!(q <= prev);
            prev = q;
        }
    }

    #[test]
    fn normal_quantile() {
        assert!((standard_normal_quantile(0.90) - 1.281_551_565_544_6).abs() < 1e-9);
        assert!((standard_normal_quantile(0.95) - 1.644_853_626_951_5).abs() < 1e-9);
    }

    #[test]
    fn replication_streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = draw_multipliers(50, MultiplierLaw::MammenTwoPoint, &mut replication_rng(7, 3));
        let b: Vec<f64> = draw_multipliers(50, MultiplierLaw::MammenTwoPoint, &mut replication_rng(7, 3));
        let c: Vec<f64> = draw_multipliers(50, MultiplierLaw::MammenTwoPoint, &mut replication_rng(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dgm_requires_bootstrap() {
        let mut cfg = TestConfig::new(Bandwidths::new(0.5, 0.5, 1.0).unwrap());
        cfg.statistic = StatisticKind::Dgm;
        cfg.critical = CriticalMethod::Asymptotic;
        assert!(cfg.validate().is_err());
        cfg.critical = CriticalMethod::Bootstrap;
        cfg.bootstrap_reps = 0;
        assert!(cfg.validate().is_err());
    }
}
