//! Monte Carlo designs and the experiment runner.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{run_prepared, CriticalMethod, MultiplierLaw, PreparedTest, StatisticKind, TestConfig};
use crate::data::{standardize, ColumnKind, Covariates, Dataset};
use crate::error::{Error, Result};
use crate::kernels::{default_bandwidths, KernelSpec, PsiSpec};
use crate::statistics::{fisher_test, VarianceEstimator};

/// Standard deviation of the regression error.
pub const ERROR_SD: f64 = 2.0;
/// Success probability of the binary covariate in the discrete design.
pub const DISCRETE_X_P: f64 = 0.6;
/// Share of failed replications above which a cell is flagged invalid.
pub const MAX_FAILURE_SHARE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpFamily {
    Continuous,
    DiscreteX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Null,
    Quadratic,
    Linear,
    Sine,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Null => "null",
            Alternative::Quadratic => "quadratic",
            Alternative::Linear => "linear",
            Alternative::Sine => "sine",
        })
    }
}

impl FromStr for Alternative {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Alternative::Null),
            "quadratic" => Ok(Alternative::Quadratic),
            "linear" => Ok(Alternative::Linear),
            "sine" => Ok(Alternative::Sine),
            other => Err(Error::InvalidParameter(format!("unknown alternative {other:?}"))),
        }
    }
}

impl Alternative {
    /// Departure from the null as a function of the index `t`
    /// (`X'β` in the continuous design, `W'θ` in the discrete one).
    pub fn departure(self, t: f64) -> f64 {
        match self {
            Alternative::Null => 0.0,
            Alternative::Quadratic => (t - 1.0).powi(2) / SQRT_2,
            Alternative::Linear => t,
            Alternative::Sine => (2.0 * t).sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub family: DgpFamily,
    /// Number of tested covariates (continuous family only).
    pub q: usize,
    pub alternative: Alternative,
    pub delta: f64,
    pub n: usize,
}

impl DgpSpec {
    pub fn continuous(n: usize, q: usize, alternative: Alternative, delta: f64) -> Self {
        Self {
            family: DgpFamily::Continuous,
            q,
            alternative,
            delta,
            n,
        }
    }

    pub fn discrete(n: usize, alternative: Alternative, delta: f64) -> Self {
        Self {
            family: DgpFamily::DiscreteX,
            q: 1,
            alternative,
            delta,
            n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("delta must be finite".into()));
        }
        match self.family {
            DgpFamily::Continuous if self.q == 0 => {
                Err(Error::InvalidParameter("continuous design needs q >= 1".into()))
            }
            DgpFamily::DiscreteX if self.alternative == Alternative::Linear => Err(Error::Unsupported(
                "the discrete design has no linear alternative".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// `θ = (1, -1)'/√2`
fn w_index(w: [f64; 2]) -> f64 {
    (w[0] - w[1]) / SQRT_2
}

fn null_mean(t: f64) -> f64 {
    t * t * t - t
}

fn draw_w<R: Rng + ?Sized>(rng: &mut R) -> [f64; 2] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

fn w_block(w: &[[f64; 2]]) -> Result<Covariates> {
    let cols = [w.iter().map(|r| r[0]).collect(), w.iter().map(|r| r[1]).collect()];
    Covariates::from_columns("w", &cols, &[ColumnKind::Continuous; 2])
}

/// `Y = (W'θ)³ - W'θ + δ d(X'β) + ε`, `W ~ N(0, I₂)`, `X ~ N(0, I_q)`,
/// `ε ~ N(0, 4)`, `β = (1, …, 1)'/√q`.
///
/// Per observation the stream is consumed as W, X, ε, so null datasets do
/// not depend on the alternative tag.
pub fn gen_continuous<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    if spec.family != DgpFamily::Continuous {
        return Err(Error::InvalidParameter("not a continuous design".into()));
    }
    let (n, q) = (spec.n, spec.q);
    let scale = (q as f64).sqrt().recip();
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut x = vec![Vec::with_capacity(n); q];
    for _ in 0..n {
        let wi = draw_w(rng);
        let mut index = 0.0;
        for col in x.iter_mut() {
            let v: f64 = rng.sample(StandardNormal);
            index += v * scale;
            col.push(v);
        }
        let eps: f64 = rng.sample(StandardNormal);
        y.push(null_mean(w_index(wi)) + spec.delta * spec.alternative.departure(index) + ERROR_SD * eps);
        w.push(wi);
    }
    let x = Covariates::from_columns("x", &x, &vec![ColumnKind::Continuous; q])?;
    Dataset::new(y, w_block(&w)?, x)
}

/// `Y = (W'θ)³ - W'θ + δ d(W'θ) 1{X = 1} + ε` with `X ~ Bernoulli(0.6)`.
pub fn gen_discrete<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    if spec.family != DgpFamily::DiscreteX {
        return Err(Error::InvalidParameter("not a discrete design".into()));
    }
    let n = spec.n;
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let wi = draw_w(rng);
        let xi = rng.random_bool(DISCRETE_X_P);
        let eps: f64 = rng.sample(StandardNormal);
        let t = w_index(wi);
        let shift = if xi { spec.delta * spec.alternative.departure(t) } else { 0.0 };
        y.push(null_mean(t) + shift + ERROR_SD * eps);
        w.push(wi);
        x.push(if xi { 1.0 } else { 0.0 });
    }
    let x = Covariates::from_columns("x", &[x], &[ColumnKind::Discrete])?;
    Dataset::new(y, w_block(&w)?, x)
}

pub fn generate<R: Rng + ?Sized>(spec: &DgpSpec, rng: &mut R) -> Result<Dataset> {
    match spec.family {
        DgpFamily::Continuous => gen_continuous(spec, rng),
        DgpFamily::DiscreteX => gen_discrete(spec, rng),
    }
}

/// A test applied to every simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestProcedure {
    Kernel {
        statistic: StatisticKind,
        psi: PsiSpec,
        variance: VarianceEstimator,
        critical: CriticalMethod,
    },
    /// F test of the linear specification in `(W, X)` against `W` alone.
    Fisher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTemplate {
    pub name: String,
    pub procedure: TestProcedure,
}

impl TestTemplate {
    pub fn kernel(name: &str, statistic: StatisticKind, psi: PsiSpec, critical: CriticalMethod) -> Self {
        Self {
            name: name.into(),
            procedure: TestProcedure::Kernel {
                statistic,
                psi,
                variance: VarianceEstimator::VarHat,
                critical,
            },
        }
    }

    pub fn fisher() -> Self {
        Self {
            name: "fisher".into(),
            procedure: TestProcedure::Fisher,
        }
    }

    /// Looks up a named template, e.g. `lmp-boot`, `lmp-asym-triangular`,
    /// `lv-asym`, `lavergne-boot`, `dgm-boot`, `fisher`.
    pub fn named(name: &str) -> Result<Self> {
        if name == "fisher" {
            return Ok(Self::fisher());
        }
        let parts: Vec<&str> = name.split('-').collect();
        let (stat, psi) = match parts[0] {
            "lmp" => (StatisticKind::Itilde, PsiSpec::Normal),
            "ihat" => (StatisticKind::Ihat, PsiSpec::Normal),
            "lv" => (StatisticKind::Lv, PsiSpec::Normal),
            "lavergne" => (StatisticKind::Itilde, PsiSpec::Indicator),
            "dgm" => (StatisticKind::Dgm, PsiSpec::Normal),
            _ => return Err(Error::InvalidParameter(format!("unknown test {name:?}"))),
        };
        let critical = match parts.get(1) {
            Some(&"boot") => CriticalMethod::Bootstrap,
            Some(&"asym") => CriticalMethod::Asymptotic,
            _ => return Err(Error::InvalidParameter(format!("test {name:?} needs a -boot or -asym suffix"))),
        };
        let psi = match (parts.get(2), parts[0]) {
            (None, _) => psi,
            (Some(p), "lmp" | "ihat") => p.parse()?,
            (Some(_), _) => return Err(Error::InvalidParameter(format!("unknown test {name:?}"))),
        };
        if parts.len() > 3 || (stat == StatisticKind::Dgm && critical == CriticalMethod::Asymptotic) {
            return Err(Error::InvalidParameter(format!("unknown test {name:?}")));
        }
        Ok(Self::kernel(name, stat, psi, critical))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dgps: Vec<DgpSpec>,
    pub c_grid: Vec<f64>,
    pub tests: Vec<TestTemplate>,
    pub replications: usize,
    pub master_seed: u64,
    pub alpha: f64,
    pub bootstrap_reps: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.bootstrap_reps == 0 {
            return Err(Error::InvalidParameter("bootstrap replications must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.dgps.is_empty() || self.c_grid.is_empty() || self.tests.is_empty() {
            return Err(Error::InvalidParameter("empty experiment grid".into()));
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(format!("bandwidth factor must be positive, got {c}")));
        }
        for d in &self.dgps {
            d.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub test: String,
    pub n: usize,
    pub q: usize,
    pub c: f64,
    pub delta: f64,
    pub alternative: Alternative,
    pub alpha: f64,
    pub reps: usize,
    pub rejections: usize,
    pub failures: usize,
}

impl ResultRow {
    fn completed(&self) -> usize {
        self.reps - self.failures
    }

    /// Rejection share among replications that produced a decision.
    pub fn reject_rate(&self) -> f64 {
        match self.completed() {
            0 => f64::NAN,
            m => self.rejections as f64 / m as f64,
        }
    }

    pub fn mc_se(&self) -> f64 {
        let r = self.reject_rate();
        (r * (1.0 - r) / self.completed() as f64).sqrt()
    }

    pub fn invalid(&self) -> bool {
        self.failures as f64 > MAX_FAILURE_SHARE * self.reps as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

pub const CSV_HEADER: [&str; 11] = [
    "test",
    "n",
    "q",
    "c",
    "delta",
    "alternative",
    "alpha",
    "reps",
    "reject_rate",
    "mc_se",
    "failures",
];

impl ResultTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.test.clone(),
                r.n.to_string(),
                r.q.to_string(),
                r.c.to_string(),
                r.delta.to_string(),
                r.alternative.to_string(),
                r.alpha.to_string(),
                r.reps.to_string(),
                format!("{:.6}", r.reject_rate()),
                format!("{:.6}", r.mc_se()),
                r.failures.to_string(),
            ])?;
        }
        out.flush().map_err(|source| Error::Io {
            path: "<csv output>".into(),
            source,
        })?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the data stream for design cell `cell`.
pub fn cell_seed(master: u64, cell: usize) -> u64 {
    mix64(mix64(master) ^ cell as u64)
}

/// Data RNG for replication `r` of cell `cell`.
pub fn replication_data_rng(master: u64, cell: usize, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed(master, cell));
    rng.set_stream(r as u64);
    rng
}

/// Bootstrap seed for replication `r` of cell `cell`.
pub fn replication_test_seed(master: u64, cell: usize, r: usize) -> u64 {
    mix64(cell_seed(master, cell) ^ mix64(r as u64 ^ 0x5bd1_e995))
}

/// Progress report after one design cell has finished.
#[derive(Debug, Clone)]
pub struct CellProgress<'a> {
    pub index: usize,
    pub total: usize,
    pub dgp: &'a DgpSpec,
    pub rows: &'a [ResultRow],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Reject,
    Accept,
    Failed,
}

fn run_replication(cfg: &ExperimentConfig, cell: usize, dgp: &DgpSpec, r: usize) -> Vec<Outcome> {
    let mut rng = replication_data_rng(cfg.master_seed, cell, r);
    let seed = replication_test_seed(cfg.master_seed, cell, r);
    let per_cell = cfg.c_grid.len() * cfg.tests.len();
    let data = match generate(dgp, &mut rng).and_then(|d| standardize(&d)) {
        Ok(d) => d,
        Err(_) => return vec![Outcome::Failed; per_cell],
    };
    let decide = |res: Result<bool>| match res {
        Ok(true) => Outcome::Reject,
        Ok(false) => Outcome::Accept,
        Err(_) => Outcome::Failed,
    };
    let fisher = cfg
        .tests
        .iter()
        .any(|t| t.procedure == TestProcedure::Fisher)
        .then(|| decide(fisher_test(&data, cfg.alpha).map(|f| f.reject)));
    let mut out = Vec::with_capacity(per_cell);
    for &c in &cfg.c_grid {
        let bandwidths = match default_bandwidths(dgp.n, c) {
            Ok(b) => b,
            Err(_) => {
                out.extend(std::iter::repeat_n(Outcome::Failed, cfg.tests.len()));
                continue;
            }
        };
        // Tests that differ only in their critical values share one preparation.
        let mut prepared: Vec<(StatisticKind, PsiSpec, VarianceEstimator, Result<PreparedTest>)> = Vec::new();
        for t in &cfg.tests {
            let (statistic, psi, variance, critical) = match &t.procedure {
                TestProcedure::Fisher => {
                    out.push(fisher.expect("fisher outcome"));
                    continue;
                }
                TestProcedure::Kernel {
                    statistic,
                    psi,
                    variance,
                    critical,
                } => (*statistic, *psi, *variance, *critical),
            };
            let mut config = TestConfig::new(bandwidths);
            config.statistic = statistic;
            config.psi = psi;
            config.kernel = KernelSpec::Epanechnikov;
            config.variance = variance;
            config.critical = critical;
            config.alpha = cfg.alpha;
            config.bootstrap_reps = cfg.bootstrap_reps;
            config.seed = seed;
            config.multipliers = MultiplierLaw::MammenTwoPoint;
            let slot = prepared
                .iter()
                .position(|(s, p, v, _)| (*s, *p, *v) == (statistic, psi, variance));
            let slot = match slot {
                Some(k) => k,
                None => {
                    prepared.push((statistic, psi, variance, PreparedTest::from_scaled(data.clone(), &config)));
                    prepared.len() - 1
                }
            };
            let result = match &prepared[slot].3 {
                Ok(base) => {
                    let mut p = base.clone();
                    p.config = config;
                    run_prepared(&p).map(|res| res.reject)
                }
                Err(e) => Err(Error::InvalidData(e.to_string())),
            };
            out.push(decide(result));
        }
    }
    out
}

/// Runs every design cell, calling `progress` after each. Rows are ordered
/// by cell, then bandwidth factor, then test.
pub fn run_experiment<F>(cfg: &ExperimentConfig, mut progress: F) -> Result<ResultTable>
where
    F: FnMut(&CellProgress<'_>),
{
    cfg.validate()?;
    let mut table = ResultTable::default();
    for (cell, dgp) in cfg.dgps.iter().enumerate() {
        let outcomes: Vec<Vec<Outcome>> = (0..cfg.replications)
            .into_par_iter()
            .map(|r| run_replication(cfg, cell, dgp, r))
            .collect();
        let start = table.rows.len();
        let mut slot = 0;
        for &c in &cfg.c_grid {
            for t in &cfg.tests {
                let column = outcomes.iter().map(|o| o[slot]);
                let rejections = column.clone().filter(|o| *o == Outcome::Reject).count();
                let failures = column.filter(|o| *o == Outcome::Failed).count();
                table.rows.push(ResultRow {
                    test: t.name.clone(),
                    n: dgp.n,
                    q: dgp.q,
                    c,
                    delta: dgp.delta,
                    alternative: dgp.alternative,
                    alpha: cfg.alpha,
                    reps: cfg.replications,
                    rejections,
                    failures,
                });
                slot += 1;
            }
        }
        progress(&CellProgress {
            index: cell,
            total: cfg.dgps.len(),
            dgp,
            rows: &table.rows[start..],
        });
    }
    Ok(table)
}

/// Preset designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    LevelCont,
    PowerQuad,
    PowerN,
    PowerAlt,
    LevelDisc,
    PowerDisc,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::LevelCont,
        Figure::PowerQuad,
        Figure::PowerN,
        Figure::PowerAlt,
        Figure::LevelDisc,
        Figure::PowerDisc,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Figure::LevelCont => "level-cont",
            Figure::PowerQuad => "power-quad",
            Figure::PowerN => "power-n",
            Figure::PowerAlt => "power-alt",
            Figure::LevelDisc => "level-disc",
            Figure::PowerDisc => "power-disc",
        }
    }

    pub fn is_level(self) -> bool {
        matches!(self, Figure::LevelCont | Figure::LevelDisc)
    }

    /// Replications at desk scale and at full scale.
    pub fn default_replications(self, full_scale: bool) -> usize {
        match (self.is_level(), full_scale) {
            (true, false) => 500,
            (false, false) => 300,
            (true, true) => 5000,
            (false, true) => 2000,
        }
    }

    pub fn experiment(self, replications: usize, bootstrap_reps: usize, master_seed: u64) -> ExperimentConfig {
        let names = |list: &[&str]| -> Vec<TestTemplate> {
            list.iter()
                .map(|n| TestTemplate::named(n).expect("preset test name"))
                .collect()
        };
        let continuous_power = names(&["lmp-boot", "lv-boot", "dgm-boot", "fisher"]);
        let qs = [1, 3, 5, 10];
        let (dgps, c_grid, tests, alpha) = match self {
            Figure::LevelCont => (
                qs.iter()
                    .map(|&q| DgpSpec::continuous(100, q, Alternative::Null, 0.0))
                    .collect(),
                vec![1.0, 2.0, 4.0],
                names(&[
                    "lmp-boot",
                    "lmp-asym",
                    "lmp-boot-triangular",
                    "lmp-asym-triangular",
                    "lv-boot",
                    "lv-asym",
                    "dgm-boot",
                ]),
                0.10,
            ),
            Figure::PowerQuad => (
                [1, 5]
                    .iter()
                    .flat_map(|&q| {
                        QUAD_DELTAS
                            .iter()
                            .map(move |&d| DgpSpec::continuous(100, q, Alternative::Quadratic, d))
                    })
                    .collect(),
                vec![1.0, 2.0, 4.0],
                continuous_power,
                0.10,
            ),
            Figure::PowerN => (
                [50, 200]
                    .iter()
                    .flat_map(|&n| {
                        QUAD_DELTAS
                            .iter()
                            .map(move |&d| DgpSpec::continuous(n, 5, Alternative::Quadratic, d))
                    })
                    .collect(),
                vec![2.0],
                continuous_power,
                0.10,
            ),
            Figure::PowerAlt => (
                [(Alternative::Linear, LINEAR_DELTAS), (Alternative::Sine, SINE_DELTAS)]
                    .iter()
                    .flat_map(|&(alt, grid)| grid.iter().map(move |&d| DgpSpec::continuous(100, 5, alt, d)))
                    .collect(),
                vec![1.0, 2.0, 4.0],
                continuous_power,
                0.10,
            ),
            Figure::LevelDisc => (
                vec![DgpSpec::discrete(100, Alternative::Null, 0.0)],
                vec![0.5, 1.0, 2.0, 4.0],
                names(&["lmp-boot", "lmp-asym", "lavergne-boot", "lavergne-asym"]),
                0.10,
            ),
            Figure::PowerDisc => (
                [(Alternative::Quadratic, DISC_QUAD_DELTAS), (Alternative::Sine, DISC_SINE_DELTAS)]
                    .iter()
                    .flat_map(|&(alt, grid)| grid.iter().map(move |&d| DgpSpec::discrete(100, alt, d)))
                    .collect(),
                vec![1.0, 2.0, 4.0],
                names(&["lmp-boot", "lavergne-boot"]),
                0.10,
            ),
        };
        ExperimentConfig {
            dgps,
            c_grid,
            tests,
            replications,
            master_seed,
            alpha,
            bootstrap_reps,
        }
    }
}

pub const QUAD_DELTAS: &[f64] = &[0.0, 1.0, 2.0, 3.0, 4.0];
pub const LINEAR_DELTAS: &[f64] = &[0.0, 1.0, 2.0, 3.0, 4.0];
pub const SINE_DELTAS: &[f64] = &[0.0, 2.0, 4.0, 6.0, 8.0];
pub const DISC_QUAD_DELTAS: &[f64] = &[0.0, 1.0, 2.0, 3.0, 4.0];
pub const DISC_SINE_DELTAS: &[f64] = &[0.0, 1.0, 2.0, 3.0, 4.0];

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|fig| fig.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown figure {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn departures_vanish_at_roots() {
        assert_eq!(Alternative::Quadratic.departure(1.0), 0.0);
        assert_eq!(Alternative::Null.departure(3.0), 0.0);
        assert_eq!(Alternative::Linear.departure(-0.5), -0.5);
        assert!((Alternative::Sine.departure(0.25) - 0.5f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn null_datasets_ignore_alternative_tag() {
        let mut sets = Vec::new();
        for alt in [Alternative::Null, Alternative::Quadratic, Alternative::Linear, Alternative::Sine] {
            let mut rng = replication_data_rng(7, 0, 3);
            sets.push(gen_continuous(&DgpSpec::continuous(40, 3, alt, 0.0), &mut rng).unwrap());
        }
        for s in &sets[1..] {
            assert_eq!(s, &sets[0]);
        }
        let a = gen_discrete(&DgpSpec::discrete(40, Alternative::Quadratic, 0.0), &mut replication_data_rng(1, 2, 3));
        let b = gen_discrete(&DgpSpec::discrete(40, Alternative::Sine, 0.0), &mut replication_data_rng(1, 2, 3));
        assert_eq!(a.unwrap(), b.unwrap());
    }

    #[test]
    fn discrete_linear_is_rejected() {
        let spec = DgpSpec::discrete(10, Alternative::Linear, 1.0);
        assert!(gen_discrete(&spec, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn named_templates() {
        assert!(TestTemplate::named("lmp-boot-triangular").is_ok());
        assert!(TestTemplate::named("dgm-asym").is_err());
        assert!(TestTemplate::named("lv-boot-normal").is_err());
        assert!(TestTemplate::named("nd-boot").is_err());
        for fig in Figure::ALL {
            assert_eq!(fig.tag().parse::<Figure>().unwrap(), fig);
            fig.experiment(1, 1, 0).validate().unwrap();
        }
    }

    #[test]
    fn mc_standard_error() {
        let row = ResultRow {
            test: "t".into(),
            n: 10,
            q: 1,
            c: 2.0,
            delta: 0.0,
            alternative: Alternative::Null,
            alpha: 0.1,
            reps: 100,
            rejections: 20,
            failures: 0,
        };
        assert!((row.reject_rate() - 0.2).abs() < 1e-15);
        assert!((row.mc_se() - 0.04).abs() < 1e-15);
        assert!(!row.invalid());
    }
}
