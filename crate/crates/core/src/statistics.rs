//! Test statistics, their variance estimators and the competitor statistics.
//!
//! Everything here is written in terms of two pair matrices: `L` (the
//! estimation kernel on W, owned by [`SmootherOutput`]) and a test weight
//! matrix `M`. For the main test `M_ij = K_nij ψ_ij`; for the LV test it is
//! the joint kernel on `(W, X)`. Only the response enters through vectors,
//! which is what lets the bootstrap reuse both matrices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::data::{ColumnKind, ScaledDataset};
use crate::error::{Error, Result};
use crate::kernels::{eval_mixed_kernel, KernelSpec, PsiSpec};
use crate::pairs::{map_rows, PairMatrix, DEFAULT_DENSE_LIMIT};
use crate::smoother::SmootherOutput;
use crate::sum::NeumaierSum;

/// Number of arrangements of `m` distinct elements among `n`.
pub fn arrangements(n: usize, m: usize) -> f64 {
    (0..m).map(|i| n.saturating_sub(i) as f64).product()
}

fn require_n(what: &'static str, n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::TooFewObservations { what, min, n })
    } else {
        Ok(())
    }
}

/// Test weights together with the bandwidth power used for standardization.
#[derive(Debug, Clone)]
pub struct TestWeights {
    pub m: Arc<PairMatrix>,
    pub h: f64,
    /// `d` in the rate `n h^{d/2}`: `p_c` for the main test, `p_c + q` for LV.
    pub rate_dim: usize,
}

impl TestWeights {
    /// `M_ij = K_nij ψ_ij` with the mixed kernel on W and ψ on standardized X.
    pub fn new(d: &ScaledDataset, h: f64, kernel: KernelSpec, psi: PsiSpec) -> Result<Self> {
        Self::with_limit(d, h, kernel, psi, DEFAULT_DENSE_LIMIT)
    }

    pub fn with_limit(
        d: &ScaledDataset,
        h: f64,
        kernel: KernelSpec,
        psi: PsiSpec,
        dense_limit: usize,
    ) -> Result<Self> {
        check_bandwidth(h)?;
        let data = Arc::new(d.dataset().clone());
        let p_c = data.p_c();
        let m = PairMatrix::build(data.n(), dense_limit, move |i, j| {
            let w = data.w();
            let k = eval_mixed_kernel(kernel, w.row(i), w.row(j), w.kinds(), h);
            if k == 0.0 {
                return 0.0;
            }
            k * psi.eval_pair(data.x().row(i), data.x().row(j))
        });
        Ok(Self {
            m: Arc::new(m),
            h,
            rate_dim: p_c,
        })
    }

    /// Joint kernel `h^{-(p_c+q)} K(‖(ΔW_c, ΔX)‖/h) 1{discrete W equal}` of
    /// the LV test. All X columns must be continuous.
    pub fn lv(d: &ScaledDataset, h: f64, kernel: KernelSpec) -> Result<Self> {
        Self::lv_with_limit(d, h, kernel, DEFAULT_DENSE_LIMIT)
    }

    pub fn lv_with_limit(d: &ScaledDataset, h: f64, kernel: KernelSpec, dense_limit: usize) -> Result<Self> {
        check_bandwidth(h)?;
        let data = Arc::new(d.dataset().clone());
        if let Some(j) = data.x().kinds().iter().position(|k| *k == ColumnKind::Discrete) {
            return Err(Error::DiscreteXForLv(j + 1));
        }
        let p_c = data.p_c();
        let q = data.q();
        let m = PairMatrix::build(data.n(), dense_limit, move |i, j| {
            let (w, x) = (data.w(), data.x());
            let mut sq = 0.0;
            for ((a, b), kind) in w.row(i).iter().zip(w.row(j)).zip(w.kinds()) {
                match kind {
                    ColumnKind::Continuous => sq += ((a - b) / h).powi(2),
                    ColumnKind::Discrete if a != b => return 0.0,
                    ColumnKind::Discrete => {}
                }
            }
            for (a, b) in x.row(i).iter().zip(x.row(j)) {
                sq += ((a - b) / h).powi(2);
            }
            let k = kernel.eval_sq_norm(sq);
            if k == 0.0 {
                0.0
            } else {
                k / h.powi((p_c + q) as i32)
            }
        });
        Ok(Self {
            m: Arc::new(m),
            h,
            rate_dim: p_c + q,
        })
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bandwidth h must be positive, got {h}")))
    }
}

/// The diagonal terms separating `Î_n` from `Ĩ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalTerms {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

/// A raw statistic, its variance estimate and the standardized value
/// `n h^{d/2} I_n / ω_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub raw: f64,
    pub variance: f64,
    /// `None` when the variance estimate is not positive.
    pub standardized: Option<f64>,
    pub n: usize,
    pub rate_dim: usize,
}

impl StatisticValue {
    pub fn is_degenerate(&self) -> bool {
        self.standardized.is_none()
    }
}

pub fn standardize_statistic(raw: f64, omega2: f64, n: usize, h: f64, rate_dim: usize) -> StatisticValue {
    let standardized = (omega2 > 0.0 && omega2.is_finite())
        .then(|| n as f64 * h.powf(rate_dim as f64 / 2.0) * raw / omega2.sqrt());
    StatisticValue {
        raw,
        variance: omega2,
        standardized,
        n,
        rate_dim,
    }
}

// ---------------------------------------------------------------------------
// Response-level kernels. `s` is the vector of leave-one-out sums
// S_i = Σ_k (Y_i - Y_k) L_ik, i.e. (n-1) û_i f̂_i.

/// `Σ_{i≠j} v_i v_j M_ij`
fn quadratic_form(m: &PairMatrix, v: &[f64]) -> f64 {
    let rows = map_rows(m.n(), |i| {
        if v[i] == 0.0 {
            return 0.0;
        }
        let row = m.row(i);
        let mut acc = NeumaierSum::new();
        for &j in m.nonzero(i, &row).iter() {
            acc += row[j as usize] * v[j as usize];
        }
        v[i] * acc.value()
    });
    rows.iter().sum::<NeumaierSum>().value()
}

/// `Σ_{i≠j} v_i² v_j² M_ij²`
fn squared_form(m: &PairMatrix, v: &[f64]) -> f64 {
    let rows = map_rows(m.n(), |i| {
        if v[i] == 0.0 {
            return 0.0;
        }
        let row = m.row(i);
        let mut acc = NeumaierSum::new();
        for &j in m.nonzero(i, &row).iter() {
            let t = row[j as usize] * v[j as usize];
            acc += t * t;
        }
        v[i] * v[i] * acc.value()
    });
    rows.iter().sum::<NeumaierSum>().value()
}

/// Row `i` of `a_ik = (Y_i - Y_k) L_ik`, together with its nonzero columns.
fn residual_row(l: &PairMatrix, y: &[f64], i: usize) -> (Vec<f64>, Vec<u32>) {
    let row = l.row(i);
    let nz = l.nonzero(i, &row).into_owned();
    let mut a = vec![0.0; y.len()];
    for &k in &nz {
        let k = k as usize;
        a[k] = (y[i] - y[k]) * row[k];
    }
    (a, nz)
}

/// Unnormalized diagonal sums `(n⁽³⁾V_1, n⁽³⁾V_2, n⁽²⁾V_3)`.
fn diagonal_sums(l: &PairMatrix, m: &PairMatrix, y: &[f64], s: &[f64]) -> (f64, f64, f64) {
    let n = y.len();
    // materialize a_ik once when L is materialized; otherwise rows are rebuilt on demand
    let cached: Option<Vec<(Vec<f64>, Vec<u32>)>> =
        l.is_dense().then(|| map_rows(n, |i| residual_row(l, y, i)));
    let rows = map_rows(n, |i| {
        let owned;
        let (a_i, nz_i) = match &cached {
            Some(c) => (&c[i].0, &c[i].1),
            None => {
                owned = residual_row(l, y, i);
                (&owned.0, &owned.1)
            }
        };
        let m_row = m.row(i);
        let l_row = l.row(i);
        let mut r1 = NeumaierSum::new();
        let mut r2 = NeumaierSum::new();
        let mut r3 = NeumaierSum::new();
        for &j in m.nonzero(i, &m_row).iter() {
            let j = j as usize;
            let mij = m_row[j];
            // V1: Σ_k a_ik a_jk over k ∉ {i, j}; a_ii = a_jj = 0 handles the exclusions
            let dot = match &cached {
                Some(c) => sparse_dot(a_i, nz_i, &c[j].0),
                None => sparse_dot(a_i, nz_i, &residual_row(l, y, j).0),
            };
            r1 += mij * dot;
            let lij = l_row[j];
            if lij != 0.0 {
                let b = (y[i] - y[j]) * lij * mij;
                r2 += b * s[j];
                r3 += (y[i] - y[j]) * lij * b;
            }
        }
        (r1.value(), r2.value(), r3.value())
    });
    let mut t1 = NeumaierSum::new();
    let mut t2 = NeumaierSum::new();
    let mut t3 = NeumaierSum::new();
    for (a, b, c) in rows {
        t1 += a;
        t2 += b;
        t3 += c;
    }
    // n⁽³⁾V_2 = Σ b_ij S_j + n⁽²⁾V_3 (the k = i term removed from S_j)
    let r3 = t3.value();
    (t1.value(), t2.value() + r3, r3)
}

#[inline]
fn sparse_dot(a: &[f64], nz: &[u32], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &k in nz {
        acc += a[k as usize] * b[k as usize];
    }
    acc
}

/// Response-dependent computations against fixed `L` and `M` matrices.
///
/// This is the path shared by the original sample and every bootstrap draw.
#[derive(Debug, Clone, Copy)]
pub struct Evaluator<'a> {
    pub l: &'a PairMatrix,
    pub weights: &'a TestWeights,
}

impl<'a> Evaluator<'a> {
    pub fn new(l: &'a PairMatrix, weights: &'a TestWeights) -> Self {
        Self { l, weights }
    }

    fn n(&self) -> usize {
        self.l.n()
    }

    pub fn ihat(&self, uf: &[f64]) -> f64 {
        quadratic_form(&self.weights.m, uf) / arrangements(self.n(), 2)
    }

    pub fn diagonal_terms(&self, y: &[f64], uf: &[f64]) -> DiagonalTerms {
        let n = self.n();
        let s = scaled(uf, (n - 1) as f64);
        let (r1, r2, r3) = diagonal_sums(self.l, &self.weights.m, y, &s);
        DiagonalTerms {
            v1: r1 / arrangements(n, 3),
            v2: r2 / arrangements(n, 3),
            v3: r3 / arrangements(n, 2),
        }
    }

    /// `Ĩ_n` from `n⁽⁴⁾Ĩ_n = n(n-1)³Î_n - n⁽³⁾V_1 - 2n⁽³⁾V_2 + n⁽²⁾V_3`,
    /// evaluated on the unnormalized sums.
    pub fn itilde(&self, y: &[f64], uf: &[f64]) -> f64 {
        let n = self.n();
        let s = scaled(uf, (n - 1) as f64);
        let full = quadratic_form(&self.weights.m, &s);
        let (r1, r2, r3) = diagonal_sums(self.l, &self.weights.m, y, &s);
        let mut acc = NeumaierSum::new();
        acc += full;
        acc += -r1;
        acc += -2.0 * r2;
        acc += r3;
        acc.value() / arrangements(n, 4)
    }

    pub fn var_hat(&self, uf: &[f64]) -> f64 {
        let n = self.n();
        2.0 * self.bandwidth_power() * squared_form(&self.weights.m, uf) / arrangements(n, 2)
    }

    /// Nested-distinctness approximation of `ω̃²_n`: for each pair `(i, j)`
    /// the inner indices are kept distinct from each other and from `i, j`,
    /// but the `(k, k')` and `(l, l')` pairs may overlap. `O(nnz(M))`, with
    /// an `O(1/n)` relative gap to [`Evaluator::var_tilde`] that is large at
    /// small `n`.
    pub fn var_tilde_nested(&self, y: &[f64], uf: &[f64]) -> f64 {
        let n = self.n();
        let s = scaled(uf, (n - 1) as f64);
        let q = self.squared_residual_sums(y);
        let m = &self.weights.m;
        let rows = map_rows(n, |i| {
            let m_row = m.row(i);
            let l_row = self.l.row(i);
            let mut acc = NeumaierSum::new();
            for &j in m.nonzero(i, &m_row).iter() {
                let j = j as usize;
                let a_ij = (y[i] - y[j]) * l_row[j];
                let a_ji = -a_ij;
                let left = (s[i] - a_ij).powi(2) - (q[i] - a_ij * a_ij);
                let right = (s[j] - a_ji).powi(2) - (q[j] - a_ji * a_ji);
                acc += left * right * m_row[j] * m_row[j];
            }
            acc.value()
        });
        let total = rows.iter().sum::<NeumaierSum>().value();
        let nf = n as f64;
        let count = arrangements(n, 2) * ((nf - 2.0) * (nf - 3.0)).powi(2);
        2.0 * self.bandwidth_power() * total / count
    }

    /// `ω̃²_n` over six distinct indices, by inclusion-exclusion on the
    /// possible coincidences between `{k, k'}` and `{l, l'}`. Cost is
    /// `O(nnz(M) n)`.
    pub fn var_tilde(&self, y: &[f64], uf: &[f64]) -> f64 {
        let n = self.n();
        let s = scaled(uf, (n - 1) as f64);
        let q = self.squared_residual_sums(y);
        let m = &self.weights.m;
        let rows = map_rows(n, |i| {
            let m_row = m.row(i);
            let l_row = self.l.row(i);
            let (a_i, _) = residual_row(self.l, y, i);
            let mut acc = NeumaierSum::new();
            for &j in m.nonzero(i, &m_row).iter() {
                let j = j as usize;
                let (a_j, _) = residual_row(self.l, y, j);
                let a_ij = (y[i] - y[j]) * l_row[j];
                let a_ji = -a_ij;
                let si = s[i] - a_ij;
                let sj = s[j] - a_ji;
                let total = (si * si - (q[i] - a_ij * a_ij)) * (sj * sj - (q[j] - a_ji * a_ji));
                let mut single = NeumaierSum::new();
                let mut cross = 0.0;
                let mut cross_sq = 0.0;
                for k in 0..n {
                    let p = a_i[k] * a_j[k];
                    if p == 0.0 || k == i || k == j {
                        continue;
                    }
                    single += p * (si - a_i[k]) * (sj - a_j[k]);
                    cross += p;
                    cross_sq += p * p;
                }
                let double = cross * cross - cross_sq;
                acc += (total - 4.0 * single.value() + 2.0 * double) * m_row[j] * m_row[j];
            }
            acc.value()
        });
        let total = rows.iter().sum::<NeumaierSum>().value();
        2.0 * self.bandwidth_power() * total / arrangements(n, 6)
    }

    /// Cramér–von Mises functional `Σ_i (Σ_j uf_j 1{W_j ≤ W_i, X_j ≤ X_i})²`.
    pub fn dgm(&self, order: &DominanceIndex, uf: &[f64]) -> f64 {
        order.cramer_von_mises(uf)
    }

    fn bandwidth_power(&self) -> f64 {
        self.weights.h.powi(self.weights.rate_dim as i32)
    }

    /// `Q_i = Σ_k (Y_i - Y_k)² L_ik²`
    fn squared_residual_sums(&self, y: &[f64]) -> Vec<f64> {
        map_rows(self.n(), |i| {
            let row = self.l.row(i);
            let mut acc = NeumaierSum::new();
            for &k in self.l.nonzero(i, &row).iter() {
                let a = (y[i] - y[k as usize]) * row[k as usize];
                acc += a * a;
            }
            acc.value()
        })
    }
}

fn scaled(v: &[f64], c: f64) -> Vec<f64> {
    v.iter().map(|x| x * c).collect()
}

/// For each `i`, the observations `j` with `W_j ≤ W_i` and `X_j ≤ X_i`
/// componentwise (including `j = i`).
#[derive(Debug, Clone)]
pub struct DominanceIndex {
    below: Vec<Vec<u32>>,
}

impl DominanceIndex {
    pub fn new(d: &ScaledDataset) -> Self {
        let data = d.dataset();
        let n = data.n();
        let le = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| x <= y);
        let below = map_rows(n, |i| {
            (0..n)
                .filter(|&j| le(data.w().row(j), data.w().row(i)) && le(data.x().row(j), data.x().row(i)))
                .map(|j| j as u32)
                .collect()
        });
        Self { below }
    }

    pub fn cramer_von_mises(&self, uf: &[f64]) -> f64 {
        self.below
            .iter()
            .map(|js| {
                let inner: NeumaierSum = js.iter().map(|&j| uf[j as usize]).sum();
                inner.value() * inner.value()
            })
            .sum::<NeumaierSum>()
            .value()
    }
}

// ---------------------------------------------------------------------------
// Entry points taking the smoother output and the scaled data directly.

pub fn stat_ihat(sm: &SmootherOutput, d: &ScaledDataset, h: f64, kernel: KernelSpec, psi: PsiSpec) -> Result<f64> {
    require_n("Î_n", d.n(), 3)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).ihat(&sm.uf))
}

pub fn diagonal_terms(
    sm: &SmootherOutput,
    d: &ScaledDataset,
    h: f64,
    kernel: KernelSpec,
    psi: PsiSpec,
) -> Result<DiagonalTerms> {
    require_n("diagonal terms", d.n(), 5)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).diagonal_terms(&sm.y, &sm.uf))
}

pub fn stat_itilde(sm: &SmootherOutput, d: &ScaledDataset, h: f64, kernel: KernelSpec, psi: PsiSpec) -> Result<f64> {
    require_n("Ĩ_n", d.n(), 5)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).itilde(&sm.y, &sm.uf))
}

pub fn var_hat(sm: &SmootherOutput, d: &ScaledDataset, h: f64, kernel: KernelSpec, psi: PsiSpec) -> Result<f64> {
    require_n("ω̂²_n", d.n(), 3)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).var_hat(&sm.uf))
}

pub fn var_tilde(sm: &SmootherOutput, d: &ScaledDataset, h: f64, kernel: KernelSpec, psi: PsiSpec) -> Result<f64> {
    require_n("ω̃²_n", d.n(), 7)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).var_tilde(&sm.y, &sm.uf))
}

pub fn var_tilde_nested(
    sm: &SmootherOutput,
    d: &ScaledDataset,
    h: f64,
    kernel: KernelSpec,
    psi: PsiSpec,
) -> Result<f64> {
    require_n("ω̃²_n", d.n(), 7)?;
    let w = TestWeights::new(d, h, kernel, psi)?;
    Ok(Evaluator::new(sm.pairwise_l(), &w).var_tilde_nested(&sm.y, &sm.uf))
}

/// Which variance estimator standardizes a kernel statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceEstimator {
    #[default]
    VarHat,
    VarTilde,
}

/// The LV statistic: `Ĩ_n` with the joint `(W, X)` kernel in place of
/// `K_nij ψ_ij`, standardized at rate `n h^{(p_c+q)/2}` with `ω̂²`.
pub fn lv_statistic(sm: &SmootherOutput, d: &ScaledDataset, h: f64, kernel: KernelSpec) -> Result<StatisticValue> {
    lv_statistic_with(sm, d, h, kernel, VarianceEstimator::VarHat)
}

pub fn lv_statistic_with(
    sm: &SmootherOutput,
    d: &ScaledDataset,
    h: f64,
    kernel: KernelSpec,
    variance: VarianceEstimator,
) -> Result<StatisticValue> {
    require_n("LV statistic", d.n(), 5)?;
    let w = TestWeights::lv(d, h, kernel)?;
    let ev = Evaluator::new(sm.pairwise_l(), &w);
    let raw = ev.itilde(&sm.y, &sm.uf);
    let omega2 = match variance {
        VarianceEstimator::VarHat => ev.var_hat(&sm.uf),
        VarianceEstimator::VarTilde => {
            require_n("ω̃²_n", d.n(), 7)?;
            ev.var_tilde(&sm.y, &sm.uf)
        }
    };
    Ok(standardize_statistic(raw, omega2, d.n(), h, w.rate_dim))
}

pub fn dgm_statistic(sm: &SmootherOutput, d: &ScaledDataset) -> Result<f64> {
    require_n("DGM statistic", d.n(), 3)?;
    Ok(DominanceIndex::new(d).cramer_von_mises(&sm.uf))
}

// ---------------------------------------------------------------------------
// Linear baseline.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub f: f64,
    pub df_num: usize,
    pub df_den: usize,
    pub critical: f64,
    pub reject: bool,
}

fn residual_sum_of_squares(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<f64> {
    let qr = design.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = scale * design.nrows() as f64 * f64::EPSILON * 10.0;
    if r.diagonal().iter().any(|v| v.abs() <= tol) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient)?;
    let resid = y - design * beta;
    Ok(resid.iter().map(|e| e * e).sum::<NeumaierSum>().value())
}

/// F test of the X coefficients in the OLS regression of Y on `[1, W, X]`.
pub fn fisher_test(d: &ScaledDataset, alpha: f64) -> Result<FisherResult> {
    let data = d.dataset();
    let (n, p, q) = (data.n(), data.p(), data.q());
    if q == 0 {
        return Err(Error::InvalidParameter("Fisher test needs at least one X column".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n <= 1 + p + q {
        return Err(Error::TooFewObservations {
            what: "Fisher test",
            min: p + q + 2,
            n,
        });
    }
    let design = |with_x: bool| {
        let cols = 1 + p + if with_x { q } else { 0 };
        DMatrix::from_fn(n, cols, |i, c| match c {
            0 => 1.0,
            c if c <= p => data.w().row(i)[c - 1],
            c => data.x().row(i)[c - 1 - p],
        })
    };
    let y = DVector::from_column_slice(data.y());
    let rss0 = residual_sum_of_squares(&design(false), &y)?;
    let rss1 = residual_sum_of_squares(&design(true), &y)?;
    let df_den = n - 1 - p - q;
    let mean = data.y().iter().sum::<f64>() / n as f64;
    let tss: f64 = data.y().iter().map(|v| (v - mean) * (v - mean)).sum();
    let negligible = 1e-12 * tss.max(f64::MIN_POSITIVE);
    let f = if rss1 <= negligible {
        // perfect fit of the unrestricted model
        if rss0 - rss1 <= negligible { 0.0 } else { f64::INFINITY }
    } else {
        ((rss0 - rss1) / q as f64).max(0.0) / (rss1 / df_den as f64)
    };
    let dist = FisherSnedecor::new(q as f64, df_den as f64)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let critical = dist.inverse_cdf(1.0 - alpha);
    Ok(FisherResult {
        f,
        df_num: q,
        df_den,
        critical,
        reject: f > critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Covariates, Dataset};
    use crate::smoother::compute_smoother;

    const EPA: KernelSpec = KernelSpec::Epanechnikov;

    fn dataset(y: Vec<f64>) -> ScaledDataset {
        let n = y.len();
        let w1: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 / 5.0).collect();
        let w2: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 / 3.0).collect();
        let x1: Vec<f64> = (0..n).map(|i| ((i * 5) % 9) as f64).collect();
        let w = Covariates::from_columns("w", &[w1, w2], &[ColumnKind::Continuous; 2]).unwrap();
        let x = Covariates::from_columns("x", &[x1], &[ColumnKind::Continuous]).unwrap();
        standardize(&Dataset::new(y, w, x).unwrap()).unwrap()
    }

    #[test]
    fn arrangement_counts() {
        assert_eq!(arrangements(8, 4), 1680.0);
        assert_eq!(arrangements(5, 0), 1.0);
        assert_eq!(arrangements(3, 4), 0.0);
    }

    #[test]
    fn constant_response_gives_zeros() {
        let d = dataset(vec![1.5; 12]);
        let sm = compute_smoother(&d, 1.5, EPA).unwrap();
        let psi = PsiSpec::Normal;
        assert_eq!(stat_ihat(&sm, &d, 1.5, EPA, psi).unwrap(), 0.0);
        assert_eq!(stat_itilde(&sm, &d, 1.5, EPA, psi).unwrap(), 0.0);
        let dt = diagonal_terms(&sm, &d, 1.5, EPA, psi).unwrap();
        assert_eq!((dt.v1, dt.v2, dt.v3), (0.0, 0.0, 0.0));
        assert_eq!(var_hat(&sm, &d, 1.5, EPA, psi).unwrap(), 0.0);
        assert_eq!(var_tilde(&sm, &d, 1.5, EPA, psi).unwrap(), 0.0);
        assert_eq!(lv_statistic(&sm, &d, 1.5, EPA).unwrap().raw, 0.0);
        assert_eq!(dgm_statistic(&sm, &d).unwrap(), 0.0);
    }

    #[test]
    fn tiny_test_bandwidth_gives_zeros() {
        let y: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        let d = dataset(y);
        let sm = compute_smoother(&d, 1.5, EPA).unwrap();
        let h = 1e-6;
        assert_eq!(stat_ihat(&sm, &d, h, EPA, PsiSpec::Normal).unwrap(), 0.0);
        let dt = diagonal_terms(&sm, &d, h, EPA, PsiSpec::Normal).unwrap();
        assert_eq!((dt.v1, dt.v2, dt.v3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn standardization_cases() {
        let s = standardize_statistic(0.0, 2.0, 100, 0.3, 2);
        assert_eq!(s.standardized, Some(0.0));
        assert!(standardize_statistic(1.0, 0.0, 100, 0.3, 2).is_degenerate());
        assert!(standardize_statistic(1.0, -1.0, 100, 0.3, 2).is_degenerate());
        let (n, h, p, omega) = (50usize, 0.4f64, 2usize, 1.7f64);
        let raw = omega / (n as f64 * h.powf(p as f64 / 2.0));
        let s = standardize_statistic(raw, omega * omega, n, h, p);
        assert!((s.standardized.unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn var_hat_single_nonzero_residual_is_zero() {
        let d = dataset(vec![0.0; 9]);
        let l = crate::smoother::estimation_weights(d.dataset().w(), 1.0, EPA, 100);
        let w = TestWeights::new(&d, 2.0, EPA, PsiSpec::Normal).unwrap();
        let mut uf = vec![0.0; 9];
        uf[3] = 2.5;
        assert_eq!(Evaluator::new(&l, &w).var_hat(&uf), 0.0);
    }

    #[test]
    fn lv_rejects_discrete_x() {
        let y: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let w = Covariates::from_columns("w", &[y.iter().map(|v| v.sin()).collect()], &[ColumnKind::Continuous]).unwrap();
        let x = Covariates::from_columns("x", &[vec![0., 1., 0., 1., 0., 1., 1., 0.]], &[ColumnKind::Discrete]).unwrap();
        let d = standardize(&Dataset::new(y, w, x).unwrap()).unwrap();
        let sm = compute_smoother(&d, 1.0, EPA).unwrap();
        let err = lv_statistic(&sm, &d, 1.0, EPA).unwrap_err();
        assert!(err.to_string().contains("LV requires continuous X"));
    }

    #[test]
    fn dgm_two_point_hand_evaluation() {
        // with n = 2 the smoother is not defined, so feed uf directly
        let w = Covariates::from_columns("w", &[vec![0.0, 1.0]], &[ColumnKind::Continuous]).unwrap();
        let x = Covariates::from_columns("x", &[vec![1.0, 0.0]], &[ColumnKind::Continuous]).unwrap();
        let d = standardize(&Dataset::new(vec![0.0, 0.0], w, x).unwrap()).unwrap();
        let idx = DominanceIndex::new(&d);
        // neither point dominates the other: Σ_i uf_i²
        assert_eq!(idx.cramer_von_mises(&[2.0, -3.0]), 13.0);

        let w = Covariates::from_columns("w", &[vec![0.0, 1.0]], &[ColumnKind::Continuous]).unwrap();
        let x = Covariates::from_columns("x", &[vec![0.0, 1.0]], &[ColumnKind::Continuous]).unwrap();
        let d = standardize(&Dataset::new(vec![0.0, 0.0], w, x).unwrap()).unwrap();
        // point 0 lies below point 1: 2² + (2 - 3)²
        assert_eq!(DominanceIndex::new(&d).cramer_von_mises(&[2.0, -3.0]), 5.0);
    }

    #[test]
    fn fisher_zero_numerator_and_perfect_fit() {
        let n = 12;
        let w1: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x1: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // y exactly linear in w: RSS0 = RSS1
        let y: Vec<f64> = w1.iter().map(|w| 1.0 + 2.0 * w).collect();
        let mk = |y: Vec<f64>| {
            let w = Covariates::from_columns("w", &[w1.clone()], &[ColumnKind::Continuous]).unwrap();
            let x = Covariates::from_columns("x", &[x1.clone()], &[ColumnKind::Continuous]).unwrap();
            standardize(&Dataset::new(y, w, x).unwrap()).unwrap()
        };
        let r = fisher_test(&mk(y), 0.05).unwrap();
        assert_eq!(r.f, 0.0);
        assert!(!r.reject);

        let y: Vec<f64> = w1.iter().zip(&x1).map(|(w, x)| 0.5 * w + 3.0 * x).collect();
        let r = fisher_test(&mk(y), 0.05).unwrap();
        assert_eq!(r.f, f64::INFINITY);
        assert!(r.reject);
    }

    #[test]
    fn fisher_rank_deficiency() {
        let n = 10;
        let w1: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let w = Covariates::from_columns("w", &[w1.clone()], &[ColumnKind::Continuous]).unwrap();
        let x = Covariates::from_columns("x", &[w1.iter().map(|v| 2.0 * v).collect()], &[ColumnKind::Continuous]).unwrap();
        let y: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let d = standardize(&Dataset::new(y, w, x).unwrap()).unwrap();
        assert!(matches!(fisher_test(&d, 0.05), Err(Error::RankDeficient)));
    }
}
