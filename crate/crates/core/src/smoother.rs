//! Leave-one-out kernel density and regression estimates.

use std::sync::Arc;

use crate::data::{Covariates, ScaledDataset};
use crate::error::{Error, Result};
use crate::kernels::{eval_mixed_kernel, KernelSpec};
use crate::pairs::{map_rows, PairMatrix, DEFAULT_DENSE_LIMIT};
use crate::sum::NeumaierSum;

/// Per-observation leave-one-out quantities.
///
/// `uf[i]` is `û_i f̂_i = (n-1)^{-1} Σ_{k≠i} (Y_i - Y_k) L_nik`, which stays
/// defined when `f̂_i = 0`; `rhat[i]` is `None` in that case.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    pub y: Vec<f64>,
    pub fhat: Vec<f64>,
    pub rhat: Vec<Option<f64>>,
    pub uf: Vec<f64>,
    pairwise_l: Arc<PairMatrix>,
}

impl SmootherOutput {
    /// `L_nik = g^{-p_c} L((W_i - W_k)/g) 1{discrete W equal}`.
    pub fn pairwise_l(&self) -> &PairMatrix {
        &self.pairwise_l
    }

    pub fn shared_l(&self) -> Arc<PairMatrix> {
        Arc::clone(&self.pairwise_l)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Observations with no neighbour inside the estimation kernel.
    pub fn isolated(&self) -> Vec<usize> {
        self.fhat
            .iter()
            .enumerate()
            .filter(|(_, f)| **f <= 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Leave-one-out sums `S_i = Σ_{k≠i} (Y_i - Y_k) L_nik = (n-1) uf_i`.
    pub fn residual_sums(&self) -> Vec<f64> {
        let scale = (self.n() - 1) as f64;
        self.uf.iter().map(|v| v * scale).collect()
    }

    /// Recomputes the estimates for a new response, reusing the cached `L`.
    pub fn refit(&self, y: Vec<f64>) -> Result<SmootherOutput> {
        if y.len() != self.n() {
            return Err(Error::InvalidData("response length mismatch".into()));
        }
        Ok(smooth_with(self.shared_l(), y))
    }
}

/// The `L_nik` matrix for the scaled W block at bandwidth `g`.
pub fn estimation_weights(w: &Covariates, g: f64, spec: KernelSpec, dense_limit: usize) -> PairMatrix {
    let w = Arc::new(w.clone());
    let n = w.values().len() / w.width();
    PairMatrix::build(n, dense_limit, move |i, j| {
        eval_mixed_kernel(spec, w.row(i), w.row(j), w.kinds(), g)
    })
}

pub fn compute_smoother(d: &ScaledDataset, g: f64, spec: KernelSpec) -> Result<SmootherOutput> {
    compute_smoother_with_limit(d, g, spec, DEFAULT_DENSE_LIMIT)
}

/// As [`compute_smoother`], materializing `L` only when `n <= dense_limit`.
pub fn compute_smoother_with_limit(
    d: &ScaledDataset,
    g: f64,
    spec: KernelSpec,
    dense_limit: usize,
) -> Result<SmootherOutput> {
    let n = d.n();
    if n < 3 {
        return Err(Error::TooFewObservations {
            what: "leave-one-out smoothing",
            min: 3,
            n,
        });
    }
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth g must be positive, got {g}")));
    }
    let l = estimation_weights(d.dataset().w(), g, spec, dense_limit);
    Ok(smooth_with(Arc::new(l), d.dataset().y().to_vec()))
}

fn smooth_with(l: Arc<PairMatrix>, y: Vec<f64>) -> SmootherOutput {
    let n = y.len();
    let denom = (n - 1) as f64;
    let rows = map_rows(n, |i| {
        let row = l.row(i);
        let mut mass = NeumaierSum::new();
        let mut weighted = NeumaierSum::new();
        let mut diff = NeumaierSum::new();
        for &k in l.nonzero(i, &row).iter() {
            let k = k as usize;
            let w = row[k];
            mass += w;
            weighted += y[k] * w;
            diff += (y[i] - y[k]) * w;
        }
        (mass.value(), weighted.value(), diff.value())
    });
    let mut fhat = Vec::with_capacity(n);
    let mut rhat = Vec::with_capacity(n);
    let mut uf = Vec::with_capacity(n);
    for (mass, weighted, diff) in rows {
        fhat.push(mass / denom);
        rhat.push((mass > 0.0).then(|| weighted / mass));
        uf.push(diff / denom);
    }
    SmootherOutput {
        y,
        fhat,
        rhat,
        uf,
        pairwise_l: l,
    }
}
