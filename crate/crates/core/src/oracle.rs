//! Brute-force reference implementations.
//!
//! Every function here enumerates the index arrangements exactly as the
//! statistics are defined, evaluating kernels pair by pair. They share no
//! code with the matrix path in [`crate::statistics`] beyond the scalar
//! kernel functions, and are meant for small `n` (the six-index variance is
//! `O(n⁶)`). Used by the test suites and by the `selfcheck` command.

use crate::data::{ColumnKind, ScaledDataset};
use crate::kernels::{eval_kernel, eval_mixed_kernel, KernelSpec, PsiSpec};
use crate::statistics::DiagonalTerms;
use crate::sum::NeumaierSum;

/// How the test weight between two observations is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleWeight {
    /// `K_nij ψ_ij`
    Psi(PsiSpec),
    /// Joint kernel over `(W, X)` with a single bandwidth.
    Joint,
}

/// Kernel tables evaluated directly from the scaled data.
#[derive(Debug, Clone)]
pub struct BruteForce {
    pub n: usize,
    pub y: Vec<f64>,
    /// `L_nik`
    pub l: Vec<Vec<f64>>,
    /// test weight `M_ij`
    pub m: Vec<Vec<f64>>,
    pub h: f64,
    pub rate_dim: usize,
}

fn joint_kernel(d: &ScaledDataset, kernel: KernelSpec, h: f64, i: usize, j: usize) -> f64 {
    let data = d.dataset();
    let mut u = Vec::new();
    let w = data.w();
    for (c, kind) in w.kinds().iter().enumerate() {
        let (a, b) = (w.row(i)[c], w.row(j)[c]);
        match kind {
            ColumnKind::Continuous => u.push((a - b) / h),
            ColumnKind::Discrete => {
                if a != b {
                    return 0.0;
                }
            }
        }
    }
    for c in 0..data.q() {
        u.push((data.x().row(i)[c] - data.x().row(j)[c]) / h);
    }
    eval_kernel(kernel, &u) / h.powi(u.len() as i32)
}

impl BruteForce {
    pub fn new(d: &ScaledDataset, g: f64, h: f64, kernel: KernelSpec, weight: OracleWeight) -> Self {
        let data = d.dataset();
        let n = data.n();
        let w = data.w();
        let table = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(i, j) }).collect())
                .collect()
        };
        let l = table(&|i, k| eval_mixed_kernel(kernel, w.row(i), w.row(k), w.kinds(), g));
        let m = match weight {
            OracleWeight::Psi(psi) => table(&|i, j| {
                let x_diff: Vec<f64> = data
                    .x()
                    .row(i)
                    .iter()
                    .zip(data.x().row(j))
                    .map(|(a, b)| a - b)
                    .collect();
                eval_mixed_kernel(kernel, w.row(i), w.row(j), w.kinds(), h)
                    * crate::kernels::eval_psi(psi, &x_diff)
            }),
            OracleWeight::Joint => table(&|i, j| joint_kernel(d, kernel, h, i, j)),
        };
        let rate_dim = match weight {
            OracleWeight::Psi(_) => data.p_c(),
            OracleWeight::Joint => data.p_c() + data.q(),
        };
        Self {
            n,
            y: data.y().to_vec(),
            l,
            m,
            h,
            rate_dim,
        }
    }

    fn dy(&self, a: usize, b: usize) -> f64 {
        self.y[a] - self.y[b]
    }

    /// `(f̂_i, r̂_i, û_i f̂_i)` from the three leave-one-out sums.
    pub fn leave_one_out(&self) -> (Vec<f64>, Vec<Option<f64>>, Vec<f64>) {
        let n = self.n;
        let mut fhat = vec![0.0; n];
        let mut rhat = vec![None; n];
        let mut uf = vec![0.0; n];
        for i in 0..n {
            let mut mass = NeumaierSum::new();
            let mut weighted = NeumaierSum::new();
            let mut diff = NeumaierSum::new();
            for k in 0..n {
                if k == i {
                    continue;
                }
                mass += self.l[i][k];
                weighted += self.y[k] * self.l[i][k];
                diff += self.dy(i, k) * self.l[i][k];
            }
            fhat[i] = mass.value() / (n - 1) as f64;
            if mass.value() > 0.0 {
                rhat[i] = Some(weighted.value() / mass.value());
            }
            uf[i] = diff.value() / (n - 1) as f64;
        }
        (fhat, rhat, uf)
    }

    /// `Σ_{i≠j} Σ_{k≠i} Σ_{l≠j} (Y_i-Y_k)(Y_j-Y_l) L_ik L_jl M_ij`, unnormalized.
    pub fn ihat_sum(&self) -> f64 {
        let n = self.n;
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i {
                        continue;
                    }
                    for l in 0..n {
                        if l == j {
                            continue;
                        }
                        acc += self.dy(i, k) * self.dy(j, l) * self.l[i][k] * self.l[j][l] * self.m[i][j];
                    }
                }
            }
        }
        acc.value()
    }

    pub fn ihat(&self) -> f64 {
        let n = self.n as f64;
        self.ihat_sum() / (n * (n - 1.0) * (n - 1.0) * (n - 1.0))
    }

    /// The same sum restricted to four distinct indices, unnormalized.
    pub fn itilde_sum(&self) -> f64 {
        let n = self.n;
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    for l in 0..n {
                        if l == i || l == j || l == k {
                            continue;
                        }
                        acc += self.dy(i, k) * self.dy(j, l) * self.l[i][k] * self.l[j][l] * self.m[i][j];
                    }
                }
            }
        }
        acc.value()
    }

    pub fn itilde(&self) -> f64 {
        self.itilde_sum() / count(self.n, 4)
    }

    pub fn diagonal_terms(&self) -> DiagonalTerms {
        let n = self.n;
        let mut v1 = NeumaierSum::new();
        let mut v2 = NeumaierSum::new();
        let mut v3 = NeumaierSum::new();
        for i in 0..n {
            for j in 0..n {
                if j == i {
                    continue;
                }
                let mij = self.m[i][j];
                v3 += self.dy(i, j).powi(2) * self.l[i][j].powi(2) * mij;
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    v1 += self.dy(i, k) * self.dy(j, k) * self.l[i][k] * self.l[j][k] * mij;
                    v2 += self.dy(i, j) * self.dy(j, k) * self.l[i][j] * self.l[j][k] * mij;
                }
            }
        }
        DiagonalTerms {
            v1: v1.value() / count(n, 3),
            v2: v2.value() / count(n, 3),
            v3: v3.value() / count(n, 2),
        }
    }

    pub fn var_hat(&self) -> f64 {
        let (_, _, uf) = self.leave_one_out();
        let n = self.n;
        let mut acc = NeumaierSum::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += uf[i].powi(2) * uf[j].powi(2) * self.m[i][j].powi(2);
                }
            }
        }
        2.0 * self.h.powi(self.rate_dim as i32) * acc.value() / count(n, 2)
    }

    /// Six-distinct-index arrangement average.
    pub fn var_tilde(&self) -> f64 {
        let n = self.n;
        let mut acc = NeumaierSum::new();
        let mut idx = [0usize; 6];
        fn distinct(idx: &[usize]) -> bool {
            let last = idx[idx.len() - 1];
            idx[..idx.len() - 1].iter().all(|v| *v != last)
        }
        for i in 0..n {
            idx[0] = i;
            for j in 0..n {
                idx[1] = j;
                if !distinct(&idx[..2]) || self.m[i][j] == 0.0 {
                    continue;
                }
                let m2 = self.m[i][j].powi(2);
                for k in 0..n {
                    idx[2] = k;
                    if !distinct(&idx[..3]) {
                        continue;
                    }
                    for kp in 0..n {
                        idx[3] = kp;
                        if !distinct(&idx[..4]) {
                            continue;
                        }
                        let left = self.dy(i, k) * self.dy(i, kp) * self.l[i][k] * self.l[i][kp];
                        if left == 0.0 {
                            continue;
                        }
                        for l in 0..n {
                            idx[4] = l;
                            if !distinct(&idx[..5]) {
                                continue;
                            }
                            for lp in 0..n {
                                idx[5] = lp;
                                if !distinct(&idx[..6]) {
                                    continue;
                                }
                                acc += left
                                    * self.dy(j, l)
                                    * self.dy(j, lp)
                                    * self.l[j][l]
                                    * self.l[j][lp]
                                    * m2;
                            }
                        }
                    }
                }
            }
        }
        2.0 * self.h.powi(self.rate_dim as i32) * acc.value() / count(n, 6)
    }
}

fn count(n: usize, m: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..m {
        c *= (n - i) as f64;
    }
    c
}

/// Right-hand side of `n⁽⁴⁾Ĩ_n = n(n-1)³Î_n - n⁽³⁾V_1 - 2n⁽³⁾V_2 + n⁽²⁾V_3`.
/// The coefficient on `V_2` is a parameter so the identity can be checked
/// against deliberately wrong constants.
pub fn decomposition_rhs(n: usize, ihat: f64, diag: &DiagonalTerms, v2_coefficient: f64) -> f64 {
    let nf = n as f64;
    nf * (nf - 1.0).powi(3) * ihat - count(n, 3) * diag.v1 - v2_coefficient * count(n, 3) * diag.v2
        + count(n, 2) * diag.v3
}

/// Left-hand side `n⁽⁴⁾Ĩ_n`.
pub fn decomposition_lhs(n: usize, itilde: f64) -> f64 {
    count(n, 4) * itilde
}

/// Cramér–von Mises statistic by a plain double loop.
pub fn dgm(d: &ScaledDataset, uf: &[f64]) -> f64 {
    let data = d.dataset();
    let n = data.n();
    let mut total = NeumaierSum::new();
    for i in 0..n {
        let mut inner = NeumaierSum::new();
        for j in 0..n {
            let w_le = (0..data.p()).all(|c| data.w().row(j)[c] <= data.w().row(i)[c]);
            let x_le = (0..data.q()).all(|c| data.x().row(j)[c] <= data.x().row(i)[c]);
            if w_le && x_le {
                inner += uf[j];
            }
        }
        total += inner.value() * inner.value();
    }
    total.value()
}

/// Relative difference with an absolute floor: `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// `|a - b| <= rel * max(|a|, |b|)` or `|a - b| <= abs`.
pub fn within(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    let diff = (a - b).abs();
    diff <= abs || diff <= rel * a.abs().max(b.abs())
}
