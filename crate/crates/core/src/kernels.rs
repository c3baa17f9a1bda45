//! Smoothing kernels, the ψ weighting function and bandwidth rules.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::ColumnKind;
use crate::error::{Error, Result};

/// Half-width of the triangular density with unit second moment: `a² / 6 = 1`.
pub const TRIANGULAR_HALF_WIDTH: f64 = 2.449_489_742_783_178; // sqrt(6)

/// Kernel used for both the estimation smoother `L` and the test kernel `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelSpec {
    /// `0.75 (1 - ‖u‖²) 1{‖u‖ < 1}`
    #[default]
    Epanechnikov,
}

impl KernelSpec {
    /// Kernel value as a function of the squared norm of its argument.
    #[inline]
    pub fn eval_sq_norm(self, sq_norm: f64) -> f64 {
        match self {
            KernelSpec::Epanechnikov => {
                if sq_norm < 1.0 {
                    0.75 * (1.0 - sq_norm)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(self, u: &[f64]) -> f64 {
        self.eval_sq_norm(u.iter().map(|v| v * v).sum())
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("epanechnikov")
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epanechnikov" => Ok(KernelSpec::Epanechnikov),
            other => Err(Error::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

pub fn eval_kernel(spec: KernelSpec, u: &[f64]) -> f64 {
    spec.eval(u)
}

/// Weighting applied to differences of the covariates under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiSpec {
    /// Triangular density on `[-√6, √6]` applied to `‖x‖`.
    Triangular,
    /// Standard normal density applied to `‖x‖`.
    #[default]
    Normal,
    /// `1{x_i = x_j}` componentwise.
    Indicator,
}

impl PsiSpec {
    /// The univariate density at `t` (density families only).
    pub fn density(self, t: f64) -> f64 {
        match self {
            PsiSpec::Triangular => {
                let a = TRIANGULAR_HALF_WIDTH;
                ((1.0 - t.abs() / a) / a).max(0.0)
            }
            PsiSpec::Normal => (-0.5 * t * t).exp() / (2.0 * PI).sqrt(),
            PsiSpec::Indicator => {
                if t == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// ψ evaluated on the difference of two rows of the covariates under test.
    pub fn eval_pair(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            PsiSpec::Indicator => {
                if a.iter().zip(b).all(|(x, y)| x == y) {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                self.density(sq.sqrt())
            }
        }
    }
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PsiSpec::Triangular => "triangular",
            PsiSpec::Normal => "normal",
            PsiSpec::Indicator => "indicator",
        })
    }
}

impl FromStr for PsiSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "triangular" => Ok(PsiSpec::Triangular),
            "normal" => Ok(PsiSpec::Normal),
            "indicator" => Ok(PsiSpec::Indicator),
            other => Err(Error::InvalidParameter(format!("unknown psi `{other}`"))),
        }
    }
}

/// ψ on a difference vector. For the indicator family every component must be zero.
pub fn eval_psi(spec: PsiSpec, x_diff: &[f64]) -> f64 {
    match spec {
        PsiSpec::Indicator => {
            if x_diff.iter().all(|v| *v == 0.0) {
                1.0
            } else {
                0.0
            }
        }
        _ => spec.density(x_diff.iter().map(|v| v * v).sum::<f64>().sqrt()),
    }
}

/// `h^{-p_c} K((a_c - b_c)/h) ∏ 1{a_d = b_d}` for two covariate rows.
///
/// Continuous and discrete components are picked out by `kinds`.
#[inline]
pub fn eval_mixed_kernel(
    spec: KernelSpec,
    a: &[f64],
    b: &[f64],
    kinds: &[ColumnKind],
    bandwidth: f64,
) -> f64 {
    let mut sq = 0.0;
    let mut p_c = 0;
    for ((x, y), kind) in a.iter().zip(b).zip(kinds) {
        match kind {
            ColumnKind::Continuous => {
                let d = (x - y) / bandwidth;
                sq += d * d;
                p_c += 1;
            }
            ColumnKind::Discrete => {
                if x != y {
                    return 0.0;
                }
            }
        }
    }
    let k = spec.eval_sq_norm(sq);
    if k == 0.0 {
        0.0
    } else {
        k / bandwidth.powi(p_c as i32)
    }
}

/// Estimation bandwidth `g`, test bandwidth `h` and the factor `c` used for `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bandwidths {
    pub g: f64,
    pub h: f64,
    pub c: f64,
}

impl Bandwidths {
    pub fn new(g: f64, h: f64, c: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite() && h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bandwidths must be positive and finite (g = {g}, h = {h})"
            )));
        }
        Ok(Self { g, h, c })
    }
}

/// `g = n^{-1/6}`, `h = c n^{-2.1/6}`.
pub fn default_bandwidths(n: usize, c: f64) -> Result<Bandwidths> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("bandwidth rule needs n >= 2, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth factor must be positive, got {c}")));
    }
    let nf = n as f64;
    Bandwidths::new(nf.powf(-1.0 / 6.0), c * nf.powf(-2.1 / 6.0), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPA: KernelSpec = KernelSpec::Epanechnikov;

    #[test]
    fn epanechnikov_values() {
        assert_eq!(eval_kernel(EPA, &[0.0, 0.0]), 0.75);
        assert_eq!(eval_kernel(EPA, &[1.0]), 0.0);
        assert_eq!(eval_kernel(EPA, &[0.6, 0.8]), 0.0);
        assert!((eval_kernel(EPA, &[0.5]) - 0.5625).abs() < 1e-15);
        assert!((eval_kernel(EPA, &[0.3, 0.4]) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn mixed_kernel_cases() {
        let cc = [ColumnKind::Continuous, ColumnKind::Continuous];
        assert_eq!(eval_mixed_kernel(EPA, &[1.0, 2.0], &[1.0, 2.0], &cc, 1.0), 0.75);

        let cd = [ColumnKind::Continuous, ColumnKind::Discrete];
        assert_eq!(eval_mixed_kernel(EPA, &[0.0, 1.0], &[0.0, 2.0], &cd, 1.0), 0.0);
        assert_eq!(eval_mixed_kernel(EPA, &[0.0, 1.0], &[0.0, 1.0], &cd, 0.5), 1.5);
    }

    #[test]
    fn psi_at_zero() {
        assert!((eval_psi(PsiSpec::Normal, &[0.0, 0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((eval_psi(PsiSpec::Triangular, &[0.0]) - 0.408_248_290_463_863).abs() < 1e-14);
        assert_eq!(PsiSpec::Indicator.eval_pair(&[1.0, 0.0], &[1.0, 0.0]), 1.0);
        assert_eq!(PsiSpec::Indicator.eval_pair(&[1.0, 0.0], &[1.0, 1.0]), 0.0);
        assert_eq!(TRIANGULAR_HALF_WIDTH, 6f64.sqrt());
    }

    /// Composite Simpson rule, independent of the closed forms above.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
        let h = (b - a) / intervals as f64;
        let mut acc = f(a) + f(b);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn psi_densities_normalized_with_unit_second_moment() {
        for spec in [PsiSpec::Triangular, PsiSpec::Normal] {
            let lim = if spec == PsiSpec::Triangular { 6f64.sqrt() } else { 12.0 };
            // split at 0 so the triangular kink sits on a node
            let mass = simpson(|t| spec.density(t), -lim, 0.0, 20_000)
                + simpson(|t| spec.density(t), 0.0, lim, 20_000);
            let m2 = simpson(|t| t * t * spec.density(t), -lim, 0.0, 20_000)
                + simpson(|t| t * t * spec.density(t), 0.0, lim, 20_000);
            assert!((mass - 1.0).abs() < 1e-6, "{spec}: mass {mass}");
            assert!((m2 - 1.0).abs() < 1e-6, "{spec}: second moment {m2}");
        }
    }

    #[test]
    fn bandwidth_rule() {
        let b = default_bandwidths(100, 1.0).unwrap();
        assert!((b.g - 0.464_158_883_361_278).abs() < 1e-12);
        assert!((b.h - 0.199_526_231_496_888).abs() < 1e-12);
        let b2 = default_bandwidths(100, 2.0).unwrap();
        assert_eq!(b2.g, b.g);
        assert!((b2.h - 0.399_052_462_993_776).abs() < 1e-12);
        assert!(default_bandwidths(100, 0.0).is_err());
        assert!(default_bandwidths(1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn kernel_is_even(u in prop::collection::vec(-2.0f64..2.0, 1..5)) {
            let neg: Vec<f64> = u.iter().map(|v| -v).collect();
            prop_assert_eq!(eval_kernel(EPA, &u), eval_kernel(EPA, &neg));
            for psi in [PsiSpec::Triangular, PsiSpec::Normal, PsiSpec::Indicator] {
                prop_assert_eq!(eval_psi(psi, &u), eval_psi(psi, &neg));
            }
        }

        #[test]
        fn kernel_vanishes_outside_unit_ball(u in prop::collection::vec(-3.0f64..3.0, 1..5)) {
            let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let k = eval_kernel(EPA, &u);
            prop_assert!(k >= 0.0);
            if norm >= 1.0 {
                prop_assert_eq!(k, 0.0);
            }
        }

        #[test]
        fn mixed_kernel_reduces_to_plain(
            a in prop::collection::vec(-2.0f64..2.0, 3),
            b in prop::collection::vec(-2.0f64..2.0, 3),
            h in 0.1f64..3.0,
        ) {
            let kinds = [ColumnKind::Continuous; 3];
            let scaled: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - y) / h).collect();
            let expected = eval_kernel(EPA, &scaled) / h.powi(3);
            prop_assert_eq!(eval_mixed_kernel(EPA, &a, &b, &kinds, h), expected);
        }
    }
}
