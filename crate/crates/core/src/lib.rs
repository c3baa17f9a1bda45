//! Kernel-based significance testing for a subset of covariates in
//! nonparametric regression.
//!
//! The null hypothesis is `E[Y | W, X] = E[Y | W]`. The test smooths only
//! over `W`, weighting residual products by `ψ(X_i - X_j)` instead of a
//! kernel in `X`, so its rate depends on the dimension of `W` alone.
//!
//! The usual flow is [`data::standardize`] → [`smoother::compute_smoother`]
//! → a statistic from [`statistics`] → a critical value from [`bootstrap`];
//! [`bootstrap::run_test`] does all of it. [`simulation`] reproduces level
//! and power experiments.

pub mod bootstrap;
pub mod data;
pub mod error;
pub mod kernels;
pub mod oracle;
pub mod pairs;
pub mod selfcheck;
pub mod simulation;
pub mod smoother;
pub mod statistics;
pub mod sum;

pub use bootstrap::{run_test, CriticalMethod, IsolatedPolicy, MultiplierLaw, StatisticKind, TestConfig, TestResult};
pub use data::{load_dataset, standardize, ColumnKind, ColumnSpec, Covariates, Dataset, ScaledDataset, Schema};
pub use error::{Error, Result};
pub use kernels::{default_bandwidths, Bandwidths, KernelSpec, PsiSpec};
pub use smoother::{compute_smoother, SmootherOutput};
pub use statistics::{StatisticValue, VarianceEstimator};
