use std::io::{self, Write};

use serde::Serialize;
use smoothsig::bootstrap::Observed;
use smoothsig::{CriticalMethod, TestResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Flat record written by `test --json` and `test --csv`.
#[derive(Debug, Serialize)]
pub struct Record {
    pub schema_version: u32,
    pub statistic_kind: String,
    pub psi: String,
    pub variance_estimator: String,
    pub critical_method: String,
    pub n: usize,
    pub p_continuous: usize,
    pub q: usize,
    pub g: f64,
    pub h: f64,
    pub c: f64,
    pub alpha: f64,
    pub bootstrap_reps: Option<usize>,
    pub seed: u64,
    pub raw: f64,
    pub variance: Option<f64>,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub fallback_used: bool,
    pub isolated_observations: usize,
    pub degenerate_draws: usize,
}

impl Record {
    pub fn new(res: &TestResult, n: usize, p_continuous: usize, q: usize) -> Self {
        let cfg = &res.config;
        let (raw, variance) = match res.observed {
            Observed::Standardized(v) => (v.raw, Some(v.variance)),
            Observed::CramerVonMises { value } => (value, None),
        };
        let boot = cfg.critical == CriticalMethod::Bootstrap;
        Record {
            schema_version: SCHEMA_VERSION,
            statistic_kind: cfg.statistic.to_string(),
            psi: cfg.psi.to_string(),
            variance_estimator: match cfg.variance {
                smoothsig::VarianceEstimator::VarHat => "var_hat".into(),
                smoothsig::VarianceEstimator::VarTilde => "var_tilde".into(),
            },
            critical_method: if boot { "bootstrap".into() } else { "asymptotic".into() },
            n,
            p_continuous,
            q,
            g: cfg.bandwidths.g,
            h: cfg.bandwidths.h,
            c: cfg.bandwidths.c,
            alpha: cfg.alpha,
            bootstrap_reps: boot.then_some(cfg.bootstrap_reps),
            seed: cfg.seed,
            raw,
            variance,
            statistic: res.statistic,
            critical_value: res.critical_value,
            p_value: res.p_value,
            reject: res.reject,
            fallback_used: res.diagnostics.fallback_used,
            isolated_observations: res.diagnostics.isolated_observations,
            degenerate_draws: res.diagnostics.degenerate_draws,
        }
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.serialize(self)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        let stat = match self.statistic_kind.as_str() {
            "itilde" => "I~_n (diagonal terms removed)",
            "ihat" => "I^_n",
            "lv" => "LV (joint kernel)",
            _ => "Cramer-von Mises",
        };
        writeln!(out, "statistic       {stat}")?;
        writeln!(out, "observations    n = {}, continuous W = {}, X = {}", self.n, self.p_continuous, self.q)?;
        writeln!(out, "bandwidths      g = {:.6}, h = {:.6} (c = {})", self.g, self.h, self.c)?;
        writeln!(out, "raw value       {:.6e}", self.raw)?;
        if let Some(v) = self.variance {
            writeln!(out, "variance        {:.6e} ({})", v, self.variance_estimator)?;
            writeln!(out, "T_n             {:.6}", self.statistic)?;
        }
        match self.bootstrap_reps {
            Some(b) => writeln!(out, "critical value  {:.6} (wild bootstrap, B = {b}, seed {})", self.critical_value, self.seed)?,
            None => writeln!(out, "critical value  {:.6} (standard normal)", self.critical_value)?,
        }
        writeln!(out, "p-value         {:.4}", self.p_value)?;
        writeln!(
            out,
            "decision        {} H0 at alpha = {}",
            if self.reject { "reject" } else { "do not reject" },
            self.alpha
        )?;
        if self.isolated_observations > 0 {
            writeln!(out, "note            {} observations have no neighbour within g", self.isolated_observations)?;
        }
        if self.fallback_used {
            writeln!(out, "note            var_tilde was not positive; var_hat used instead")?;
        }
        if self.degenerate_draws > 0 {
            writeln!(out, "note            {} bootstrap draws had a degenerate variance", self.degenerate_draws)?;
        }
        Ok(())
    }
}
