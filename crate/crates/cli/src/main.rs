mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use smoothsig::selfcheck::{run_selfcheck, SelfcheckOptions};
use smoothsig::simulation::{run_experiment, Alternative, DgpSpec, ExperimentConfig, Figure, TestTemplate};
use smoothsig::{
    default_bandwidths, load_dataset, run_test, Bandwidths, ColumnSpec, CriticalMethod, Error, IsolatedPolicy,
    PsiSpec, Schema, StatisticKind, TestConfig, VarianceEstimator,
};

use report::Record;

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_REJECTED: u8 = 3;

/// Nonparametric significance test for covariates in a regression.
///
/// Exit status: 0 success, 1 runtime error, 2 usage error, 3 for `test`
/// when the null hypothesis is rejected.
#[derive(Debug, Parser)]
#[command(name = "smoothsig", version, args_override_self = true)]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "SMOOTHSIG_THREADS")]
    threads: Option<usize>,

    /// Read `key = value` defaults for the flags from FILE
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test whether X adds explanatory power for y given W
    Test(TestArgs),
    /// Run a Monte Carlo design and write the rejection table as CSV
    Simulate(SimulateArgs),
    /// Check the fast statistics against enumeration and run invariance checks
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatArg {
    Itilde,
    Ihat,
    Lv,
    Dgm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PsiArg {
    Normal,
    Triangular,
    Indicator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VarianceArg {
    #[value(name = "var_hat", alias = "var-hat")]
    VarHat,
    #[value(name = "var_tilde", alias = "var-tilde")]
    VarTilde,
}

#[derive(Debug, Args)]
struct TestArgs {
    /// CSV file with a header row
    #[arg(long, value_name = "PATH")]
    data: PathBuf,
    /// Response column
    #[arg(long)]
    y: String,
    /// Conditioning columns, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    w: Vec<String>,
    /// Tested columns, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    /// Columns (from --w or --x) to treat as discrete
    #[arg(long, value_delimiter = ',')]
    disc: Vec<String>,
    #[arg(long, value_enum, default_value = "itilde")]
    stat: StatArg,
    #[arg(long, value_enum, default_value = "normal")]
    psi: PsiArg,
    /// Bandwidth factor in h = c n^(-2.1/6)
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Override the smoothing bandwidth g = n^(-1/6)
    #[arg(long)]
    g: Option<f64>,
    /// Override the test bandwidth h
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Bootstrap replications
    #[arg(long, default_value_t = 199, value_parser = clap::value_parser!(u64).range(1..))]
    boot: u64,
    /// Use standard normal critical values instead of the bootstrap
    #[arg(long)]
    asymptotic: bool,
    /// Bootstrap seed (default: drawn from the OS and reported)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "var_hat")]
    variance: VarianceArg,
    /// Fail instead of bootstrapping when an observation has no neighbour within g
    #[arg(long)]
    strict_support: bool,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyArg {
    Continuous,
    Discrete,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Preset design: level-cont, power-quad, power-n, power-alt, level-disc, power-disc
    #[arg(long)]
    figure: Option<String>,
    /// Replications per design cell (default: 500 for level, 300 for power designs)
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    reps: Option<u64>,
    #[arg(long, default_value_t = 199, value_parser = clap::value_parser!(u64).range(1..))]
    boot: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (default: standard output)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Default to 5000 (level) / 2000 (power) replications
    #[arg(long)]
    paper_scale: bool,
    #[arg(long)]
    alpha: Option<f64>,
    /// Explicit grid: design family
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    q: Vec<usize>,
    #[arg(long)]
    alternative: Option<String>,
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Bandwidth factors
    #[arg(long = "c", value_delimiter = ',')]
    c_grid: Vec<f64>,
    /// Test names such as lmp-boot, lmp-asym-triangular, lv-boot, lavergne-boot, dgm-boot, fisher
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Random datasets per sample size
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    datasets: u64,
    #[arg(long, default_value_t = 1_000_000)]
    multiplier_draws: usize,
    /// Coefficient on V_2 in the decomposition check (negative control)
    #[arg(long, default_value_t = 2.0, hide = true)]
    v2_coefficient: f64,
    /// Print passing checks too
    #[arg(long)]
    verbose: bool,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::rng().random();
        eprintln!("seed: {s} (from OS entropy; pass --seed {s} to reproduce)");
        s
    })
}

fn cmd_test(a: TestArgs) -> Result<u8, Failure> {
    if let Some(col) = a.x.iter().find(|c| a.w.contains(c)) {
        return Err(usage(format!("column `{col}` appears in both --w and --x")));
    }
    if a.w.contains(&a.y) || a.x.contains(&a.y) {
        return Err(usage(format!("response `{}` is also listed as a covariate", a.y)));
    }
    if let Some(col) = a.disc.iter().find(|c| !a.w.contains(c) && !a.x.contains(c)) {
        return Err(usage(format!("--disc names `{col}`, which is not in --w or --x")));
    }
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", a.alpha)));
    }
    if a.asymptotic && matches!(a.stat, StatArg::Dgm) {
        return Err(usage("--stat dgm has no asymptotic critical values; drop --asymptotic"));
    }
    let spec = |name: &String| {
        if a.disc.contains(name) {
            ColumnSpec::discrete(name.clone())
        } else {
            ColumnSpec::continuous(name.clone())
        }
    };
    let schema = Schema {
        y: a.y.clone(),
        w: a.w.iter().map(spec).collect(),
        x: a.x.iter().map(spec).collect(),
    };
    schema.validate().map_err(|e| usage(e.to_string()))?;
    let data = load_dataset(&a.data, &schema)?;

    let n = data.n();
    let defaults = default_bandwidths(n, a.c).map_err(|e| usage(e.to_string()))?;
    let bandwidths = Bandwidths::new(a.g.unwrap_or(defaults.g), a.h.unwrap_or(defaults.h), a.c)
        .map_err(|e| usage(e.to_string()))?;
    let mut cfg = TestConfig::new(bandwidths);
    cfg.statistic = match a.stat {
        StatArg::Itilde => StatisticKind::Itilde,
        StatArg::Ihat => StatisticKind::Ihat,
        StatArg::Lv => StatisticKind::Lv,
        StatArg::Dgm => StatisticKind::Dgm,
    };
    cfg.psi = match a.psi {
        PsiArg::Normal => PsiSpec::Normal,
        PsiArg::Triangular => PsiSpec::Triangular,
        PsiArg::Indicator => PsiSpec::Indicator,
    };
    cfg.variance = match a.variance {
        VarianceArg::VarHat => VarianceEstimator::VarHat,
        VarianceArg::VarTilde => VarianceEstimator::VarTilde,
    };
    cfg.alpha = a.alpha;
    cfg.critical = if a.asymptotic {
        CriticalMethod::Asymptotic
    } else {
        CriticalMethod::Bootstrap
    };
    cfg.bootstrap_reps = a.boot as usize;
    if !a.asymptotic {
        cfg.seed = resolve_seed(a.seed);
    } else {
        cfg.seed = a.seed.unwrap_or(0);
    }
    if a.strict_support {
        cfg.isolated = IsolatedPolicy::Error;
    }

    let result = run_test(&data, &cfg)?;
    let record = Record::new(&result, n, data.p_c(), data.q());
    let stdout = io::stdout();
    let out = stdout.lock();
    let written = if a.json {
        record.write_json(out).map_err(|e| e.to_string())
    } else if a.csv {
        record.write_csv(out).map_err(|e| e.to_string())
    } else {
        record.write_text(out).map_err(|e| e.to_string())
    };
    written.map_err(Failure::Runtime)?;
    Ok(if result.reject { EXIT_REJECTED } else { 0 })
}

fn explicit_grid(a: &SimulateArgs) -> Result<ExperimentConfig, Failure> {
    let family = a.family.unwrap_or(FamilyArg::Continuous);
    let alternative: Alternative = a
        .alternative
        .as_deref()
        .unwrap_or("null")
        .parse()
        .map_err(|e: Error| usage(e.to_string()))?;
    let ns = if a.n.is_empty() { vec![100] } else { a.n.clone() };
    let qs = if a.q.is_empty() { vec![1] } else { a.q.clone() };
    let deltas = if a.delta.is_empty() { vec![0.0] } else { a.delta.clone() };
    let mut dgps = Vec::new();
    for &n in &ns {
        for &delta in &deltas {
            match family {
                FamilyArg::Continuous => {
                    dgps.extend(qs.iter().map(|&q| DgpSpec::continuous(n, q, alternative, delta)))
                }
                FamilyArg::Discrete => dgps.push(DgpSpec::discrete(n, alternative, delta)),
            }
        }
    }
    let names = if a.tests.is_empty() {
        vec!["lmp-boot".to_string()]
    } else {
        a.tests.clone()
    };
    let tests = names
        .iter()
        .map(|t| TestTemplate::named(t))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| usage(e.to_string()))?;
    Ok(ExperimentConfig {
        dgps,
        c_grid: if a.c_grid.is_empty() { vec![2.0] } else { a.c_grid.clone() },
        tests,
        replications: 0,
        master_seed: 0,
        alpha: 0.10,
        bootstrap_reps: 0,
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, Failure> {
    let grid_flags = a.family.is_some()
        || !a.n.is_empty()
        || !a.q.is_empty()
        || a.alternative.is_some()
        || !a.delta.is_empty()
        || !a.c_grid.is_empty()
        || !a.tests.is_empty();
    let (mut cfg, level) = match &a.figure {
        Some(tag) => {
            if grid_flags {
                return Err(usage("--figure cannot be combined with explicit grid flags"));
            }
            let fig: Figure = tag.parse().map_err(|e: Error| usage(e.to_string()))?;
            (fig.experiment(0, 0, 0), fig.is_level())
        }
        None => {
            let cfg = explicit_grid(&a)?;
            let level = cfg.dgps.iter().all(|d| d.delta == 0.0);
            (cfg, level)
        }
    };
    cfg.replications = match (a.reps, level, a.paper_scale) {
        (Some(r), _, _) => r as usize,
        (None, true, false) => 500,
        (None, false, false) => 300,
        (None, true, true) => 5000,
        (None, false, true) => 2000,
    };
    cfg.bootstrap_reps = a.boot as usize;
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    cfg.master_seed = resolve_seed(a.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let started = Instant::now();
    let table = run_experiment(&cfg, |p| {
        let d = p.dgp;
        eprintln!(
            "[{}/{}] n={} q={} {} delta={} done ({:.1}s)",
            p.index + 1,
            p.total,
            d.n,
            d.q,
            d.alternative,
            d.delta,
            started.elapsed().as_secs_f64()
        );
        for row in p.rows.iter().filter(|r| r.invalid()) {
            eprintln!(
                "  warning: {} at c={} failed in {} of {} replications; cell flagged invalid",
                row.test, row.c, row.failures, row.reps
            );
        }
    })?;

    match &a.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            table.write_csv(&mut w)?;
            w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    eprintln!(
        "{} rows, {} replications per cell, total runtime {:.1}s",
        table.rows.len(),
        cfg.replications,
        started.elapsed().as_secs_f64()
    );
    Ok(0)
}

fn cmd_selfcheck(a: SelfcheckArgs) -> Result<u8, Failure> {
    let mut opts = SelfcheckOptions {
        datasets_per_size: a.datasets as usize,
        v2_coefficient: a.v2_coefficient,
        multiplier_draws: a.multiplier_draws,
        ..SelfcheckOptions::default()
    };
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let started = Instant::now();
    let checks = run_selfcheck(&opts);
    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    for c in &checks {
        if a.verbose || !c.passed {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!("{tag} {} [seed {}] {}", c.property, c.seed, c.detail);
        }
    }
    println!(
        "{} of {} checks passed in {:.1}s",
        checks.len() - failed.len(),
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(if failed.is_empty() { 0 } else { EXIT_RUNTIME })
}

fn main() -> ExitCode {
    let argv = match config::expand(std::env::args().collect(), &["test", "simulate", "selfcheck"]) {
        Ok(v) => v,
        Err(config::ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Selfcheck(a) => cmd_selfcheck(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
