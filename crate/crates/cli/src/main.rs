use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mcev_core::backtest::{
    calibrate_cir, default_test_window, default_train_window, load_csv_with, run_backtest_with,
    CIRCalibration, CalibrationMethod, DayCount, RateSeries,
};
use mcev_core::bench::{load_grid, run_bench, BenchConfig, BenchMethod, OracleTable};
use mcev_core::model::{MCEVParams, ModelConfig, UtilityParams};
use mcev_core::montecarlo::{
    misspecification_study, run_strategy, simulate_cir, simulate_mcev, terminal_stats,
    write_paths_csv, write_rate_path_csv, Scheme, SimConfig, StrategySpec,
};
use mcev_core::policy::{cir_optimal_position_with, CIRParams, CirConfig, Policy, PolicyInput};
use mcev_core::specialfn::{RatioKernel, RatioMethod, RatioParams};

/// Bad flags or unreadable inputs; exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(name = "mcev", version, about = "Optimal investment under the modified CEV model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kummer ratio M(θ−1,ω,x)/M(θ,ω,x) as JSON.
    Ratio {
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1e-10, allow_hyphen_values = true)]
        tol: f64,
        /// force one method: small-x, large-x, cf, direct
        #[arg(long)]
        method: Option<String>,
    },
    /// Optimal position π* and value multiplier f.
    Policy(PointArgs),
    /// Value function J and multiplier f.
    Value(PointArgs),
    /// Simulate price paths and run a strategy on them.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "S0", default_value_t = 100.0, allow_hyphen_values = true)]
        s0: f64,
        #[arg(long = "X0", default_value_t = 100.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long = "T", default_value_t = 1.0, allow_hyphen_values = true)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
        scheme: SchemeArg,
        /// optimal, bond, asset or a constant fraction such as 0.5
        #[arg(long, default_value = "optimal")]
        strategy: String,
        /// first business day of `rates.csv`
        #[arg(long, default_value = "2011-01-03")]
        start_date: NaiveDate,
    },
    /// Same paths, correct versus misspecified trader.
    Misspec {
        #[arg(long = "true")]
        true_config: PathBuf,
        #[arg(long)]
        assumed: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "S0", default_value_t = 100.0, allow_hyphen_values = true)]
        s0: f64,
        #[arg(long = "X0", default_value_t = 100.0, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long = "T", default_value_t = 1.0, allow_hyphen_values = true)]
        horizon: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
        scheme: SchemeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a square-root process to a date,rate file.
    Calibrate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 252)]
        daycount: u32,
        #[arg(long, value_enum, default_value_t = MethodArg::Ols)]
        method: MethodArg,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Daily-rebalanced backtest of the square-root policy.
    Backtest {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        calib: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 252)]
        daycount: u32,
        /// horizon in years; defaults to the span of the window
        #[arg(long = "T", allow_hyphen_values = true)]
        horizon: Option<f64>,
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// date,S,X,pi,benchmark series
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Timing and accuracy of the ratio methods.
    Bench {
        /// theta,omega,x CSV; defaults to every point of the oracle table
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 1e-10, allow_hyphen_values = true)]
        tol: f64,
        /// theta,omega,x,value CSV; defaults to the shipped table
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long, default_value = "bench.csv")]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct PointArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "S", allow_hyphen_values = true)]
    s: f64,
    #[arg(long = "X", allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long = "T", allow_hyphen_values = true)]
    horizon: f64,
}

#[derive(clap::Args)]
struct WindowArgs {
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    /// use every observation in the file
    #[arg(long, conflicts_with_all = ["from", "to"])]
    all: bool,
}

impl WindowArgs {
    fn apply(&self, s: RateSeries, default: (NaiveDate, NaiveDate)) -> Result<RateSeries> {
        if self.all {
            return Ok(s);
        }
        let from = self.from.unwrap_or(default.0);
        let to = self.to.unwrap_or(default.1);
        let w = s.window(from, to);
        if w.is_empty() {
            return Err(usage(format!("no observations between {from} and {to}; pass --from/--to or --all")));
        }
        Ok(w)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    Milstein,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Euler => Scheme::Euler,
            SchemeArg::Milstein => Scheme::Milstein,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ols,
    Mle,
}

/// Either flat config document.
#[derive(Deserialize)]
#[serde(untagged)]
enum AnyConfig {
    Model(ModelConfig),
    Cir(CirConfig),
}

enum Loaded {
    Model(MCEVParams, UtilityParams),
    Cir(CIRParams, UtilityParams),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<Loaded> {
    let cfg: AnyConfig = read_json(path).map_err(|_| {
        usage(format!(
            "{}: expected {{a, beta, c, alpha, r, gamma}} or {{kappa, s_bar, a, gamma}}",
            path.display()
        ))
    })?;
    Ok(match cfg {
        AnyConfig::Model(m) => {
            let (m, u) = m.params()?;
            Loaded::Model(m, u)
        }
        AnyConfig::Cir(c) => {
            let (c, u) = c.params()?;
            Loaded::Cir(c, u)
        }
    })
}

fn kernel_from_env() -> Result<RatioKernel> {
    let mut k = RatioKernel::default();
    if let Ok(v) = std::env::var("MCEV_MAX_TERMS") {
        k.max_terms = v
            .parse()
            .ok()
            .filter(|&n: &usize| n > 0)
            .ok_or_else(|| usage(format!("MCEV_MAX_TERMS must be a positive integer, got '{v}'")))?;
    }
    Ok(k)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_strategy(s: &str) -> Result<StrategySpec> {
    Ok(match s {
        "optimal" => StrategySpec::OptimalPolicy,
        "bond" => StrategySpec::BondOnly,
        "asset" => StrategySpec::AssetOnly,
        other => StrategySpec::ConstantFraction(
            other
                .parse()
                .map_err(|_| usage(format!("unknown strategy '{other}'")))?,
        ),
    })
}

#[derive(Serialize)]
struct PointOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    f: f64,
}

fn point(args: &PointArgs, kernel: RatioKernel, want_pi: bool) -> Result<PointOutput> {
    let inp = PolicyInput::new(args.x, args.s, args.t, args.horizon)?;
    let (policy, cir) = match load_config(&args.config)? {
        Loaded::Model(m, u) => (Policy::new(m, u)?.with_kernel(kernel), None),
        Loaded::Cir(c, u) => (Policy::new(c.to_mcev(), u)?.with_kernel(kernel), Some(c)),
    };
    let f = policy.value_multiplier(inp.s, inp.t, inp.horizon)?;
    if want_pi {
        let pi = match cir {
            Some(c) => cir_optimal_position_with(&inp, &c, &policy.utility, &kernel)?,
            None => policy.optimal_position(&inp)?,
        };
        Ok(PointOutput { pi: Some(pi), value: None, f })
    } else {
        Ok(PointOutput { pi: None, value: Some(policy.value_function(&inp)?), f })
    }
}

#[derive(Serialize)]
struct SimulateOutput {
    strategy: StrategySpec,
    absorbed_fraction: f64,
    capped_paths: usize,
    stats: mcev_core::montecarlo::TerminalStats,
}

fn run(cli: Cli) -> Result<()> {
    let kernel = kernel_from_env()?;
    match cli.command {
        Command::Ratio { theta, omega, x, tol, method } => {
            let p = RatioParams::new(theta, omega, x)?;
            let ev = match method {
                None => kernel.ratio(&p, tol)?,
                Some(m) => {
                    let m: RatioMethod = m.parse().map_err(|e: mcev_core::Error| usage(e.to_string()))?;
                    kernel.evaluate(m, &p, tol)?
                }
            };
            emit(&ev, None)
        }
        Command::Policy(args) => emit(&point(&args, kernel, true)?, None),
        Command::Value(args) => emit(&point(&args, kernel, false)?, None),
        Command::Simulate { config, paths, steps, seed, out, s0, x0, horizon, scheme, strategy, start_date } => {
            let spec = parse_strategy(&strategy)?;
            let cfg = SimConfig::new(paths, steps, seed, scheme.into())?;
            let (set, m, u) = match load_config(&config)? {
                Loaded::Model(m, u) => (simulate_mcev(&m, s0, horizon, &cfg)?, m, u),
                Loaded::Cir(c, u) => (simulate_cir(&c, s0, horizon, &cfg)?, c.to_mcev(), u),
            };
            let wealth = run_strategy(&set, spec, &m, &u, x0, horizon)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            write_paths_csv(&out.join("paths.csv"), &set, &wealth)?;
            write_rate_path_csv(&out.join("rates.csv"), &set.values[0], start_date)?;
            let summary = SimulateOutput {
                strategy: spec,
                absorbed_fraction: set.absorbed_fraction(),
                capped_paths: wealth.iter().filter(|w| w.capped).count(),
                stats: terminal_stats(&wealth, &u)?,
            };
            emit(&summary, Some(&out.join("stats.json")))
        }
        Command::Misspec { true_config, assumed, paths, steps, seed, s0, x0, horizon, scheme, out } => {
            let (tm, tu) = read_json::<ModelConfig>(&true_config)?.params()?;
            let (am, au) = read_json::<ModelConfig>(&assumed)?.params()?;
            if tu != au {
                return Err(usage("both configs must share gamma"));
            }
            let cfg = SimConfig::new(paths, steps, seed, scheme.into())?;
            let res = misspecification_study(&tm, &am, &tu, s0, x0, horizon, &cfg)?;
            emit(&res, out.as_deref())
        }
        Command::Calibrate { data, daycount, method, window, out } => {
            let series = load_csv_with(&data, DayCount::from_days(daycount).map_err(|e| usage(e.to_string()))?)?;
            let series = window.apply(series, default_train_window())?;
            let method = match method {
                MethodArg::Ols => CalibrationMethod::OLSEuler,
                MethodArg::Mle => CalibrationMethod::MLE,
            };
            emit(&calibrate_cir(&series, method)?, out.as_deref())
        }
        Command::Backtest { data, calib, gamma, x0, daycount, horizon, window, out, series } => {
            let c: CIRCalibration = read_json(&calib)?;
            let u = UtilityParams::new(gamma)?;
            let prices = load_csv_with(&data, DayCount::from_days(daycount).map_err(|e| usage(e.to_string()))?)?;
            let prices = window.apply(prices, default_test_window())?;
            let horizon = horizon.unwrap_or_else(|| prices.span());
            let report = run_backtest_with(&prices, &c, &u, x0, horizon, &kernel)?;
            if let Some(p) = series {
                report.write_csv(&p, &prices)?;
            }
            emit(&report.summary(), out.as_deref())
        }
        Command::Bench { grid, reps, tol, oracle, out } => {
            let table = match oracle {
                Some(p) => OracleTable::from_path(&p)?,
                None => OracleTable::shipped(),
            };
            let points = match grid {
                Some(p) => load_grid(&p)?,
                None => table
                    .entries
                    .iter()
                    .map(|e| RatioParams::new(e.theta, e.omega, e.x))
                    .collect::<mcev_core::Result<_>>()?,
            };
            let cfg = BenchConfig { reps, tol, methods: BenchMethod::all(), kernel };
            let report = run_bench(&cfg, &points, &table)?;
            report.write_csv(&out)?;
            let failures: usize = report.entries.iter().map(|e| e.failures).sum();
            let worst = report
                .entries
                .iter()
                .filter(|e| e.method == BenchMethod::Dispatcher)
                .filter_map(|e| e.rel_err)
                .fold(0.0, f64::max);
            emit(
                &serde_json::json!({
                    "entries": report.entries.len(),
                    "failures": failures,
                    "dispatcher_max_rel_err": worst,
                    "baseline_ns": report.baseline_ns,
                    "report": out,
                }),
                None,
            )
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { 2 } else { 1 })
        }
    }
}
