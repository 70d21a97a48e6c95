//! Timing and accuracy of the ratio methods against the shipped
//! extended-precision oracle table.
//!
//! The harness measures wall time on the calling thread and is meant to be
//! run alone; concurrent benchmarks distort each other.

use std::hint::black_box;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::specialfn::{ratio_unscaled_quotient, RatioKernel, RatioMethod, RatioParams};
use crate::{Error, Result};

const SHIPPED_ORACLE: &str = include_str!("../data/ratio_oracle.csv");

/// One oracle entry `M(θ−1,ω,x)/M(θ,ω,x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub theta: f64,
    pub omega: f64,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OracleTable {
    pub entries: Vec<OracleEntry>,
}

impl OracleTable {
    /// The table generated by `data/gen_oracle.py`.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_ORACLE.as_bytes()).expect("shipped oracle table is well formed")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(std::fs::File::open(path)?)
    }

    fn parse(r: impl std::io::Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<OracleEntry>, _>>()?;
        Ok(Self { entries })
    }

    pub fn lookup(&self, theta: f64, omega: f64, x: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.theta == theta && e.omega == omega && e.x == x)
            .map(|e| e.value)
    }
}

/// What is timed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenchMethod {
    Dispatcher,
    Kernel(RatioMethod),
    /// Unscaled numerator and denominator summed separately.
    NaiveQuotient,
}

impl BenchMethod {
    pub fn label(&self) -> String {
        match self {
            BenchMethod::Dispatcher => "dispatcher".into(),
            BenchMethod::Kernel(m) => m.name().into(),
            BenchMethod::NaiveQuotient => "naive quotient".into(),
        }
    }

    pub fn all() -> Vec<BenchMethod> {
        let mut v = vec![BenchMethod::Dispatcher];
        v.extend(RatioMethod::ALL.iter().map(|&m| BenchMethod::Kernel(m)));
        v.push(BenchMethod::NaiveQuotient);
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub reps: usize,
    pub tol: f64,
    pub methods: Vec<BenchMethod>,
    pub kernel: RatioKernel,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            reps: 10_000,
            tol: 1e-10,
            methods: BenchMethod::all(),
            kernel: RatioKernel::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub method: BenchMethod,
    pub theta: f64,
    pub omega: f64,
    pub x: f64,
    pub median_ns: f64,
    pub p90_ns: f64,
    /// relative error against the oracle; `None` when the oracle has no entry
    pub rel_err: Option<f64>,
    /// 1 when the method reported an error or a non-finite value
    pub failures: usize,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BenchReport {
    pub entries: Vec<BenchEntry>,
    /// per-call cost of an empty closure, already subtracted
    pub baseline_ns: f64,
}

impl BenchReport {
    /// CSV `method,theta,omega,x,median_ns,p90_ns,rel_err,failures`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["method", "theta", "omega", "x", "median_ns", "p90_ns", "rel_err", "failures"])?;
        for e in &self.entries {
            w.write_record([
                e.method.label(),
                e.theta.to_string(),
                e.omega.to_string(),
                e.x.to_string(),
                format!("{:.1}", e.median_ns),
                format!("{:.1}", e.p90_ns),
                e.rel_err.map(|r| format!("{r:e}")).unwrap_or_default(),
                e.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-call nanoseconds for `reps` calls split in batches; returns the
/// sorted per-batch means.
fn time_batches(reps: usize, mut f: impl FnMut()) -> Vec<f64> {
    let batches = reps.clamp(1, 20);
    let size = (reps / batches).max(1);
    for _ in 0..size.min(100) {
        f();
    }
    let mut out: Vec<f64> = (0..batches)
        .map(|_| {
            let t0 = Instant::now();
            for _ in 0..size {
                f();
            }
            t0.elapsed().as_nanos() as f64 / size as f64
        })
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    crate::montecarlo::quantile_sorted(sorted, p)
}

fn evaluate(method: BenchMethod, kernel: &RatioKernel, p: &RatioParams, tol: f64) -> Result<f64> {
    match method {
        BenchMethod::Dispatcher => Ok(kernel.ratio(p, tol)?.value),
        BenchMethod::Kernel(m) => Ok(kernel.evaluate(m, p, tol)?.value),
        BenchMethod::NaiveQuotient => {
            let v = ratio_unscaled_quotient(p, kernel.max_terms);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Range(format!("unscaled quotient gave {v}")))
            }
        }
    }
}

/// Times every configured method at every grid point and compares with the
/// oracle. Single-threaded.
pub fn run_bench(cfg: &BenchConfig, grid: &[RatioParams], oracle: &OracleTable) -> Result<BenchReport> {
    if cfg.reps == 0 {
        return Err(Error::domain("reps must be >= 1"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::domain(format!("tol must be > 0, got {}", cfg.tol)));
    }
    let base = time_batches(cfg.reps, || {
        black_box(());
    });
    let baseline_ns = percentile(&base, 0.5);
    let mut entries = Vec::new();
    for p in grid {
        let want = oracle.lookup(p.theta, p.omega, p.x);
        for &method in &cfg.methods {
            let result = evaluate(method, &cfg.kernel, p, cfg.tol);
            let times = time_batches(cfg.reps, || {
                let _ = black_box(evaluate(method, &cfg.kernel, black_box(p), cfg.tol));
            });
            let (failures, rel_err, mut note) = match (&result, want) {
                (Ok(v), Some(w)) => (0, Some(if w == 0.0 { v.abs() } else { ((v - w) / w).abs() }), None),
                (Ok(_), None) => (0, None, Some("no oracle entry; accuracy skipped".to_string())),
                (Err(e), _) => (1, None, Some(e.to_string())),
            };
            if want.is_none() && note.is_none() {
                note = Some("no oracle entry".into());
            }
            entries.push(BenchEntry {
                method,
                theta: p.theta,
                omega: p.omega,
                x: p.x,
                median_ns: (percentile(&times, 0.5) - baseline_ns).max(0.0),
                p90_ns: (percentile(&times, 0.9) - baseline_ns).max(0.0),
                rel_err,
                failures,
                note,
            });
        }
    }
    Ok(BenchReport { entries, baseline_ns })
}

/// Grid CSV with columns `theta,omega,x` (extra columns ignored).
pub fn load_grid(path: &Path) -> Result<Vec<RatioParams>> {
    #[derive(Deserialize)]
    struct G {
        theta: f64,
        omega: f64,
        x: f64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    rdr.deserialize::<G>()
        .map(|g| {
            let g = g?;
            RatioParams::new(g.theta, g.omega, g.x)
        })
        .collect()
}
