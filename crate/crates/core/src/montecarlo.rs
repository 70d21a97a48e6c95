//! Path simulation for the M-CEV and square-root models, self-financing
//! wealth under a trading strategy, and terminal-wealth statistics.
//!
//! Every path draws from its own ChaCha8 stream selected by the path index,
//! so results do not depend on the rayon thread count.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{MCEVParams, UtilityParams};
use crate::policy::{CIRParams, Policy};
use crate::{Error, Result};

/// Upper bound on `n_paths · (n_steps + 1)` stored values.
pub const MAX_CELLS: usize = 200_000_000;

/// Cap on the leverage `|πS/X|`.
pub const LEVERAGE_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    #[default]
    Euler,
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        let cfg = Self { n_paths, n_steps, seed, scheme };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || self.n_steps == 0 {
            return Err(Error::domain("n_paths and n_steps must be >= 1"));
        }
        let cells = self.n_paths.checked_mul(self.n_steps + 1);
        if cells.is_none_or(|c| c > MAX_CELLS) {
            return Err(Error::domain(format!(
                "{} paths x {} steps exceeds the budget of {MAX_CELLS} stored values",
                self.n_paths, self.n_steps
            )));
        }
        Ok(())
    }

    fn rng(&self, path: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(path as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSet {
    pub times: Vec<f64>,
    /// `values[path][step]`
    pub values: Vec<Vec<f64>>,
    pub absorbed: Vec<bool>,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.values.len()
    }

    pub fn terminal(&self) -> Vec<f64> {
        self.values.iter().map(|p| *p.last().unwrap()).collect()
    }

    pub fn absorbed_fraction(&self) -> f64 {
        self.absorbed.iter().filter(|&&a| a).count() as f64 / self.absorbed.len() as f64
    }
}

fn check_start(s0: f64, horizon: f64) -> Result<()> {
    if !(s0 > 0.0) || !s0.is_finite() {
        return Err(Error::domain(format!("S0 must be finite and > 0, got {s0}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!("T must be finite and > 0, got {horizon}")));
    }
    Ok(())
}

fn time_grid(horizon: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

/// `dS/S = (α + c a² S^{2β}) dt + a S^β dW`, absorbed at the first
/// non-positive step.
pub fn simulate_mcev(m: &MCEVParams, s0: f64, horizon: f64, cfg: &SimConfig) -> Result<PathSet> {
    m.validate()?;
    cfg.validate()?;
    check_start(s0, horizon)?;
    let local_var = m.a * m.a * s0.powf(2.0 * m.beta);
    if (cfg.n_steps as f64) < 50.0 * horizon * local_var {
        log::warn!(
            "{} steps may be too coarse: local variance {local_var:.3e} over T = {horizon}",
            cfg.n_steps
        );
    }
    let dt = horizon / cfg.n_steps as f64;
    let sq = dt.sqrt();
    let scheme = cfg.scheme;
    let paths: Vec<(Vec<f64>, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.rng(i);
            let mut out = Vec::with_capacity(cfg.n_steps + 1);
            out.push(s0);
            let mut s = s0;
            let mut dead = false;
            for _ in 0..cfg.n_steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                if !dead {
                    let vol = m.diffusion(s);
                    let mut next = s + m.drift(s) * dt + vol * sq * z;
                    if scheme == Scheme::Milstein {
                        // ½ σ σ' (ΔW² − Δt), σ = a S^{β+1}
                        next += 0.5 * vol * m.a * (m.beta + 1.0) * s.powf(m.beta) * dt * (z * z - 1.0);
                    }
                    if next > 0.0 && next.is_finite() {
                        s = next;
                    } else {
                        s = 0.0;
                        dead = true;
                    }
                }
                out.push(s);
            }
            (out, dead)
        })
        .collect();
    let (values, absorbed) = paths.into_iter().unzip();
    Ok(PathSet {
        times: time_grid(horizon, cfg.n_steps),
        values,
        absorbed,
    })
}

/// Full-truncation Euler for `dS = κ(S̄ − S)dt + a√S dW`. The stored value is
/// `max(S, 0)`; the scheme state may dip below zero.
pub fn simulate_cir(c: &CIRParams, s0: f64, horizon: f64, cfg: &SimConfig) -> Result<PathSet> {
    cfg.validate()?;
    check_start(s0, horizon)?;
    if (cfg.n_steps as f64) < 50.0 * horizon * c.a * c.a / s0 {
        log::warn!("{} steps may be too coarse for the square-root diffusion", cfg.n_steps);
    }
    let dt = horizon / cfg.n_steps as f64;
    let sq = dt.sqrt();
    let values: Vec<Vec<f64>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.rng(i);
            let mut out = Vec::with_capacity(cfg.n_steps + 1);
            out.push(s0);
            let mut x = s0;
            for _ in 0..cfg.n_steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let xp = x.max(0.0);
                x += c.kappa * (c.s_bar - xp) * dt + c.a * xp.sqrt() * sq * z;
                out.push(x.max(0.0));
            }
            out
        })
        .collect();
    let n = values.len();
    Ok(PathSet {
        times: time_grid(horizon, cfg.n_steps),
        values,
        absorbed: vec![false; n],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    BondOnly,
    /// Buy `X0/S0` units at the start and hold.
    AssetOnly,
    OptimalPolicy,
    /// Rebalance to `π S = fraction · X` every step.
    ConstantFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthPath {
    pub times: Vec<f64>,
    pub wealth: Vec<f64>,
    /// units of the asset held over `[t_k, t_{k+1})`
    pub positions: Vec<f64>,
    /// wealth became non-positive or non-finite; the path is truncated there
    pub flagged: bool,
    /// the leverage cap bound at least once
    pub capped: bool,
}

impl WealthPath {
    pub fn terminal(&self) -> f64 {
        *self.wealth.last().unwrap()
    }
}

/// Self-financing wealth `X_{k+1} = X_k + r(X_k − π_k S_k)Δt + π_k(S_{k+1} − S_k)`
/// along each path. `m` supplies `r` and, for [`StrategySpec::OptimalPolicy`],
/// the model the trader believes in.
pub fn run_strategy(
    paths: &PathSet,
    spec: StrategySpec,
    m: &MCEVParams,
    u: &UtilityParams,
    x0: f64,
    horizon: f64,
) -> Result<Vec<WealthPath>> {
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::domain(format!("X0 must be finite and > 0, got {x0}")));
    }
    if let StrategySpec::ConstantFraction(f) = spec {
        if !f.is_finite() {
            return Err(Error::domain("constant fraction must be finite"));
        }
    }
    let n_steps = paths.times.len() - 1;
    let policy = match spec {
        StrategySpec::OptimalPolicy => Some(Policy::new(*m, *u)?),
        _ => None,
    };
    let prepared = match &policy {
        Some(p) => paths.times[..n_steps]
            .iter()
            .map(|&t| p.at_time(t, horizon).map(Some))
            .collect::<Result<Vec<_>>>()?,
        None => (0..n_steps).map(|_| None).collect(),
    };
    let r = m.r;
    paths
        .values
        .par_iter()
        .map(|s| {
            let mut wealth = Vec::with_capacity(n_steps + 1);
            let mut positions = Vec::with_capacity(n_steps);
            let (mut flagged, mut capped) = (false, false);
            let mut x = x0;
            wealth.push(x);
            let hold = x0 / s[0];
            for k in 0..n_steps {
                let dt = paths.times[k + 1] - paths.times[k];
                let sk = s[k];
                let mut pi = if sk <= 0.0 {
                    0.0
                } else {
                    match spec {
                        StrategySpec::BondOnly => 0.0,
                        StrategySpec::AssetOnly => hold,
                        StrategySpec::ConstantFraction(f) => f * x / sk,
                        StrategySpec::OptimalPolicy => prepared[k].as_ref().unwrap().position(x, sk)?,
                    }
                };
                if (pi * sk / x).abs() > LEVERAGE_CAP {
                    pi = LEVERAGE_CAP * x / sk * pi.signum();
                    capped = true;
                }
                positions.push(pi);
                x = x + r * (x - pi * sk) * dt + pi * (s[k + 1] - sk);
                wealth.push(x);
                if !(x > 0.0) || !x.is_finite() {
                    flagged = true;
                    break;
                }
            }
            Ok(WealthPath {
                times: paths.times[..wealth.len()].to_vec(),
                wealth,
                positions,
                flagged,
                capped,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    #[serde(rename = "1%")]
    pub q01: f64,
    #[serde(rename = "5%")]
    pub q05: f64,
    #[serde(rename = "50%")]
    pub q50: f64,
    #[serde(rename = "95%")]
    pub q95: f64,
    #[serde(rename = "99%")]
    pub q99: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalStats {
    pub mean: f64,
    pub std: f64,
    pub quantiles: Quantiles,
    pub certainty_equivalent: f64,
    pub mean_utility: f64,
    /// standard error of `mean_utility`
    pub utility_std_error: f64,
    pub n: usize,
    /// flagged paths left out of every statistic
    pub excluded: usize,
}

/// Linear-interpolation (type 7) quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Statistics of a sample of terminal wealths.
pub fn terminal_stats_from_values(values: &[f64], u: &UtilityParams) -> Result<TerminalStats> {
    if values.is_empty() {
        return Err(Error::domain("no terminal wealth values"));
    }
    let (mean, std) = mean_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let utils: Vec<f64> = values.iter().map(|&x| u.utility(x)).collect();
    let (mean_u, std_u) = mean_std(&utils);
    let all_equal = sorted[0] == sorted[sorted.len() - 1];
    Ok(TerminalStats {
        mean: if all_equal { sorted[0] } else { mean },
        std: if all_equal { 0.0 } else { std },
        quantiles: Quantiles {
            q01: quantile_sorted(&sorted, 0.01),
            q05: quantile_sorted(&sorted, 0.05),
            q50: quantile_sorted(&sorted, 0.50),
            q95: quantile_sorted(&sorted, 0.95),
            q99: quantile_sorted(&sorted, 0.99),
        },
        certainty_equivalent: if all_equal { sorted[0] } else { u.inverse_utility(mean_u) },
        mean_utility: mean_u,
        utility_std_error: std_u / (values.len() as f64).sqrt(),
        n: values.len(),
        excluded: 0,
    })
}

/// Statistics over unflagged paths; the flagged count is reported.
pub fn terminal_stats(wealths: &[WealthPath], u: &UtilityParams) -> Result<TerminalStats> {
    let values: Vec<f64> = wealths.iter().filter(|w| !w.flagged).map(WealthPath::terminal).collect();
    let mut st = terminal_stats_from_values(&values, u)?;
    st.excluded = wealths.len() - values.len();
    Ok(st)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisspecificationResult {
    /// trader using the assumed parameters
    pub misspecified: TerminalStats,
    /// trader using the true parameters on the same paths
    pub correct: TerminalStats,
    /// `correct.mean_utility − misspecified.mean_utility`
    pub utility_loss: f64,
    /// standard error of the per-path utility difference
    pub utility_loss_std_error: f64,
}

/// Paths from `true_m`; the misspecified trader uses `assumed_m`, the other
/// trader `true_m`, on common random numbers.
#[allow(clippy::too_many_arguments)]
pub fn misspecification_study(
    true_m: &MCEVParams,
    assumed_m: &MCEVParams,
    u: &UtilityParams,
    s0: f64,
    x0: f64,
    horizon: f64,
    cfg: &SimConfig,
) -> Result<MisspecificationResult> {
    let paths = simulate_mcev(true_m, s0, horizon, cfg)?;
    let correct = run_strategy(&paths, StrategySpec::OptimalPolicy, true_m, u, x0, horizon)?;
    let wrong = if assumed_m == true_m {
        correct.clone()
    } else {
        // the bond still pays the true rate
        let believed = MCEVParams { r: true_m.r, ..*assumed_m };
        run_strategy(&paths, StrategySpec::OptimalPolicy, &believed, u, x0, horizon)?
    };
    let diffs: Vec<f64> = correct
        .iter()
        .zip(&wrong)
        .filter(|(a, b)| !a.flagged && !b.flagged)
        .map(|(a, b)| u.utility(a.terminal()) - u.utility(b.terminal()))
        .collect();
    if diffs.is_empty() {
        return Err(Error::domain("every path was flagged"));
    }
    let (loss, sd) = mean_std(&diffs);
    Ok(MisspecificationResult {
        misspecified: terminal_stats(&wrong, u)?,
        correct: terminal_stats(&correct, u)?,
        utility_loss: loss,
        utility_loss_std_error: sd / (diffs.len() as f64).sqrt(),
    })
}

/// CSV with columns `path_id,t,S,X,pi`; `pi` is empty on the last row of a path.
pub fn write_paths_csv(path: &Path, paths: &PathSet, wealth: &[WealthPath]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["path_id", "t", "S", "X", "pi"])?;
    for (i, (s, x)) in paths.values.iter().zip(wealth).enumerate() {
        for k in 0..x.wealth.len() {
            let pi = x.positions.get(k).map(|p| p.to_string()).unwrap_or_default();
            w.write_record([
                i.to_string(),
                paths.times[k].to_string(),
                s[k].to_string(),
                x.wealth[k].to_string(),
                pi,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `date,rate` for one simulated path, with consecutive business days
/// starting at `start` (weekends skipped).
pub fn write_rate_path_csv(path: &Path, values: &[f64], start: chrono::NaiveDate) -> Result<()> {
    use chrono::Datelike;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "date,rate")?;
    let mut d = start;
    for v in values {
        while matches!(d.weekday(), chrono::Weekday::Sat | chrono::Weekday::Sun) {
            d = d.succ_opt().unwrap();
        }
        writeln!(f, "{},{}", d.format("%Y-%m-%d"), v)?;
        d = d.succ_opt().unwrap();
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn section_model() -> MCEVParams {
        MCEVParams::new(0.4, -0.4, 0.8, 0.045, 0.04).unwrap()
    }

    #[test]
    fn config_budget() {
        assert!(SimConfig::new(0, 10, 1, Scheme::Euler).is_err());
        assert!(SimConfig::new(10, 0, 1, Scheme::Euler).is_err());
        assert!(SimConfig::new(MAX_CELLS, 10, 1, Scheme::Euler).is_err());
        assert!(SimConfig::new(1000, 252, 1, Scheme::Milstein).is_ok());
    }

    #[test]
    fn vanishing_volatility_follows_drift_ode() {
        let m = MCEVParams::new(1e-8, -0.4, 0.8, 0.045, 0.04).unwrap();
        let cfg = SimConfig::new(4, 1000, 3, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let want = 100.0 * 0.045f64.exp();
        for s in p.terminal() {
            assert!(((s - want) / want).abs() < 1e-4);
        }
    }

    #[test]
    fn paths_start_at_s0_and_stay_absorbed() {
        let m = MCEVParams::new(1.5, -0.8, 0.0, 0.0, 0.0).unwrap();
        let cfg = SimConfig::new(400, 200, 11, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 1.0, 1.0, &cfg).unwrap();
        assert!(p.absorbed.iter().any(|&a| a));
        for (v, &dead) in p.values.iter().zip(&p.absorbed) {
            assert_eq!(v[0], 1.0);
            assert!(v.iter().all(|&s| s >= 0.0));
            if dead {
                let first = v.iter().position(|&s| s == 0.0).unwrap();
                assert!(v[first..].iter().all(|&s| s == 0.0));
            }
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let m = section_model();
        let cfg = SimConfig::new(200, 50, 42, Scheme::Milstein).unwrap();
        let a = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let b = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        assert_eq!(a, b);
        let other = simulate_mcev(&m, 100.0, 1.0, &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn bond_only_compounds() {
        let m = section_model();
        let u = UtilityParams::new(-4.0).unwrap();
        let cfg = SimConfig::new(2, 10_000, 1, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let w = run_strategy(&p, StrategySpec::BondOnly, &m, &u, 100.0, 1.0).unwrap();
        for path in &w {
            assert!((path.terminal() - 100.0 * 0.04f64.exp()).abs() < 1e-4);
        }
    }

    #[test]
    fn asset_only_tracks_price_at_zero_rate() {
        let m = MCEVParams::new(0.4, -0.4, 0.8, 0.045, 0.0).unwrap();
        let u = UtilityParams::new(-4.0).unwrap();
        let cfg = SimConfig::new(50, 100, 9, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let w = run_strategy(&p, StrategySpec::AssetOnly, &m, &u, 250.0, 1.0).unwrap();
        for (path, s) in w.iter().zip(&p.values) {
            let want = s[s.len() - 1] / s[0];
            assert!((path.terminal() / 250.0 - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn self_financing_identity() {
        let m = section_model();
        let u = UtilityParams::new(-4.0).unwrap();
        let cfg = SimConfig::new(20, 50, 5, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let w = run_strategy(&p, StrategySpec::OptimalPolicy, &m, &u, 100.0, 1.0).unwrap();
        for (path, s) in w.iter().zip(&p.values) {
            assert_eq!(path.wealth[0], 100.0);
            for k in 0..path.positions.len() {
                let dt = p.times[k + 1] - p.times[k];
                let (x, pi) = (path.wealth[k], path.positions[k]);
                let step = x + m.r * (x - pi * s[k]) * dt + pi * (s[k + 1] - s[k]);
                assert_eq!(path.wealth[k + 1], step);
            }
        }
    }

    #[test]
    fn constant_wealth_stats() {
        let u = UtilityParams::new(-3.0).unwrap();
        let st = terminal_stats_from_values(&[7.5; 10], &u).unwrap();
        assert_eq!(st.std, 0.0);
        assert_eq!(st.certainty_equivalent, 7.5);
        assert!(terminal_stats_from_values(&[], &u).is_err());
    }

    #[test]
    fn two_point_certainty_equivalent() {
        let u = UtilityParams::new(-1.0).unwrap();
        let st = terminal_stats_from_values(&[1.0, 3.0], &u).unwrap();
        assert!((st.certainty_equivalent - 1.5).abs() < 1e-14);
    }

    #[test]
    fn type7_quantiles() {
        let v: Vec<f64> = (1..=5).map(f64::from).collect();
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.1), 1.4);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
    }

    #[test]
    fn flagged_paths_are_excluded() {
        let u = UtilityParams::new(-2.0).unwrap();
        let ok = WealthPath {
            times: vec![0.0, 1.0],
            wealth: vec![1.0, 2.0],
            positions: vec![0.0],
            flagged: false,
            capped: false,
        };
        let bad = WealthPath { wealth: vec![1.0, -1.0], flagged: true, ..ok.clone() };
        let st = terminal_stats(&[ok, bad], &u).unwrap();
        assert_eq!((st.n, st.excluded), (1, 1));
        assert_eq!(st.mean, 2.0);
    }

    #[test]
    fn identical_assumption_gives_zero_loss() {
        let m = section_model();
        let u = UtilityParams::new(-4.0).unwrap();
        let cfg = SimConfig::new(100, 20, 8, Scheme::Euler).unwrap();
        let r = misspecification_study(&m, &m, &u, 100.0, 100.0, 1.0, &cfg).unwrap();
        assert_eq!(r.misspecified, r.correct);
        assert_eq!(r.utility_loss, 0.0);
    }

    #[test]
    fn csv_output_has_expected_columns() {
        let m = section_model();
        let u = UtilityParams::new(-4.0).unwrap();
        let cfg = SimConfig::new(3, 4, 1, Scheme::Euler).unwrap();
        let p = simulate_mcev(&m, 100.0, 1.0, &cfg).unwrap();
        let w = run_strategy(&p, StrategySpec::AssetOnly, &m, &u, 100.0, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("paths.csv");
        write_paths_csv(&file, &p, &w).unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "path_id,t,S,X,pi");
        assert_eq!(lines.count(), 15);
    }
}
