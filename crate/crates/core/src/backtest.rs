//! Daily rate series, square-root process calibration, and the backtest of
//! the square-root optimal policy against buy-and-hold.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::model::UtilityParams;
use crate::policy::{cir_optimal_position_with, CIRParams, PolicyInput};
use crate::specialfn::{ln_bessel_i_scaled, RatioKernel};
use crate::{Error, Result};

/// Minimum number of observations for a calibration.
pub const MIN_CALIBRATION_OBS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum DayCount {
    /// `dt = 1/252` per observation
    #[default]
    Trading252,
    /// `dt` = average calendar gap / 365
    Actual365,
}

impl DayCount {
    pub fn from_days(days: u32) -> Result<Self> {
        match days {
            252 => Ok(DayCount::Trading252),
            365 => Ok(DayCount::Actual365),
            other => Err(Error::domain(format!("day count must be 252 or 365, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub dates: Vec<NaiveDate>,
    pub rates: Vec<f64>,
    /// year fraction between consecutive observations
    pub dt: f64,
}

impl RateSeries {
    pub fn new(dates: Vec<NaiveDate>, rates: Vec<f64>, dt: f64) -> Result<Self> {
        if dates.len() != rates.len() {
            return Err(Error::domain("dates and rates differ in length"));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("dates must be strictly increasing"));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::domain(format!("rates must be finite and > 0, got {r}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::domain(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self { dates, rates, dt })
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Observations with `from <= date <= to`, same `dt`.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> RateSeries {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.dates[i] >= from && self.dates[i] <= to)
            .collect();
        RateSeries {
            dates: keep.iter().map(|&i| self.dates[i]).collect(),
            rates: keep.iter().map(|&i| self.rates[i]).collect(),
            dt: self.dt,
        }
    }

    /// `(n − 1)·dt`
    pub fn span(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Default calibration window: 2011-01-01 through 2016-06-30.
pub fn default_train_window() -> (NaiveDate, NaiveDate) {
    (date(2011, 1, 1), date(2016, 6, 30))
}

/// Default trading window: 2016-07-01 through 2017-06-26.
pub fn default_test_window() -> (NaiveDate, NaiveDate) {
    (date(2016, 7, 1), date(2017, 6, 26))
}

#[derive(Debug, Deserialize)]
struct Row {
    date: String,
    rate: String,
}

pub fn load_csv(path: &Path) -> Result<RateSeries> {
    load_csv_with(path, DayCount::default())
}

/// Reads `date,rate` with ISO-8601 dates. Unsorted rows are sorted with a
/// warning; a repeated date is an error.
pub fn load_csv_with(path: &Path, day_count: DayCount) -> Result<RateSeries> {
    let name = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: name.clone(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "rate" {
        return Err(parse_err(1, format!("expected header 'date,rate', got '{}'", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: Row = rec.deserialize(Some(&headers)).map_err(|e| parse_err(line, e.to_string()))?;
        let d = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date '{}': {e}", row.date)))?;
        let r: f64 = row
            .rate
            .parse()
            .map_err(|e| parse_err(line, format!("bad rate '{}': {e}", row.rate)))?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(parse_err(line, format!("rate must be > 0, got {r}")));
        }
        rows.push((d, r, line));
    }
    if rows.windows(2).any(|w| w[0].0 > w[1].0) {
        log::warn!("{name}: rows are not in date order; sorting");
        rows.sort_by_key(|r| r.0);
    }
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        let line = w[0].2.max(w[1].2);
        return Err(parse_err(line, format!("duplicate date {}", w[1].0)));
    }
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.0).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let dt = match day_count {
        DayCount::Trading252 => 1.0 / 252.0,
        DayCount::Actual365 if dates.len() >= 2 => {
            let days = (dates[dates.len() - 1] - dates[0]).num_days() as f64;
            days / 365.0 / (dates.len() - 1) as f64
        }
        DayCount::Actual365 => 1.0 / 365.0,
    };
    if rates.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    RateSeries::new(dates, rates, dt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CalibrationMethod {
    #[default]
    OLSEuler,
    MLE,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub kappa: f64,
    pub s_bar: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CIRCalibration {
    pub kappa: f64,
    pub s_bar: f64,
    pub a: f64,
    pub method: CalibrationMethod,
    pub stderr: StdErrors,
    pub n_obs: usize,
    pub dt: f64,
}

impl CIRCalibration {
    pub fn params(&self) -> Result<CIRParams> {
        CIRParams::new(self.kappa, self.s_bar, self.a)
    }
}

pub fn calibrate_cir(s: &RateSeries, method: CalibrationMethod) -> Result<CIRCalibration> {
    let ols = calibrate_ols(s)?;
    match method {
        CalibrationMethod::OLSEuler => Ok(ols),
        CalibrationMethod::MLE => calibrate_mle(s, &ols),
    }
}

fn inverse_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = m[0][0].abs().max(m[1][1].abs());
    if !(det.abs() > 1e-12 * scale * scale) {
        return None;
    }
    Some([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
}

/// Least squares on `(S_{k+1} − S_k)/√S_k = κS̄·dt/√S_k − κ·dt·√S_k + a√dt·ε`.
fn calibrate_ols(s: &RateSeries) -> Result<CIRCalibration> {
    let n = s.len();
    if n < MIN_CALIBRATION_OBS {
        return Err(Error::domain(format!(
            "calibration needs at least {MIN_CALIBRATION_OBS} observations, got {n}"
        )));
    }
    let dt = s.dt;
    let mut xtx = [[0.0; 2]; 2];
    let mut xty = [0.0; 2];
    let rows: Vec<([f64; 2], f64)> = s
        .rates
        .windows(2)
        .map(|w| {
            let r = w[0].sqrt();
            ([dt / r, dt * r], (w[1] - w[0]) / r)
        })
        .collect();
    for (x, y) in &rows {
        for i in 0..2 {
            xty[i] += x[i] * y;
            for j in 0..2 {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    let inv = inverse_2x2(xtx).ok_or_else(|| Error::Degenerate("regressors are collinear".into()))?;
    let b = [
        inv[0][0] * xty[0] + inv[0][1] * xty[1],
        inv[1][0] * xty[0] + inv[1][1] * xty[1],
    ];
    let m = rows.len();
    let rss: f64 = rows.iter().map(|(x, y)| (y - b[0] * x[0] - b[1] * x[1]).powi(2)).sum();
    let sigma2 = rss / (m - 2) as f64;
    if !(sigma2 > 0.0) {
        return Err(Error::Degenerate("zero residual variance".into()));
    }
    let kappa = -b[1];
    if !(kappa > 0.0) {
        return Err(Error::domain(format!(
            "implied kappa = {kappa} <= 0: series is not mean-reverting"
        )));
    }
    let s_bar = b[0] / kappa;
    if !(s_bar > 0.0) {
        return Err(Error::domain(format!("implied long-term mean {s_bar} is not positive")));
    }
    let cov = |i: usize, j: usize| inv[i][j] * sigma2;
    let (g1, g2) = (1.0 / kappa, b[0] / (kappa * kappa));
    let var_sbar = g1 * g1 * cov(0, 0) + g2 * g2 * cov(1, 1) + 2.0 * g1 * g2 * cov(0, 1);
    let a = (sigma2 / dt).sqrt();
    Ok(CIRCalibration {
        kappa,
        s_bar,
        a,
        method: CalibrationMethod::OLSEuler,
        stderr: StdErrors {
            kappa: cov(1, 1).sqrt(),
            s_bar: var_sbar.sqrt(),
            a: a / (2.0 * (m - 2) as f64).sqrt(),
        },
        n_obs: n,
        dt,
    })
}

/// Exact transition log-density of the square-root process (non-central
/// chi-square), summed over the series. Requires `q = 2κS̄/a² − 1 >= 0`.
pub fn cir_log_likelihood(s: &RateSeries, kappa: f64, s_bar: f64, a: f64) -> Result<f64> {
    if !(kappa > 0.0 && s_bar > 0.0 && a > 0.0) {
        return Err(Error::domain("log-likelihood needs positive parameters"));
    }
    let e = (-kappa * s.dt).exp();
    let c = 2.0 * kappa / (a * a * (1.0 - e));
    let q = 2.0 * kappa * s_bar / (a * a) - 1.0;
    if q < 0.0 {
        return Err(Error::domain(format!("Bessel order 2 kappa s_bar / a^2 - 1 = {q} is negative")));
    }
    let mut total = 0.0;
    for w in s.rates.windows(2) {
        let u = c * w[0] * e;
        let v = c * w[1];
        let arg = 2.0 * (u * v).sqrt();
        total += c.ln() - u - v + 0.5 * q * (v / u).ln() + ln_bessel_i_scaled(q, arg)? + arg;
    }
    Ok(total)
}

/// Nelder–Mead on `f`; returns the best vertex.
fn nelder_mead(f: &dyn Fn(&[f64; 3]) -> f64, start: [f64; 3], step: f64, iters: usize) -> [f64; 3] {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut p = start;
            if i > 0 {
                p[i - 1] += step;
            }
            (p, f(&p))
        })
        .collect();
    let combine = |a: &[f64; 3], b: &[f64; 3], t: f64| -> [f64; 3] {
        [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])]
    };
    for _ in 0..iters {
        simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
        if (simplex[3].1 - simplex[0].1).abs() <= 1e-12 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let mut centroid = [0.0; 3];
        for (p, _) in &simplex[..3] {
            for i in 0..3 {
                centroid[i] += p[i] / 3.0;
            }
        }
        let worst = simplex[3];
        let refl = combine(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = combine(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[3] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (refl, fr);
        } else {
            let con = combine(&centroid, &worst.0, 0.5);
            let fc = f(&con);
            if fc < worst.1 {
                simplex[3] = (con, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = combine(&best, &v.0, 0.5);
                    v.1 = f(&v.0);
                }
            }
        }
    }
    simplex.sort_by(|x, y| x.1.total_cmp(&y.1));
    simplex[0].0
}

fn invert_3x3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if !det.is_normal() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

/// Maximum likelihood started from the least-squares fit. Standard errors
/// from a central-difference Hessian of the negative log-likelihood.
fn calibrate_mle(s: &RateSeries, start: &CIRCalibration) -> Result<CIRCalibration> {
    let nll = |p: &[f64; 3]| -> f64 {
        let (k, m, a) = (p[0].exp(), p[1].exp(), p[2].exp());
        match cir_log_likelihood(s, k, m, a) {
            Ok(v) if v.is_finite() => -v,
            _ => f64::INFINITY,
        }
    };
    let x0 = [start.kappa.ln(), start.s_bar.ln(), start.a.ln()];
    if !nll(&x0).is_finite() {
        return Err(Error::domain(
            "maximum likelihood needs 2 kappa s_bar >= a^2 at the least-squares start",
        ));
    }
    let mut best = nelder_mead(&nll, x0, 0.1, 4000);
    best = nelder_mead(&nll, best, 0.01, 4000);
    let theta = [best[0].exp(), best[1].exp(), best[2].exp()];
    let f = |p: [f64; 3]| -> f64 {
        cir_log_likelihood(s, p[0], p[1], p[2]).map(|v| -v).unwrap_or(f64::INFINITY)
    };
    let mut h = [[0.0; 3]; 3];
    let step: Vec<f64> = theta.iter().map(|v| 1e-4 * v.abs()).collect();
    for i in 0..3 {
        for j in 0..3 {
            let shifted = |di: f64, dj: f64| {
                let mut p = theta;
                p[i] += di * step[i];
                p[j] += dj * step[j];
                f(p)
            };
            h[i][j] = (shifted(1.0, 1.0) - shifted(1.0, -1.0) - shifted(-1.0, 1.0) + shifted(-1.0, -1.0))
                / (4.0 * step[i] * step[j]);
        }
    }
    let cov = invert_3x3(h).ok_or_else(|| Error::Degenerate("singular likelihood Hessian".into()))?;
    let se = |i: usize| if cov[i][i] > 0.0 { cov[i][i].sqrt() } else { f64::NAN };
    Ok(CIRCalibration {
        kappa: theta[0],
        s_bar: theta[1],
        a: theta[2],
        method: CalibrationMethod::MLE,
        stderr: StdErrors {
            kappa: se(0),
            s_bar: se(1),
            a: se(2),
        },
        n_obs: s.len(),
        dt: s.dt,
    })
}

/// Largest relative decline from a running peak, `min_k (W_k − max_{j≤k} W_j)/max_{j≤k} W_j`.
pub fn max_drawdown(wealth: &[f64]) -> Result<f64> {
    if wealth.is_empty() {
        return Err(Error::domain("max_drawdown of an empty series"));
    }
    let mut peak = wealth[0];
    let mut worst: f64 = 0.0;
    for &w in wealth {
        peak = peak.max(w);
        worst = worst.min((w - peak) / peak);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub total_return: f64,
    pub max_drawdown: f64,
    pub benchmark_return: f64,
    pub benchmark_drawdown: f64,
    pub n_days: usize,
    /// wealth hit zero; the series stops there
    pub bankrupt: bool,
    pub params: CIRCalibration,
    pub gamma: f64,
    pub x0: f64,
    pub horizon: f64,
    pub dates: Vec<NaiveDate>,
    pub wealth: Vec<f64>,
    pub positions: Vec<f64>,
    pub benchmark_wealth: Vec<f64>,
}

/// Scalar part of a [`BacktestReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestSummary {
    pub total_return: f64,
    pub max_drawdown: f64,
    pub benchmark_return: f64,
    pub benchmark_drawdown: f64,
    pub n_days: usize,
    pub bankrupt: bool,
    pub params: CIRCalibration,
    pub gamma: f64,
    pub x0: f64,
    pub horizon: f64,
}

impl BacktestReport {
    pub fn summary(&self) -> BacktestSummary {
        BacktestSummary {
            total_return: self.total_return,
            max_drawdown: self.max_drawdown,
            benchmark_return: self.benchmark_return,
            benchmark_drawdown: self.benchmark_drawdown,
            n_days: self.n_days,
            bankrupt: self.bankrupt,
            params: self.params,
            gamma: self.gamma,
            x0: self.x0,
            horizon: self.horizon,
        }
    }

    /// CSV `date,S,X,pi,benchmark`; `pi` is empty on the last row.
    pub fn write_csv(&self, path: &Path, prices: &RateSeries) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["date", "S", "X", "pi", "benchmark"])?;
        for k in 0..self.wealth.len() {
            w.write_record([
                self.dates[k].to_string(),
                prices.rates[k].to_string(),
                self.wealth[k].to_string(),
                self.positions.get(k).map(|p| p.to_string()).unwrap_or_default(),
                self.benchmark_wealth[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn run_backtest(
    s: &RateSeries,
    c: &CIRCalibration,
    u: &UtilityParams,
    x0: f64,
    horizon: f64,
) -> Result<BacktestReport> {
    run_backtest_with(s, c, u, x0, horizon, &RatioKernel::default())
}

/// Daily rebalancing with `π_k` from the square-root policy at `t_k = k·dt`
/// (capped at `T`) and `X_{k+1} = X_k + π_k(S_{k+1} − S_k)`. The benchmark
/// holds `X0/S0` units throughout.
pub fn run_backtest_with(
    s: &RateSeries,
    c: &CIRCalibration,
    u: &UtilityParams,
    x0: f64,
    horizon: f64,
    kernel: &RatioKernel,
) -> Result<BacktestReport> {
    if s.len() < 2 {
        return Err(Error::domain("backtest needs at least two observations"));
    }
    if !(x0 > 0.0) || !x0.is_finite() {
        return Err(Error::domain(format!("X0 must be finite and > 0, got {x0}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!("T must be finite and > 0, got {horizon}")));
    }
    let params = c.params()?;
    let s0 = s.rates[0];
    let units = x0 / s0;
    let benchmark_wealth: Vec<f64> = s.rates.iter().map(|&p| x0 + units * (p - s0)).collect();
    let mut wealth = vec![x0];
    let mut positions = Vec::with_capacity(s.len() - 1);
    let mut bankrupt = false;
    let mut x = x0;
    for k in 0..s.len() - 1 {
        let t = (k as f64 * s.dt).min(horizon);
        let inp = PolicyInput::new(x, s.rates[k], t, horizon)?;
        let pi = cir_optimal_position_with(&inp, &params, u, kernel)?;
        positions.push(pi);
        x += pi * (s.rates[k + 1] - s.rates[k]);
        wealth.push(x);
        if !(x > 0.0) || !x.is_finite() {
            log::warn!("bankruptcy on {}: wealth {x}", s.dates[k + 1]);
            bankrupt = true;
            break;
        }
    }
    let n = wealth.len();
    Ok(BacktestReport {
        total_return: wealth[n - 1] / x0 - 1.0,
        max_drawdown: max_drawdown(&wealth)?,
        benchmark_return: s.rates[s.len() - 1] / s0 - 1.0,
        benchmark_drawdown: max_drawdown(&benchmark_wealth)?,
        n_days: n,
        bankrupt,
        params: *c,
        gamma: u.gamma,
        x0,
        horizon,
        dates: s.dates[..n].to_vec(),
        wealth,
        positions,
        benchmark_wealth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{simulate_cir, Scheme, SimConfig};
    use proptest::prelude::*;
    use std::io::Write as _;

    fn write(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("rates.csv");
        let mut f = std::fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn series(rates: Vec<f64>) -> RateSeries {
        let start = date(2000, 1, 3);
        let dates = (0..rates.len()).map(|i| start + chrono::Days::new(i as u64)).collect();
        RateSeries::new(dates, rates, 1.0 / 252.0).unwrap()
    }

    fn synthetic(seed: u64, years: usize) -> RateSeries {
        let c = CIRParams::new(0.8, 1.3, 0.2).unwrap();
        let n = 252 * years;
        let cfg = SimConfig::new(1, n, seed, Scheme::Euler).unwrap();
        let p = simulate_cir(&c, 1.3, n as f64 / 252.0, &cfg).unwrap();
        series(p.values[0].clone())
    }

    #[test]
    fn two_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "date,rate\n2016-07-01,1.29\n2016-07-04,1.30\n");
        let s = load_csv(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dt, 1.0 / 252.0);
    }

    #[test]
    fn unsorted_rows_are_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "date,rate\n2016-07-05,1.31\n2016-07-01,1.29\n2016-07-04,1.30\n");
        let s = load_csv(&p).unwrap();
        assert_eq!(s.rates, vec![1.29, 1.30, 1.31]);
    }

    #[test]
    fn duplicate_date_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "date,rate\n2016-07-01,1.29\n2016-07-04,1.30\n2016-07-04,1.31\n");
        match load_csv(&p).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_rows_report_line() {
        let dir = tempfile::tempdir().unwrap();
        for (body, want) in [
            ("date,rate\n2016-07-01,1.29\n2016-13-01,1.3\n", 3),
            ("date,rate\n2016-07-01,abc\n", 2),
            ("date,rate\n2016-07-01,1.2\n2016-07-02,-1.0\n", 3),
        ] {
            let p = write(&dir, body);
            match load_csv(&p).unwrap_err() {
                Error::Parse { line, .. } => assert_eq!(line, want, "{body}"),
                e => panic!("unexpected {e}"),
            }
        }
        let p = write(&dir, "day,value\n2016-07-01,1.2\n");
        assert!(load_csv(&p).is_err());
    }

    #[test]
    fn actual_day_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "date,rate\n2016-07-01,1.29\n2016-07-04,1.30\n2016-07-05,1.3\n");
        let s = load_csv_with(&p, DayCount::Actual365).unwrap();
        assert!((s.dt - 2.0 / 365.0).abs() < 1e-15);
        assert!(DayCount::from_days(360).is_err());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = series(vec![1.3; 300]);
        assert!(matches!(calibrate_cir(&s, CalibrationMethod::OLSEuler), Err(Error::Degenerate(_))));
    }

    #[test]
    fn short_series_rejected() {
        let s = series(vec![1.3, 1.31, 1.29]);
        assert!(calibrate_cir(&s, CalibrationMethod::OLSEuler).is_err());
    }

    #[test]
    fn trending_series_is_not_mean_reverting() {
        let s = series((0..300).map(|i| 1.01f64.powi(i) * (1.0 + 0.002 * ((i * 7919) % 13) as f64)).collect());
        let err = calibrate_cir(&s, CalibrationMethod::OLSEuler).unwrap_err();
        assert!(err.to_string().contains("mean-reverting"), "{err}");
    }

    #[test]
    fn dt_scaling() {
        let s = synthetic(5, 10);
        let a = calibrate_cir(&s, CalibrationMethod::OLSEuler).unwrap();
        let doubled = RateSeries { dt: 2.0 * s.dt, ..s.clone() };
        let b = calibrate_cir(&doubled, CalibrationMethod::OLSEuler).unwrap();
        assert!((b.kappa - 0.5 * a.kappa).abs() < 1e-12 * a.kappa);
        assert!((b.s_bar - a.s_bar).abs() < 1e-12 * a.s_bar);
        assert!((b.a - a.a / 2f64.sqrt()).abs() < 1e-12 * a.a);
    }

    #[test]
    fn mle_refines_ols() {
        let s = synthetic(17, 10);
        let ols = calibrate_cir(&s, CalibrationMethod::OLSEuler).unwrap();
        let mle = calibrate_cir(&s, CalibrationMethod::MLE).unwrap();
        let l_ols = cir_log_likelihood(&s, ols.kappa, ols.s_bar, ols.a).unwrap();
        let l_mle = cir_log_likelihood(&s, mle.kappa, mle.s_bar, mle.a).unwrap();
        assert!(l_mle >= l_ols - 1e-9);
        assert!(((mle.a - 0.2) / 0.2).abs() < 0.05);
        assert!(mle.stderr.kappa.is_finite() && mle.stderr.kappa > 0.0);
    }

    #[test]
    fn drawdown_examples() {
        assert_eq!(max_drawdown(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((max_drawdown(&[100.0, 110.0, 99.0, 105.0]).unwrap() + 0.1).abs() < 1e-15);
        assert!(max_drawdown(&[]).is_err());
    }

    fn cal(kappa: f64, s_bar: f64, a: f64) -> CIRCalibration {
        CIRCalibration {
            kappa,
            s_bar,
            a,
            method: CalibrationMethod::OLSEuler,
            stderr: StdErrors { kappa: 0.0, s_bar: 0.0, a: 0.0 },
            n_obs: 0,
            dt: 1.0 / 252.0,
        }
    }

    #[test]
    fn flat_prices_do_nothing() {
        let s = series(vec![1.3; 50]);
        let u = UtilityParams::new(-7.0).unwrap();
        let r = run_backtest(&s, &cal(0.109, 1.32675, 0.28789), &u, 1000.0, 49.0 / 252.0).unwrap();
        assert_eq!((r.total_return, r.max_drawdown), (0.0, 0.0));
        assert_eq!((r.benchmark_return, r.benchmark_drawdown), (0.0, 0.0));
    }

    #[test]
    fn benchmark_identity_and_self_financing() {
        let s = synthetic(3, 1);
        let u = UtilityParams::new(-7.0).unwrap();
        let r = run_backtest(&s, &cal(0.8, 1.3, 0.2), &u, 1000.0, s.span()).unwrap();
        let want = s.rates[s.len() - 1] / s.rates[0] - 1.0;
        assert_eq!(r.benchmark_return, want);
        assert_eq!(r.wealth[0], 1000.0);
        for k in 0..r.positions.len() {
            assert_eq!(r.wealth[k + 1], r.wealth[k] + r.positions[k] * (s.rates[k + 1] - s.rates[k]));
        }
    }

    #[test]
    fn position_follows_gap_to_mean_near_horizon() {
        let c = CIRParams::new(2.0, 1.3, 0.2).unwrap();
        let u = UtilityParams::new(-2.0).unwrap();
        for &s in &[1.0, 1.2, 1.4, 1.6] {
            let inp = PolicyInput::new(1000.0, s, 0.999, 1.0).unwrap();
            let pi = crate::policy::cir_optimal_position(&inp, &c, &u).unwrap();
            let myopic = inp.x / s * u.delta * c.kappa * (c.s_bar - s) / (c.a * c.a);
            let hedge = pi - myopic;
            assert!(myopic.abs() >= 10.0 * hedge.abs());
            assert_eq!(pi.signum(), (c.s_bar - s).signum());
        }
    }

    proptest! {
        #[test]
        fn drawdown_matches_brute_force(w in proptest::collection::vec(0.1f64..10.0, 1..60)) {
            let mut brute: f64 = 0.0;
            for j in 0..w.len() {
                for k in j..w.len() {
                    brute = brute.min((w[k] - w[j]) / w[j]);
                }
            }
            prop_assert!((max_drawdown(&w).unwrap() - brute).abs() < 1e-15);
        }

        #[test]
        fn drawdown_scale_invariant(w in proptest::collection::vec(0.1f64..10.0, 1..40), k in 0.01f64..100.0) {
            let scaled: Vec<f64> = w.iter().map(|v| v * k).collect();
            prop_assert!((max_drawdown(&w).unwrap() - max_drawdown(&scaled).unwrap()).abs() < 1e-12);
        }
    }
}
