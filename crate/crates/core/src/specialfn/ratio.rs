use serde::{Deserialize, Serialize};

use crate::specialfn::gamma::{is_nonpositive_integer, signed_ln_gamma};
use crate::specialfn::kummer::{check_omega, kummer_eval};
use crate::specialfn::series::QuotientStream;
use crate::specialfn::DEFAULT_MAX_TERMS;
use crate::{Error, Result};

const LENTZ_TINY: f64 = 1e-300;

/// Argument of the Kummer ratio `M(θ−1, ω, x) / M(θ, ω, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioParams {
    pub theta: f64,
    pub omega: f64,
    pub x: f64,
}

impl RatioParams {
    pub fn new(theta: f64, omega: f64, x: f64) -> Result<Self> {
        check_omega(omega)?;
        if !theta.is_finite() {
            return Err(Error::domain(format!("theta must be finite, got {theta}")));
        }
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("ratio argument must be finite and >= 0, got {x}")));
        }
        Ok(Self { theta, omega, x })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RatioMethod {
    SmallXSeries,
    LargeXSeries,
    ContinuedFraction,
    DirectQuotient,
}

impl RatioMethod {
    pub const ALL: [RatioMethod; 4] = [
        RatioMethod::SmallXSeries,
        RatioMethod::LargeXSeries,
        RatioMethod::ContinuedFraction,
        RatioMethod::DirectQuotient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RatioMethod::SmallXSeries => "small-x series",
            RatioMethod::LargeXSeries => "large-x series",
            RatioMethod::ContinuedFraction => "continued fraction",
            RatioMethod::DirectQuotient => "direct quotient",
        }
    }
}

impl std::str::FromStr for RatioMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" | "small-x" | "SmallXSeries" => Ok(RatioMethod::SmallXSeries),
            "large" | "large-x" | "LargeXSeries" => Ok(RatioMethod::LargeXSeries),
            "cf" | "ContinuedFraction" => Ok(RatioMethod::ContinuedFraction),
            "direct" | "DirectQuotient" => Ok(RatioMethod::DirectQuotient),
            other => Err(Error::domain(format!("unknown ratio method '{other}'"))),
        }
    }
}

/// Value of the ratio with the method that produced it. `est_error` is an
/// absolute error estimate; success means `est_error <= tol * |value|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEvaluation {
    pub value: f64,
    pub method: RatioMethod,
    pub terms_used: usize,
    pub est_error: f64,
}

/// Configuration of the ratio kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioKernel {
    /// Cap on series terms and continued-fraction depth.
    pub max_terms: usize,
    /// Fixed dispatcher crossover; `None` selects `max(10, |θ| + |ω|)`.
    pub crossover: Option<f64>,
}

impl Default for RatioKernel {
    fn default() -> Self {
        Self {
            max_terms: DEFAULT_MAX_TERMS,
            crossover: None,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn at_origin(method: RatioMethod) -> RatioEvaluation {
    RatioEvaluation {
        value: 1.0,
        method,
        terms_used: 1,
        est_error: 0.0,
    }
}

impl RatioKernel {
    pub fn crossover_for(&self, p: &RatioParams) -> f64 {
        self.crossover
            .unwrap_or_else(|| 10f64.max(p.theta.abs() + p.omega.abs()))
    }

    /// Dispatcher: small-x series below the crossover, large-x series above,
    /// then the continued fraction and finally the direct quotient.
    pub fn ratio(&self, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        check_tol(tol)?;
        if p.x == 0.0 {
            return Ok(at_origin(RatioMethod::SmallXSeries));
        }
        let first = if p.x <= self.crossover_for(p) {
            RatioMethod::SmallXSeries
        } else {
            RatioMethod::LargeXSeries
        };
        let order = [first, RatioMethod::ContinuedFraction, RatioMethod::DirectQuotient];
        let mut failures = Vec::new();
        for method in order {
            match self.evaluate(method, p, tol) {
                Ok(ev) => return Ok(ev),
                Err(e) => failures.push(e),
            }
        }
        Err(Error::AllMethodsFailed(failures))
    }

    pub fn evaluate(&self, method: RatioMethod, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        match method {
            RatioMethod::SmallXSeries => self.ratio_small_x(p, tol),
            RatioMethod::LargeXSeries => self.ratio_large_x(p, tol),
            RatioMethod::ContinuedFraction => self.ratio_continued_fraction(p, tol),
            RatioMethod::DirectQuotient => self.ratio_direct_quotient(p, tol),
        }
    }

    /// `Σ c_s x^s` with `c` the quotient of the two Kummer power series.
    /// Stops once two consecutive increments fall below `tol·|S_N|`.
    pub fn ratio_small_x(&self, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        check_tol(tol)?;
        let RatioParams { theta, omega, x } = *p;
        if x == 0.0 {
            return Ok(at_origin(RatioMethod::SmallXSeries));
        }
        let mut stream = QuotientStream::new(
            |s| (theta - 2.0 + s as f64) * x / (s as f64 * (omega + s as f64 - 1.0)),
            |s| (theta - 1.0 + s as f64) * x / (s as f64 * (omega + s as f64 - 1.0)),
        );
        let mut sum = stream.next_coeff();
        let mut streak = 0;
        let mut last = 0.0_f64;
        let mut history = vec![1.0_f64];
        while stream.len() < self.max_terms {
            let inc = stream.next_coeff();
            sum += inc;
            last = inc.abs();
            history.push(last);
            if !sum.is_finite() || last > 1e8 * sum.abs().max(1.0) || not_decaying(&history) {
                break;
            }
            if last <= tol * sum.abs() {
                streak += 1;
                if streak == 2 {
                    return Ok(RatioEvaluation {
                        value: sum,
                        method: RatioMethod::SmallXSeries,
                        terms_used: stream.len(),
                        est_error: last,
                    });
                }
            } else {
                streak = 0;
            }
        }
        Err(Error::NonConvergence {
            routine: RatioMethod::SmallXSeries.name(),
            terms_used: stream.len(),
            est_error: last,
        })
    }

    /// `(θ−1)/x · Σ d_s x^{−s}`, optimally truncated at the smallest term.
    pub fn ratio_large_x(&self, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        check_tol(tol)?;
        let RatioParams { theta, omega, x } = *p;
        if x == 0.0 {
            return Err(Error::domain("large-x expansion needs x > 0"));
        }
        if is_nonpositive_integer(theta - 1.0) {
            // numerator is a polynomial, the ratio is exponentially small
            return Err(Error::Degenerate(format!(
                "large-x expansion has zero leading term for theta = {theta}"
            )));
        }
        let lead = (theta - 1.0) / x;
        let u = 1.0 / x;
        let mut stream = QuotientStream::new(
            |s| {
                let sf = s as f64;
                (1.0 - theta + sf) * (omega - theta + sf) / sf * u
            },
            |s| {
                let sf = s as f64;
                (sf - theta) * (omega - theta + sf - 1.0) / sf * u
            },
        );
        let mut sum = stream.next_coeff();
        let mut prev = 1.0_f64;
        let mut omitted = f64::INFINITY;
        while stream.len() < self.max_terms {
            let d = stream.next_coeff();
            if d == 0.0 {
                omitted = 0.0;
                break;
            }
            if d.abs() >= prev.abs() {
                // past the smallest term: drop it and stop
                sum -= prev;
                omitted = prev.abs();
                break;
            }
            sum += d;
            prev = d;
            if d.abs() <= 0.1 * tol * sum.abs() {
                omitted = d.abs();
                break;
            }
        }
        let value = lead * sum;
        let est_error = omitted * lead.abs() + value.abs() * recessive_share(theta, omega, x);
        if !(est_error <= tol * value.abs()) {
            return Err(Error::NonConvergence {
                routine: RatioMethod::LargeXSeries.name(),
                terms_used: stream.len(),
                est_error,
            });
        }
        Ok(RatioEvaluation {
            value,
            method: RatioMethod::LargeXSeries,
            terms_used: stream.len(),
            est_error,
        })
    }

    /// Continued fraction from the contiguous relations in the second
    /// parameter, in which `M` is the minimal solution:
    /// `ratio = 1 − x / w`, `w = (ω+x) + K_{k≥1} (−x(ω+k−θ)) / (ω+k+x)`,
    /// evaluated by the modified Lentz method.
    pub fn ratio_continued_fraction(&self, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        check_tol(tol)?;
        let RatioParams { theta, omega, x } = *p;
        if x == 0.0 {
            return Ok(at_origin(RatioMethod::ContinuedFraction));
        }
        let floor = |v: f64| if v.abs() < LENTZ_TINY { LENTZ_TINY } else { v };
        let mut f = floor(omega + x);
        let mut c = f;
        let mut d = 0.0;
        let mut est_error = f64::INFINITY;
        for k in 1..=self.max_terms {
            let kf = k as f64;
            let a = -x * (omega + kf - theta);
            let b = omega + kf + x;
            if b == 0.0 && a == 0.0 {
                return Err(Error::Degenerate(format!(
                    "continued fraction term {k} is 0/0 for omega = {omega}, x = {x}"
                )));
            }
            d = 1.0 / floor(b + a * d);
            c = floor(b + a / c);
            let delta = c * d;
            f *= delta;
            let value = 1.0 - x / f;
            est_error = (x / f).abs() * (delta - 1.0).abs();
            if a == 0.0 || ((delta - 1.0).abs() <= tol && est_error <= 0.1 * tol * value.abs()) {
                return Ok(RatioEvaluation {
                    value,
                    method: RatioMethod::ContinuedFraction,
                    terms_used: k,
                    est_error,
                });
            }
        }
        Err(Error::NonConvergence {
            routine: RatioMethod::ContinuedFraction.name(),
            terms_used: self.max_terms,
            est_error,
        })
    }

    /// Quotient of two independently evaluated (log-scaled) Kummer functions.
    pub fn ratio_direct_quotient(&self, p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
        check_tol(tol)?;
        let RatioParams { theta, omega, x } = *p;
        let inner_tol = 0.25 * tol;
        let num = kummer_eval(theta - 1.0, omega, x, inner_tol, self.max_terms)?;
        let den = kummer_eval(theta, omega, x, inner_tol, self.max_terms)?;
        let value = num.scaled.sign * den.scaled.sign * (num.scaled.ln_abs - den.scaled.ln_abs).exp();
        let est_error = value.abs() * (num.rel_err + den.rel_err);
        if !(est_error <= tol * value.abs()) {
            return Err(Error::NonConvergence {
                routine: RatioMethod::DirectQuotient.name(),
                terms_used: num.terms + den.terms,
                est_error,
            });
        }
        Ok(RatioEvaluation {
            value,
            method: RatioMethod::DirectQuotient,
            terms_used: num.terms + den.terms,
            est_error,
        })
    }
}

/// Outside the radius of convergence the increments stop shrinking: compare
/// the largest of the last `W` increments with the largest `W` around the
/// midpoint of the history.
fn not_decaying(history: &[f64]) -> bool {
    const W: usize = 16;
    let n = history.len();
    if n < 4 * W || !n.is_multiple_of(W) {
        return false;
    }
    let window_max = |r: std::ops::Range<usize>| history[r].iter().copied().fold(0.0, f64::max);
    let recent = window_max(n - W..n);
    let mid = window_max(n / 2 - W..n / 2);
    recent >= mid
}

/// Relative size of the exponentially small contributions that the large-x
/// expansion drops, summed over numerator and denominator.
fn recessive_share(theta: f64, omega: f64, x: f64) -> f64 {
    let part = |t: f64| match (signed_ln_gamma(t), signed_ln_gamma(omega - t)) {
        (Some((_, lg_t)), Some((_, lg_diff))) => (lg_t - lg_diff + (omega - 2.0 * t) * x.ln() - x).exp(),
        _ => 0.0,
    };
    part(theta - 1.0) + part(theta)
}

/// Dispatcher with the default kernel configuration.
pub fn ratio(p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
    RatioKernel::default().ratio(p, tol)
}

pub fn ratio_small_x(p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
    RatioKernel::default().ratio_small_x(p, tol)
}

pub fn ratio_large_x(p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
    RatioKernel::default().ratio_large_x(p, tol)
}

pub fn ratio_continued_fraction(p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
    RatioKernel::default().ratio_continued_fraction(p, tol)
}

pub fn ratio_direct_quotient(p: &RatioParams, tol: f64) -> Result<RatioEvaluation> {
    RatioKernel::default().ratio_direct_quotient(p, tol)
}

/// Naive quotient of two unscaled Kummer sums; overflows to NaN for large x.
pub fn ratio_unscaled_quotient(p: &RatioParams, max_terms: usize) -> f64 {
    use crate::specialfn::kummer::kummer_m_unscaled;
    kummer_m_unscaled(p.theta - 1.0, p.omega, p.x, max_terms) / kummer_m_unscaled(p.theta, p.omega, p.x, max_terms)
}
