use crate::specialfn::gamma::{is_nonpositive_integer, signed_ln_gamma};
use crate::{Error, Result};

/// Below this argument the large-x expansion is never attempted.
const ASYMPTOTIC_MIN_X: f64 = 25.0;
const RESCALE: f64 = 1e200;

/// A real number stored as `sign · exp(ln_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub fn value(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KummerEval {
    /// `e^{−x} M(θ, ω, x)` in log form.
    pub scaled: SignedLog,
    pub terms: usize,
    pub rel_err: f64,
}

pub(crate) fn check_omega(omega: f64) -> Result<()> {
    if !omega.is_finite() || is_nonpositive_integer(omega) {
        return Err(Error::domain(format!(
            "second Kummer parameter must not be 0 or a negative integer, got {omega}"
        )));
    }
    Ok(())
}

/// First-kind confluent hypergeometric function
/// `M(θ, ω, x) = Σ (θ)_s x^s / ((ω)_s s!)`.
///
/// Returns a range error when the value does not fit in binary64; use
/// [`ln_kummer_m`] or [`ln_kummer_m_scaled`] there.
pub fn kummer_m(theta: f64, omega: f64, x: f64, tol: f64) -> Result<f64> {
    let ln = ln_kummer_m(theta, omega, x, tol)?;
    let v = ln.value();
    if !v.is_finite() {
        return Err(Error::Range(format!(
            "M({theta}, {omega}, {x}) overflows binary64 (ln|M| = {})",
            ln.ln_abs
        )));
    }
    Ok(v)
}

/// `(sign, ln|M(θ, ω, x)|)`.
pub fn ln_kummer_m(theta: f64, omega: f64, x: f64, tol: f64) -> Result<SignedLog> {
    let s = ln_kummer_m_scaled(theta, omega, x, tol)?;
    Ok(SignedLog { sign: s.sign, ln_abs: s.ln_abs + x })
}

/// `(sign, ln|e^{−x} M(θ, ω, x)|)`; the exponential factor is removed
/// analytically in the large-x branch so no cancellation is incurred.
pub fn ln_kummer_m_scaled(theta: f64, omega: f64, x: f64, tol: f64) -> Result<SignedLog> {
    Ok(kummer_eval(theta, omega, x, tol, crate::specialfn::DEFAULT_MAX_TERMS)?.scaled)
}

pub(crate) fn kummer_eval(theta: f64, omega: f64, x: f64, tol: f64, max_terms: usize) -> Result<KummerEval> {
    check_omega(omega)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !x.is_finite() || !theta.is_finite() {
        return Err(Error::domain("non-finite Kummer argument"));
    }
    if x == 0.0 || theta == 0.0 {
        return Ok(KummerEval {
            scaled: SignedLog { sign: 1.0, ln_abs: -x },
            terms: 1,
            rel_err: 0.0,
        });
    }
    if x < 0.0 {
        // Kummer transformation: e^{−x} M(θ, ω, x) = M(ω − θ, ω, −x)
        let t = kummer_eval(omega - theta, omega, -x, tol, max_terms)?;
        return Ok(KummerEval {
            scaled: SignedLog { sign: t.scaled.sign, ln_abs: t.scaled.ln_abs - x },
            ..t
        });
    }
    if x >= ASYMPTOTIC_MIN_X && !is_nonpositive_integer(theta) {
        if let Some(eval) = asymptotic(theta, omega, x, tol, max_terms) {
            return Ok(eval);
        }
    }
    power_series(theta, omega, x, tol, max_terms)
}

/// Power series summed with a running exponent so that terms near `e^x`
/// never overflow. All terms past `s > −θ` share one sign, so cancellation is
/// confined to the first few terms.
fn power_series(theta: f64, omega: f64, x: f64, tol: f64, max_terms: usize) -> Result<KummerEval> {
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut abs_sum = 1.0_f64;
    let mut ln_scale = 0.0_f64;
    let mut small_streak = 0;
    for s in 0..max_terms {
        let sf = s as f64;
        term *= (theta + sf) * x / ((omega + sf) * (sf + 1.0));
        sum += term;
        abs_sum += term.abs();
        if term == 0.0 {
            // terminating series (θ a non-positive integer)
            return Ok(finish_series(sum, abs_sum, ln_scale, x, s + 2, 0.0));
        }
        if sum.abs() > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            abs_sum /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        let next_ratio = ((theta + sf + 1.0) * x / ((omega + sf + 1.0) * (sf + 2.0))).abs();
        if sf + 1.0 > x && next_ratio < 1.0 {
            let tail = term.abs() * next_ratio / (1.0 - next_ratio);
            if tail <= 0.5 * tol * sum.abs() {
                small_streak += 1;
                if small_streak >= 2 {
                    return Ok(finish_series(sum, abs_sum, ln_scale, x, s + 2, tail / sum.abs()));
                }
            } else {
                small_streak = 0;
            }
        }
    }
    Err(Error::NonConvergence {
        routine: "kummer power series",
        terms_used: max_terms,
        est_error: (term / sum).abs(),
    })
}

fn finish_series(sum: f64, abs_sum: f64, ln_scale: f64, x: f64, terms: usize, tail: f64) -> KummerEval {
    let rounding = f64::EPSILON * (terms as f64).sqrt() * abs_sum / sum.abs();
    KummerEval {
        scaled: SignedLog {
            sign: sum.signum(),
            ln_abs: sum.abs().ln() + ln_scale - x,
        },
        terms,
        rel_err: tail + rounding,
    }
}

/// Large-x expansion
/// `M(θ, ω, x) ≈ Γ(ω)/Γ(θ) e^x x^{θ−ω} Σ (1−θ)_s (ω−θ)_s / s! x^{−s}`
/// with optimal truncation. Returns `None` when it cannot meet `tol`, including
/// the exponentially small recessive contribution it neglects.
fn asymptotic(theta: f64, omega: f64, x: f64, tol: f64, max_terms: usize) -> Option<KummerEval> {
    let (sg_omega, lg_omega) = signed_ln_gamma(omega)?;
    let (sg_theta, lg_theta) = signed_ln_gamma(theta)?;
    let recessive = match signed_ln_gamma(omega - theta) {
        Some((_, lg_diff)) => (lg_theta - lg_diff + (omega - 2.0 * theta) * x.ln() - x).exp(),
        None => 0.0,
    };
    if recessive > 0.1 * tol {
        return None;
    }
    let (sum, trunc, terms) = asymptotic_sum(|s| (s - theta) * (omega - theta + s - 1.0) / s, x, tol, max_terms)?;
    let rel_err = trunc / sum.abs() + recessive;
    if rel_err > tol {
        return None;
    }
    Some(KummerEval {
        scaled: SignedLog {
            sign: sg_omega * sg_theta * sum.signum(),
            ln_abs: lg_omega - lg_theta + (theta - omega) * x.ln() + sum.abs().ln(),
        },
        terms,
        rel_err,
    })
}

/// Optimally truncated `Σ t_s`, `t_0 = 1`, `t_s = t_{s−1} · step(s) / x`.
/// Returns `(sum, first omitted term magnitude, terms used)`.
fn asymptotic_sum(step: impl Fn(f64) -> f64, x: f64, tol: f64, max_terms: usize) -> Option<(f64, f64, usize)> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 1..max_terms {
        let next = term * step(s as f64) / x;
        if next == 0.0 {
            return Some((sum, 0.0, s));
        }
        if next.abs() >= term.abs() {
            return Some((sum - term, term.abs(), s));
        }
        sum += next;
        term = next;
        if term.abs() <= 0.01 * tol * sum.abs() {
            return Some((sum, term.abs(), s + 1));
        }
    }
    None
}

/// Plain left-to-right summation with no scaling, as a naive library
/// would do. Overflows to `inf` once the terms exceed binary64.
pub fn kummer_m_unscaled(theta: f64, omega: f64, x: f64, max_terms: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 0..max_terms {
        let sf = s as f64;
        term *= (theta + sf) * x / ((omega + sf) * (sf + 1.0));
        sum += term;
        if !sum.is_finite() || (sf > x && term.abs() <= f64::EPSILON * sum.abs()) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn origin_is_one() {
        assert_eq!(kummer_m(1.5, 3.0, 0.0, 1e-14).unwrap(), 1.0);
    }

    #[test]
    fn exp_series_when_parameters_equal() {
        let v = kummer_m(1.0, 1.0, 1.0, 1e-15).unwrap();
        assert!((v - E).abs() < 4e-16 * E);
        let v = kummer_m(2.5, 2.5, 30.0, 1e-14).unwrap();
        assert!((v / 30f64.exp() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn matches_extended_precision_series() {
        // 60-digit summation, data/gen_oracle.py --check
        let want = 1_551.648_527_653_713_411;
        let got = kummer_m(1.2, 2.5, 10.0, 1e-14).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "{got}");
    }

    #[test]
    fn log_form_survives_large_argument() {
        let theta = 0.5 + 2.12 - 1.2;
        let want = 778.129_195_634_850_065_2;
        let got = ln_kummer_m(theta, 5.24, 800.0, 1e-14).unwrap();
        assert_eq!(got.sign, 1.0);
        assert!((got.ln_abs - want).abs() < 1e-12 * want, "{}", got.ln_abs);
        assert!(matches!(kummer_m(theta, 5.24, 800.0, 1e-14), Err(Error::Range(_))));
        assert!(kummer_m_unscaled(theta, 5.24, 800.0, 10_000).is_infinite());
    }

    #[test]
    fn branches_agree_near_switch() {
        for &(t, w) in &[(1.3, 2.2), (4.0, 1.5), (0.7, 6.0)] {
            let x = 60.0;
            let a = asymptotic(t, w, x, 1e-13, 10_000).expect("asymptotic should succeed");
            let p = power_series(t, w, x, 1e-13, 10_000).unwrap();
            assert!((a.scaled.ln_abs - p.scaled.ln_abs).abs() < 1e-12, "({t},{w})");
        }
    }

    #[test]
    fn polynomial_case() {
        // M(−2, ω, x) = 1 − 2x/ω + x²/(ω(ω+1))
        let (w, x) = (1.5, 3.0);
        let want = 1.0 - 2.0 * x / w + x * x / (w * (w + 1.0));
        let got = kummer_m(-2.0, w, x, 1e-14).unwrap();
        assert!((got - want).abs() < 1e-14);
        let far = kummer_m(-2.0, w, 300.0, 1e-14).unwrap();
        assert!((far - (1.0 - 600.0 / w + 90_000.0 / (w * (w + 1.0)))).abs() < 1e-9);
    }

    #[test]
    fn negative_argument_by_transformation() {
        // M(1, 2, −x) = (1 − e^{−x}) / x
        let x = 3.0;
        let got = kummer_m(1.0, 2.0, -x, 1e-14).unwrap();
        assert!((got - (1.0 - (-x).exp()) / x).abs() < 1e-15);
    }

    #[test]
    fn rejects_pole_and_bad_tolerance() {
        assert!(matches!(kummer_m(1.0, -2.0, 1.0, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(kummer_m(1.0, 0.0, 1.0, 1e-10), Err(Error::Domain(_))));
        assert!(matches!(kummer_m(1.0, 1.0, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn reports_cap_exhaustion() {
        let err = kummer_eval(1.0, 1.5, 20.0, 1e-14, 5).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { terms_used: 5, .. }));
    }
}
