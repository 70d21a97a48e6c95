use std::f64::consts::PI;

use crate::specialfn::gamma::ln_gamma_pos;
use crate::specialfn::DEFAULT_MAX_TERMS;
use crate::{Error, Result};

const HANKEL_MIN_X: f64 = 30.0;
const RESCALE: f64 = 1e200;

fn check(order: f64, x: f64) -> Result<()> {
    if !(order >= 0.0) || !order.is_finite() {
        return Err(Error::domain(format!("Bessel order must be >= 0, got {order}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("Bessel argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// Modified Bessel function of the first kind `I_ν(x)` for real `ν >= 0`.
///
/// Fails with a range error once `I_ν(x)` overflows; [`bessel_i_scaled`]
/// and [`ln_bessel_i_scaled`] stay finite.
pub fn bessel_i(order: f64, x: f64) -> Result<f64> {
    let ln = ln_bessel_i_scaled(order, x)? + x;
    let v = ln.exp();
    if !v.is_finite() {
        return Err(Error::Range(format!(
            "I_{order}({x}) overflows binary64; use bessel_i_scaled"
        )));
    }
    Ok(v)
}

/// `e^{−x} I_ν(x)`.
pub fn bessel_i_scaled(order: f64, x: f64) -> Result<f64> {
    Ok(ln_bessel_i_scaled(order, x)?.exp())
}

/// `ln(e^{−x} I_ν(x))`; `−∞` at `x = 0` for `ν > 0`.
pub fn ln_bessel_i_scaled(order: f64, x: f64) -> Result<f64> {
    check(order, x)?;
    if x == 0.0 {
        return Ok(if order == 0.0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if x >= HANKEL_MIN_X {
        if let Some(v) = hankel(order, x) {
            return Ok(v);
        }
    }
    series(order, x)
}

/// Ascending series `(x/2)^ν / Γ(ν+1) Σ (x²/4)^k / (k! (ν+1)_k)`. All terms
/// are positive.
fn series(order: f64, x: f64) -> Result<f64> {
    let q = 0.25 * x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut ln_scale = 0.0;
    for k in 1..DEFAULT_MAX_TERMS {
        let kf = k as f64;
        term *= q / (kf * (order + kf));
        sum += term;
        if sum > RESCALE {
            sum /= RESCALE;
            term /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        if kf > 0.5 * x && term <= 0.25 * f64::EPSILON * sum {
            return Ok(order * (0.5 * x).ln() - ln_gamma_pos(order + 1.0) + sum.ln() + ln_scale - x);
        }
    }
    Err(Error::NonConvergence {
        routine: "Bessel I power series",
        terms_used: DEFAULT_MAX_TERMS,
        est_error: term / sum,
    })
}

/// Large-argument expansion `e^x / √(2πx) Σ (−1)^k a_k(ν) / x^k`, accepted
/// only when the smallest term is below binary64 resolution.
fn hankel(order: f64, x: f64) -> Option<f64> {
    let mu = 4.0 * order * order;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = -term * (mu - odd * odd) / (8.0 * kf * x);
        if next.abs() >= term.abs() && next != 0.0 {
            return None;
        }
        sum += next;
        term = next;
        if term.abs() <= 0.25 * f64::EPSILON * sum.abs() {
            return Some(sum.ln() - 0.5 * (2.0 * PI * x).ln());
        }
    }
    None
}
