use std::f64::consts::PI;

use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural logarithm of the Gamma function for `x > 0`.
///
/// Lanczos on `[0.5, 10)`, Stirling with six correction terms above,
/// reflection below `0.5`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // Γ(x)Γ(1−x) = π / sin(πx), sin(πx) > 0 on (0, 0.5)
        return (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    if x >= 10.0 {
        return stirling(x);
    }
    let xm = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm + i as f64);
    }
    let t = xm + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (xm + 0.5) * t.ln() - t + acc.ln()
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // B_{2k} / (2k(2k−1)) for k = 1..6
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0))))));
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series
}

/// `(sign Γ(x), ln|Γ(x)|)` for any real `x` that is not a pole.
///
/// Returns `None` at the poles `0, −1, −2, …`, where `1/Γ` vanishes.
pub(crate) fn signed_ln_gamma(x: f64) -> Option<(f64, f64)> {
    if x > 0.0 {
        return Some((1.0, ln_gamma_pos(x)));
    }
    if x == x.floor() {
        return None;
    }
    let s = (PI * x).sin();
    let ln = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    Some((s.signum(), ln))
}

/// True for `0, −1, −2, …`.
pub(crate) fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}
