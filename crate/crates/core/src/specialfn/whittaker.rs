use crate::specialfn::kummer::{ln_kummer_m_scaled, SignedLog};
use crate::{Error, Result};

fn kummer_params(lam: f64, eta: f64) -> (f64, f64) {
    (0.5 + eta - lam, 1.0 + 2.0 * eta)
}

/// Whittaker function `M_{λ,η}(x) = e^{−x/2} x^{1/2+η} M(1/2+η−λ, 1+2η, x)`.
pub fn whittaker_m(lam: f64, eta: f64, x: f64, tol: f64) -> Result<f64> {
    let ln = ln_whittaker_m(lam, eta, x, tol)?;
    let v = ln.value();
    if !v.is_finite() {
        return Err(Error::Range(format!("M_{{{lam},{eta}}}({x}) overflows binary64")));
    }
    Ok(v)
}

/// `(sign, ln|M_{λ,η}(x)|)`.
pub fn ln_whittaker_m(lam: f64, eta: f64, x: f64, tol: f64) -> Result<SignedLog> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("Whittaker argument must be > 0, got {x}")));
    }
    let (theta, omega) = kummer_params(lam, eta);
    let k = ln_kummer_m_scaled(theta, omega, x, tol)?;
    Ok(SignedLog {
        sign: k.sign,
        ln_abs: 0.5 * x + (0.5 + eta) * x.ln() + k.ln_abs,
    })
}
