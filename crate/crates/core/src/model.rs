//! Model and utility parameters, the derived closed-form constants and the
//! scaled coordinates `z = Λ S^{−2β}`, `τ = a²β²Λ(T − t)`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Modified CEV dynamics `dS/S = (α + c a² S^{2β}) dt + a S^β dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEVParams {
    pub a: f64,
    pub beta: f64,
    pub c: f64,
    pub alpha: f64,
    pub r: f64,
}

impl MCEVParams {
    pub fn new(a: f64, beta: f64, c: f64, alpha: f64, r: f64) -> Result<Self> {
        let m = Self { a, beta, c, alpha, r };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.a, self.beta, self.c, self.alpha, self.r];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain(format!("model parameters must be finite: {self:?}")));
        }
        if !(self.a > 0.0) {
            return Err(Error::domain(format!("a must be > 0, got {}", self.a)));
        }
        if self.beta == 0.0 {
            return Err(Error::domain("beta must be nonzero"));
        }
        if self.c < 0.0 {
            return Err(Error::domain(format!("c must be >= 0, got {}", self.c)));
        }
        if self.r < 0.0 {
            return Err(Error::domain(format!("r must be >= 0, got {}", self.r)));
        }
        Ok(())
    }

    /// Drift coefficient `S(α + c a² S^{2β})`.
    pub fn drift(&self, s: f64) -> f64 {
        s * (self.alpha + self.c * self.a * self.a * s.powf(2.0 * self.beta))
    }

    /// Diffusion coefficient `a S^{β+1}`.
    pub fn diffusion(&self, s: f64) -> f64 {
        self.a * s.powf(self.beta + 1.0)
    }
}

/// Power utility `U(x) = x^γ/γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityParams {
    pub gamma: f64,
    /// `1/(1−γ)`
    pub delta: f64,
}

impl UtilityParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || !(gamma < 1.0) || gamma == 0.0 {
            return Err(Error::domain(format!("gamma must satisfy gamma < 1, gamma != 0; got {gamma}")));
        }
        Ok(Self {
            gamma,
            delta: 1.0 / (1.0 - gamma),
        })
    }

    pub fn utility(&self, x: f64) -> f64 {
        x.powf(self.gamma) / self.gamma
    }

    /// Inverse of [`UtilityParams::utility`].
    pub fn inverse_utility(&self, u: f64) -> f64 {
        (self.gamma * u).powf(1.0 / self.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub delta: f64,
    /// Λ
    #[serde(rename = "Lambda")]
    pub space_scale: f64,
    pub lambda: f64,
    pub eta: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    /// R, the exponential rate in τ
    #[serde(rename = "R")]
    pub exp_rate: f64,
    pub theta: f64,
    pub omega: f64,
}

fn space_scale(m: &MCEVParams, u: &UtilityParams) -> Result<f64> {
    let rad = m.alpha * m.alpha - u.gamma * m.r * m.r;
    if !(rad > 0.0) {
        return Err(Error::domain(format!(
            "Lambda undefined: alpha^2 - gamma r^2 = {rad} must be > 0"
        )));
    }
    Ok(u.delta.sqrt() * rad.sqrt() / (m.a * m.a * m.beta.abs()))
}

/// Constants of the Green function and of the closed-form `f`.
///
/// The zero-order coefficient of the reduced PDE is
/// `δ(δ−1)/(2a²)·[(α−r)S^{−β} + c a² S^β]²`, which gives
/// `η² = (λ+½)² + δ(1−δ)c²/(4β²)` and
/// `R = γδr/(a²β²Λ) − 2Qλ − δ(1−δ)(α−r)c/(Λa²β²)`.
pub fn derive_constants(m: &MCEVParams, u: &UtilityParams) -> Result<DerivedConstants> {
    m.validate()?;
    let d = u.delta;
    let big_l = space_scale(m, u)?;
    let (a2, b) = (m.a * m.a, m.beta);
    let lambda = -0.5 - (0.5 - d * m.c) / (2.0 * b);
    let q = d * (m.alpha - u.gamma * m.r) / (big_l * b * a2);
    let rad = (lambda + 0.5).powi(2) + d * (1.0 - d) * m.c * m.c / (4.0 * b * b);
    if rad < 0.0 {
        return Err(Error::domain(format!("eta radicand is negative: {rad}")));
    }
    let eta = rad.sqrt();
    let exp_rate = u.gamma * d * m.r / (a2 * b * b * big_l)
        - 2.0 * q * lambda
        - d * (1.0 - d) * (m.alpha - m.r) * m.c / (big_l * a2 * b * b);
    Ok(DerivedConstants {
        delta: d,
        space_scale: big_l,
        lambda,
        eta,
        q,
        exp_rate,
        theta: 0.5 + eta - lambda,
        omega: 1.0 + 2.0 * eta,
    })
}

/// `(η, R)` obtained when the zero-order coefficient is taken as
/// `[(α−r)S^{−β} + cS^β]²` and the rate term as `rδ`. Kept for comparison
/// only; with these values `f` does not solve the pricing PDE.
pub fn alternative_eta_and_rate(m: &MCEVParams, u: &UtilityParams) -> Result<(f64, f64)> {
    let k = derive_constants(m, u)?;
    let d = u.delta;
    let (a2, b) = (m.a * m.a, m.beta);
    let rad = (k.lambda + 0.5).powi(2) + d * (1.0 - d) * m.c * m.c / (4.0 * a2 * a2 * b * b);
    if rad < 0.0 {
        return Err(Error::domain(format!("eta radicand is negative: {rad}")));
    }
    let r_alt = m.r * d / (a2 * b * b * k.space_scale)
        - 2.0 * k.q * k.lambda
        - d * (1.0 - d) * (m.alpha - m.r) * m.c / (k.space_scale * a2 * a2 * b * b);
    Ok((rad.sqrt(), r_alt))
}

/// `z = Λ S^{−2β}`.
pub fn to_z(s: f64, d: &DerivedConstants, beta: f64) -> f64 {
    d.space_scale * s.powf(-2.0 * beta)
}

/// Inverse of [`to_z`]: `S = (Λ/z)^{1/(2β)}`.
pub fn from_z(z: f64, d: &DerivedConstants, beta: f64) -> f64 {
    (d.space_scale / z).powf(1.0 / (2.0 * beta))
}

/// `τ = a²β²Λ(T − t)`.
pub fn to_tau(t: f64, horizon: f64, m: &MCEVParams, d: &DerivedConstants) -> Result<f64> {
    if !(t <= horizon) {
        return Err(Error::domain(format!("t = {t} must not exceed T = {horizon}")));
    }
    Ok(m.a * m.a * m.beta * m.beta * d.space_scale * (horizon - t))
}

/// `A(τ)`, `B(τ)`, `D(τ)` and `ln D(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFunctions {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub ln_d: f64,
}

/// `A = 1/(2 sinh τ (cosh τ + Q sinh τ))`, `B = (Q²−1)/(2(coth τ + Q))`,
/// `D = (cosh τ + Q sinh τ)²`.
pub fn time_functions(tau: f64, q: f64) -> Result<TimeFunctions> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau must be finite and > 0, got {tau}")));
    }
    // cosh τ + Q sinh τ = ((1+Q)e^τ + (1−Q)e^{−τ})/2
    let ln_k = if q > -1.0 {
        tau + ((1.0 + q) + (1.0 - q) * (-2.0 * tau).exp()).ln() - std::f64::consts::LN_2
    } else {
        let k = tau.cosh() + q * tau.sinh();
        if !(k > 0.0) {
            return Err(Error::Degenerate(format!(
                "coth(tau) + Q vanishes or changes sign: tau = {tau}, Q = {q}"
            )));
        }
        k.ln()
    };
    let coth_plus_q = 1.0 / tau.tanh() + q;
    if coth_plus_q == 0.0 {
        return Err(Error::Degenerate(format!("coth(tau) + Q = 0 at tau = {tau}, Q = {q}")));
    }
    let ln_a = -(std::f64::consts::LN_2 + ln_sinh(tau) + ln_k);
    Ok(TimeFunctions {
        a: ln_a.exp(),
        b: (q * q - 1.0) / (2.0 * coth_plus_q),
        d: (2.0 * ln_k).exp(),
        ln_d: 2.0 * ln_k,
    })
}

pub(crate) fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Flat JSON document `{a, beta, c, alpha, r, gamma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: f64,
    pub beta: f64,
    pub c: f64,
    pub alpha: f64,
    pub r: f64,
    pub gamma: f64,
}

impl ModelConfig {
    pub fn params(&self) -> Result<(MCEVParams, UtilityParams)> {
        Ok((
            MCEVParams::new(self.a, self.beta, self.c, self.alpha, self.r)?,
            UtilityParams::new(self.gamma)?,
        ))
    }
}
