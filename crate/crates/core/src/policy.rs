//! Green function, value function and optimal position for the M-CEV model
//! and its square-root (CIR) specialisation.

use serde::{Deserialize, Serialize};

use crate::model::{
    derive_constants, ln_sinh, time_functions, to_tau, to_z, DerivedConstants, MCEVParams,
    TimeFunctions, UtilityParams,
};
use crate::specialfn::{ln_bessel_i_scaled, ln_kummer_m_scaled, ln_whittaker_m, log_gamma, RatioKernel, RatioParams};
use crate::{Error, Result};

/// Positions at `τ = 0` are evaluated at this τ instead.
pub const TAU_FLOOR: f64 = 1e-8;

/// Relative tolerance handed to the special-function routines.
pub const SPECIAL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyInput {
    /// wealth
    pub x: f64,
    /// asset price
    pub s: f64,
    pub t: f64,
    /// horizon `T`
    pub horizon: f64,
}

impl PolicyInput {
    pub fn new(x: f64, s: f64, t: f64, horizon: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain(format!("wealth must be finite and > 0, got {x}")));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("price must be finite and > 0, got {s}")));
        }
        if !t.is_finite() || !horizon.is_finite() || t > horizon {
            return Err(Error::domain(format!("need finite t <= T, got t = {t}, T = {horizon}")));
        }
        Ok(Self { x, s, t, horizon })
    }
}

/// Square-root process `dS = κ(S̄ − S)dt + a√S dW`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CIRParams {
    pub kappa: f64,
    pub s_bar: f64,
    pub a: f64,
}

impl CIRParams {
    pub fn new(kappa: f64, s_bar: f64, a: f64) -> Result<Self> {
        for (name, v) in [("kappa", kappa), ("s_bar", s_bar), ("a", a)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(Self { kappa, s_bar, a })
    }

    /// `2κS̄ > a²`: the process stays strictly positive.
    pub fn feller(&self) -> bool {
        2.0 * self.kappa * self.s_bar > self.a * self.a
    }

    /// `α = −κ`, `c = κS̄/a²`, `β = −½`, `r = 0`.
    pub fn to_mcev(&self) -> MCEVParams {
        MCEVParams {
            a: self.a,
            beta: -0.5,
            c: self.kappa * self.s_bar / (self.a * self.a),
            alpha: -self.kappa,
            r: 0.0,
        }
    }
}

/// Flat JSON document `{kappa, s_bar, a, gamma}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirConfig {
    pub kappa: f64,
    pub s_bar: f64,
    pub a: f64,
    pub gamma: f64,
}

impl CirConfig {
    pub fn params(&self) -> Result<(CIRParams, UtilityParams)> {
        Ok((
            CIRParams::new(self.kappa, self.s_bar, self.a)?,
            UtilityParams::new(self.gamma)?,
        ))
    }
}

/// `ln F_G(z, τ; ξ)`.
pub fn ln_green_function(z: f64, tau: f64, xi: f64, d: &DerivedConstants) -> Result<f64> {
    if !(z > 0.0 && tau > 0.0 && xi > 0.0) {
        return Err(Error::domain(format!(
            "Green function needs z, tau, xi > 0; got ({z}, {tau}, {xi})"
        )));
    }
    let sh = tau.sinh();
    let half = (0.5 * tau).sinh();
    let u = (z * xi).sqrt() / sh;
    let gap = (z.sqrt() - xi.sqrt()).powi(2) + 2.0 * (z + xi) * half * half;
    let ln = -std::f64::consts::LN_2 + d.exp_rate * tau + 0.5 * d.q * (z - xi) - gap / (2.0 * sh)
        + (d.lambda + 0.5) * (z.ln() - xi.ln())
        + ln_bessel_i_scaled(2.0 * d.eta, u)?
        - ln_sinh(tau);
    if ln.is_nan() {
        return Err(Error::Range(format!("Green function undefined at ({z}, {tau}, {xi})")));
    }
    Ok(ln)
}

/// `F_G(z, τ; ξ) = ½ exp{Rτ + Q(z−ξ)/2 − (z+ξ)coth τ/2} (z/ξ)^{λ+½} I_{2η}(√(zξ)/sinh τ)/sinh τ`.
pub fn green_function(z: f64, tau: f64, xi: f64, d: &DerivedConstants) -> Result<f64> {
    let v = ln_green_function(z, tau, xi, d)?.exp();
    if !v.is_finite() {
        return Err(Error::Range(format!("Green function overflows at ({z}, {tau}, {xi})")));
    }
    Ok(v)
}

/// Model, utility and derived constants bundled for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Policy {
    pub model: MCEVParams,
    pub utility: UtilityParams,
    pub constants: DerivedConstants,
    pub kernel: RatioKernel,
}

impl Policy {
    pub fn new(model: MCEVParams, utility: UtilityParams) -> Result<Self> {
        Ok(Self {
            model,
            utility,
            constants: derive_constants(&model, &utility)?,
            kernel: RatioKernel::default(),
        })
    }

    pub fn with_kernel(mut self, kernel: RatioKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn tau(&self, t: f64, horizon: f64) -> Result<f64> {
        to_tau(t, horizon, &self.model, &self.constants)
    }

    /// `ln f(S, t)` in the scaled variables. `τ = 0` gives 0.
    pub fn ln_value_multiplier_at(&self, z: f64, tau: f64) -> Result<f64> {
        if tau == 0.0 {
            return Ok(0.0);
        }
        let k = &self.constants;
        if !(k.theta > 0.0) {
            return Err(Error::domain(format!(
                "closed form needs theta = 1/2 + eta - lambda > 0, got {}",
                k.theta
            )));
        }
        let tf = time_functions(tau, k.q)?;
        let y = z * tf.a;
        let m = ln_kummer_m_scaled(k.theta, k.omega, y, SPECIAL_TOL)?;
        if m.sign <= 0.0 {
            return Err(Error::Range(format!("Kummer factor is not positive at y = {y}")));
        }
        Ok(k.exp_rate * tau + z * tf.b + k.lambda * tf.ln_d + log_gamma(k.theta)? - log_gamma(k.omega)?
            + (k.omega - k.theta) * y.ln()
            + m.ln_abs)
    }

    pub fn ln_value_multiplier(&self, s: f64, t: f64, horizon: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::domain(format!("price must be > 0, got {s}")));
        }
        let tau = self.tau(t, horizon)?;
        self.ln_value_multiplier_at(to_z(s, &self.constants, self.model.beta), tau)
    }

    pub fn value_multiplier(&self, s: f64, t: f64, horizon: f64) -> Result<f64> {
        Ok(self.ln_value_multiplier(s, t, horizon)?.exp())
    }

    /// `J = X^γ/γ · f^{1/δ}`.
    pub fn value_function(&self, inp: &PolicyInput) -> Result<f64> {
        let ln_f = self.ln_value_multiplier(inp.s, inp.t, inp.horizon)?;
        Ok(self.utility.utility(inp.x) * (ln_f / self.constants.delta).exp())
    }

    /// `δ(α − r + c a² S^{2β})/(a² S^{2β+1})`, the position per unit wealth
    /// of a myopic investor.
    pub fn myopic_fraction(&self, s: f64) -> f64 {
        let m = &self.model;
        let a2 = m.a * m.a;
        let s2b = s.powf(2.0 * m.beta);
        self.constants.delta * (m.alpha - m.r + m.c * a2 * s2b) / (a2 * s2b * s)
    }

    /// `π* = (X/S)[(δ(α−r)/a² − 2βΛB)/S^{2β} + δc + 2β(θ−ω) M(θ−1,ω,y)/M(θ,ω,y)]`
    /// with `y = ΛA(τ)S^{−2β}`.
    pub fn optimal_position(&self, inp: &PolicyInput) -> Result<f64> {
        self.at_time(inp.t, inp.horizon)?.position(inp.x, inp.s)
    }

    /// Time-dependent part of [`Policy::optimal_position`], shared by every
    /// `(X, S)` at the same `t`.
    pub fn at_time(&self, t: f64, horizon: f64) -> Result<PositionAtTime<'_>> {
        let tau = self.tau(t, horizon)?.max(TAU_FLOOR);
        Ok(PositionAtTime {
            policy: self,
            tf: time_functions(tau, self.constants.q)?,
        })
    }

    /// Same position from Whittaker values:
    /// `X(myopic + [B + (λ+η+½)/z · M_{λ+1,η}(Az)/M_{λ,η}(Az)] dz/dS)`.
    pub fn optimal_position_whittaker(&self, inp: &PolicyInput) -> Result<f64> {
        let (m, k) = (&self.model, &self.constants);
        let tau = self.tau(inp.t, inp.horizon)?.max(TAU_FLOOR);
        let tf = time_functions(tau, k.q)?;
        let z = to_z(inp.s, k, m.beta);
        let y = tf.a * z;
        let upper = ln_whittaker_m(k.lambda + 1.0, k.eta, y, SPECIAL_TOL)?;
        let lower = ln_whittaker_m(k.lambda, k.eta, y, SPECIAL_TOL)?;
        let w = upper.sign * lower.sign * (upper.ln_abs - lower.ln_abs).exp();
        let dz_ds = -2.0 * m.beta * z / inp.s;
        let hedge = (tf.b + (k.lambda + k.eta + 0.5) / z * w) * dz_ds;
        Ok(inp.x * (self.myopic_fraction(inp.s) + hedge))
    }
}

pub struct PositionAtTime<'a> {
    policy: &'a Policy,
    tf: TimeFunctions,
}

impl PositionAtTime<'_> {
    pub fn position(&self, x: f64, s: f64) -> Result<f64> {
        let (m, k) = (&self.policy.model, &self.policy.constants);
        let s2b = s.powf(2.0 * m.beta);
        let y = k.space_scale * self.tf.a / s2b;
        let r = self
            .policy
            .kernel
            .ratio(&RatioParams::new(k.theta, k.omega, y)?, SPECIAL_TOL)?
            .value;
        let bracket = (k.delta * (m.alpha - m.r) / (m.a * m.a) - 2.0 * m.beta * k.space_scale * self.tf.b) / s2b
            + k.delta * m.c
            + 2.0 * m.beta * (k.theta - k.omega) * r;
        Ok(x / s * bracket)
    }
}

/// `f(S, t)`; equals 1 at `t = T`.
pub fn value_multiplier(s: f64, t: f64, horizon: f64, m: &MCEVParams, u: &UtilityParams) -> Result<f64> {
    Policy::new(*m, *u)?.value_multiplier(s, t, horizon)
}

pub fn value_function(inp: &PolicyInput, m: &MCEVParams, u: &UtilityParams) -> Result<f64> {
    Policy::new(*m, *u)?.value_function(inp)
}

pub fn optimal_position(inp: &PolicyInput, m: &MCEVParams, u: &UtilityParams) -> Result<f64> {
    Policy::new(*m, *u)?.optimal_position(inp)
}

pub fn optimal_position_whittaker(inp: &PolicyInput, m: &MCEVParams, u: &UtilityParams) -> Result<f64> {
    Policy::new(*m, *u)?.optimal_position_whittaker(inp)
}

/// Constants of the substituted model. `λ` reduces to `−δκS̄/a²`.
pub fn cir_constants(c: &CIRParams, u: &UtilityParams) -> Result<DerivedConstants> {
    derive_constants(&c.to_mcev(), u)
}

/// `(η, R)` of the square-root model with `η² = (λ+½)² + δ(1−δ)κ²S̄²/a⁸` and
/// `R = 2√δ κS̄/a² (δ + (1−δ)/a²)`. These are the square-root reduction of
/// [`crate::model::alternative_eta_and_rate`]; kept for comparison only.
pub fn cir_alternative_eta_and_rate(c: &CIRParams, u: &UtilityParams) -> (f64, f64) {
    let d = u.delta;
    let a2 = c.a * c.a;
    let lambda = -d * c.kappa * c.s_bar / a2;
    let eta = ((lambda + 0.5).powi(2) + d * (1.0 - d) * (c.kappa * c.s_bar).powi(2) / a2.powi(4)).sqrt();
    let rate = 2.0 * d.sqrt() * c.kappa * c.s_bar / a2 * (d + (1.0 - d) / a2);
    (eta, rate)
}

/// `π* = (X/S)(δκ(S̄−S)/a² + ΛS·B(τ) + (λ+η+½) M_{λ+1,η}(ΛSA)/M_{λ,η}(ΛSA))`
/// with `Λ = 2κ√δ/a²`, `Q = √δ`, `λ = −δκS̄/a²`.
pub fn cir_optimal_position_with(
    inp: &PolicyInput,
    c: &CIRParams,
    u: &UtilityParams,
    kernel: &RatioKernel,
) -> Result<f64> {
    let d = u.delta;
    let a2 = c.a * c.a;
    let big_l = 2.0 * c.kappa * d.sqrt() / a2;
    let lambda = -d * c.kappa * c.s_bar / a2;
    let eta = ((lambda + 0.5).powi(2) + d * (1.0 - d) * (c.kappa * c.s_bar / a2).powi(2)).sqrt();
    let (theta, omega) = (0.5 + eta - lambda, 1.0 + 2.0 * eta);
    let tau = (0.25 * a2 * big_l * (inp.horizon - inp.t)).max(TAU_FLOOR);
    let tf = time_functions(tau, d.sqrt())?;
    let y = big_l * inp.s * tf.a;
    let r = kernel.ratio(&RatioParams::new(theta, omega, y)?, SPECIAL_TOL)?.value;
    let bracket = d * c.kappa * (c.s_bar - inp.s) / a2 + big_l * inp.s * tf.b + (lambda + eta + 0.5) * r;
    Ok(inp.x / inp.s * bracket)
}

pub fn cir_optimal_position(inp: &PolicyInput, c: &CIRParams, u: &UtilityParams) -> Result<f64> {
    cir_optimal_position_with(inp, c, u, &RatioKernel::default())
}
