use mcev_core::model::{MCEVParams, UtilityParams};
use mcev_core::policy::{green_function, CIRParams, Policy};

use super::quad::integrate_half_line;

/// Model used for the numerical study: `a=0.4, β=−0.4, c=0.8, α=0.045, r=0.04, γ=−4`.
pub fn study_policy() -> Policy {
    Policy::new(
        MCEVParams::new(0.4, -0.4, 0.8, 0.045, 0.04).unwrap(),
        UtilityParams::new(-4.0).unwrap(),
    )
    .unwrap()
}

/// Worst normalised residual of the pricing PDE over the grid
/// `S ∈ [50, 200]`, `T − t ∈ [0.1, 1]` by central differences.
pub fn worst_pde_residual(p: &Policy) -> f64 {
    let m = p.model;
    let (d, g) = (p.utility.delta, p.utility.gamma);
    let horizon = 1.0;
    let f = |s: f64, t: f64| p.value_multiplier(s, t, horizon).unwrap();
    let mut worst: f64 = 0.0;
    for &s in &[50.0, 75.0, 100.0, 125.0, 150.0, 200.0] {
        for &rem in &[0.1, 0.25, 0.5, 0.75, 1.0] {
            let t = horizon - rem;
            let hs = 1e-3 * s;
            let ht = 1e-4;
            let f0 = f(s, t);
            let f_t = (f(s, t + ht) - f(s, t - ht)) / (2.0 * ht);
            let (fp, fm) = (f(s + hs, t), f(s - hs, t));
            let f_s = (fp - fm) / (2.0 * hs);
            let f_ss = (fp - 2.0 * f0 + fm) / (hs * hs);
            let a2 = m.a * m.a;
            let terms = [
                f_t,
                0.5 * a2 * s.powf(2.0 * m.beta + 2.0) * f_ss,
                d * s * (m.alpha - g * m.r + m.c * a2 * s.powf(2.0 * m.beta)) * f_s,
                d * (d - 1.0) / (2.0 * a2)
                    * ((m.alpha - m.r) * s.powf(-m.beta) + m.c * a2 * s.powf(m.beta)).powi(2)
                    * f0,
                m.r * g * d * f0,
            ];
            let sum: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|v| v.abs()).sum();
            worst = worst.max(sum.abs() / scale);
        }
    }
    worst
}

pub fn green_mass(p: &Policy, z: f64, tau: f64) -> f64 {
    let k = p.constants;
    let g = |xi: f64| if xi <= 0.0 { 0.0 } else { green_function(z, tau, xi, &k).unwrap() };
    let width = 2.0 * (tau * (z + 1.0)).sqrt() + tau;
    integrate_half_line(&g, z, width, 1e-9)
}

/// Square-root fit to the exchange-rate series, `γ = −7`.
pub fn fx_setup() -> (CIRParams, UtilityParams) {
    (
        CIRParams::new(0.1090, 1.32675, 0.28789).unwrap(),
        UtilityParams::new(-7.0).unwrap(),
    )
}

