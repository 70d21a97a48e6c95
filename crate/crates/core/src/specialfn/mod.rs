//! Special functions behind the closed-form policy: the first-kind Kummer
//! function, the ratio `M(θ−1, ω, x) / M(θ, ω, x)` by four independent
//! methods, modified Bessel `I_ν`, Whittaker `M_{λ,η}` and `ln Γ`.
//!
//! Everything here is a pure function of its arguments.

mod bessel;
mod gamma;
mod kummer;
mod ratio;
mod series;
mod whittaker;

/// Series-term and continued-fraction depth cap.
pub const DEFAULT_MAX_TERMS: usize = 10_000;

pub use bessel::{bessel_i, bessel_i_scaled, ln_bessel_i_scaled};
pub use gamma::log_gamma;
pub use kummer::{kummer_m, kummer_m_unscaled, ln_kummer_m, ln_kummer_m_scaled, SignedLog};
pub use ratio::{
    ratio, ratio_continued_fraction, ratio_direct_quotient, ratio_large_x, ratio_small_x,
    ratio_unscaled_quotient, RatioEvaluation, RatioKernel, RatioMethod, RatioParams,
};
pub use series::{series_quotient, SeriesCoefficients};
pub use whittaker::{ln_whittaker_m, whittaker_m};
