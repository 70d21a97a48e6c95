//! Optimal investment under the modified constant-elasticity-of-variance
//! (M-CEV) model with power utility.
//!
//! The crate is organised bottom-up:
//!
//! * [`specialfn`]: Kummer function, the Kummer ratio kernel (four methods and a
//!   dispatcher), modified Bessel `I_ν`, Whittaker `M_{λ,η}` and `ln Γ`.
//! * [`model`]: raw parameters, derived closed-form constants and the `z`/`τ`
//!   coordinate transforms.
//! * [`policy`]: Green function, value function and optimal position, for the
//!   general model and the square-root (CIR) specialisation.
//! * [`montecarlo`]: path simulation, strategy wealth dynamics and the
//!   parameter-misspecification study.
//! * [`backtest`]: rate-series loading, CIR calibration, daily-rebalanced
//!   backtests and drawdown metrics.
//! * [`bench`]: speed/accuracy harness for the ratio kernel.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod backtest;
pub mod bench;
mod error;
pub mod model;
pub mod montecarlo;
pub mod policy;
pub mod specialfn;

pub use error::{Error, Result};
