//! Pricing and calibration toolkit for a non-affine stochastic volatility
//! model with inverse-gamma stationary volatility,
//!
//! ```text
//! dS = (r_d - r_f) S dt + V S dW
//! dV = kappa (theta - V) dt + lambda V dB,   d<W,B> = rho dt
//! ```
//!
//! with piecewise-constant time-dependent parameters. The crate provides:
//!
//! - [`termstructure`]: time grids, parameter schedules, rate curves;
//! - [`blackscholes`]: the put kernel in (log-spot, integrated-variance)
//!   coordinates, its mixed derivatives and implied-volatility inversion;
//! - [`expansion`]: closed-form second-order vol-of-vol expansion of the put
//!   price, with exact per-interval recursions for the coefficients;
//! - [`montecarlo`]: an independent pricing oracle combining an
//!   unconditionally positive volatility scheme with the conditional
//!   Black-Scholes mixing estimator;
//! - [`stationary`]: long-run volatility laws, moment matching and density
//!   curves;
//! - [`calibration`]: bootstrap fitting of the parameter term structure to an
//!   implied-volatility surface;
//! - [`data`]: JSON schemas for market data and calibrated parameter files.

pub mod blackscholes;
pub mod calibration;
pub mod data;
pub mod error;
pub mod expansion;
pub mod montecarlo;
mod optimizer;
pub mod stationary;
pub mod termstructure;

pub use error::{Error, Result};
