//! Time grids, piecewise-constant parameter schedules and rate curves.
//!
//! Everything here is a step function of time: model parameters are constant
//! on each interval of a [`TimeGrid`], and short rates are piecewise-constant
//! forwards recovered from quoted equivalent rates. Integrals of step
//! functions are computed exactly (sum of value times overlap), never by
//! quadrature.

use crate::error::{domain, invalid, Result};
use serde::{Deserialize, Serialize};

/// Smallest mean-reversion speed accepted by the expansion coefficients.
///
/// The per-interval closed forms divide by multiples of kappa; values below
/// this threshold are rejected instead of series-expanded.
pub const MIN_KAPPA: f64 = 1e-8;

/// Partition `T_0 = 0 < T_1 < ... < T_N` of a time horizon, in year fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    boundaries: Vec<f64>,
}

impl TimeGrid {
    /// Build a grid from its boundaries. The first boundary must be exactly
    /// zero, boundaries must be strictly increasing and there must be at
    /// least one interval.
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(invalid("time grid needs at least one interval"));
        }
        if boundaries[0] != 0.0 {
            return Err(invalid(format!(
                "time grid must start at 0, got {}",
                boundaries[0]
            )));
        }
        for w in boundaries.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(invalid(format!(
                    "time grid boundaries must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { boundaries })
    }

    /// Grid from interval end points only (a leading zero is prepended).
    pub fn from_maturities(maturities: &[f64]) -> Result<Self> {
        let mut b = Vec::with_capacity(maturities.len() + 1);
        b.push(0.0);
        b.extend_from_slice(maturities);
        Self::new(b)
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn n_intervals(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// Final boundary `T_N`.
    pub fn end(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }

    /// Index of the interval containing `t`; `t == end` maps to the last
    /// interval.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.end()).contains(&t) {
            return Err(domain(format!(
                "time {} outside grid [0, {}]",
                t,
                self.end()
            )));
        }
        // partition_point: first boundary strictly greater than t
        let idx = self.boundaries.partition_point(|&b| b <= t);
        Ok(idx.saturating_sub(1).min(self.n_intervals() - 1))
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.boundaries[i], self.boundaries[i + 1])
    }
}

/// Piecewise-constant function on a [`TimeGrid`], one value per interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_intervals() {
            return Err(invalid(format!(
                "need one value per interval: {} intervals, {} values",
                grid.n_intervals(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("step function values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.grid.interval_of(t)?])
    }

    /// Exact integral over `[t0, t1]`: sum of value times interval overlap.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(t0 >= 0.0 && t1 >= t0 && t1 <= self.grid.end()) {
            return Err(domain(format!(
                "integration range [{t0}, {t1}] outside grid [0, {}]",
                self.grid.end()
            )));
        }
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let (a, b) = self.grid.interval(i);
            let overlap = (b.min(t1) - a.max(t0)).max(0.0);
            acc += v * overlap;
        }
        Ok(acc)
    }
}

/// Piecewise-constant short-rate curve; rates may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    rates: StepFunction,
}

impl RateCurve {
    /// Curve from explicit forward rates on a grid.
    pub fn from_forwards(grid: TimeGrid, rates: Vec<f64>) -> Result<Self> {
        Ok(Self {
            rates: StepFunction::new(grid, rates)?,
        })
    }

    /// Build the curve from quoted equivalent constant rates
    /// `r_eq(T) = (1/T) * integral of r over [0, T]` at each maturity.
    ///
    /// The interval forwards are
    /// `r_i = (r_eq(T_{i+1}) T_{i+1} - r_eq(T_i) T_i) / (T_{i+1} - T_i)`.
    pub fn from_equivalent_rates(maturities: &[f64], r_eq: &[f64]) -> Result<Self> {
        if maturities.len() != r_eq.len() {
            return Err(invalid("maturity and rate lists must have equal length"));
        }
        if maturities.is_empty() {
            return Err(invalid("need at least one maturity"));
        }
        if maturities[0] <= 0.0 {
            return Err(invalid("maturities must be positive"));
        }
        let grid = TimeGrid::from_maturities(maturities)?;
        let mut fwd = Vec::with_capacity(maturities.len());
        let mut prev_t = 0.0;
        let mut prev_int = 0.0;
        for (&t, &r) in maturities.iter().zip(r_eq) {
            let integral = r * t;
            fwd.push((integral - prev_int) / (t - prev_t));
            prev_t = t;
            prev_int = integral;
        }
        Self::from_forwards(grid, fwd)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.rates.grid()
    }

    pub fn forwards(&self) -> &[f64] {
        self.rates.values()
    }

    /// Integral of the short rate over `[t0, t1]`.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        self.rates.integrate(t0, t1)
    }

    /// Equivalent constant rate to maturity `t`.
    pub fn equivalent_rate(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Err(domain("equivalent rate needs t > 0"));
        }
        Ok(self.integral(0.0, t)? / t)
    }
}

/// Initial market state: spot and instantaneous volatility at time zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub spot: f64,
    pub v0: f64,
}

impl ModelState {
    pub fn new(spot: f64, v0: f64) -> Result<Self> {
        if !(spot > 0.0) || !spot.is_finite() {
            return Err(invalid(format!("spot must be positive, got {spot}")));
        }
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(invalid(format!(
                "initial volatility must be positive, got {v0}"
            )));
        }
        Ok(Self { spot, v0 })
    }

    /// Log-spot `x0 = ln S0`.
    pub fn x0(&self) -> f64 {
        self.spot.ln()
    }
}

/// Piecewise-constant model parameters (kappa, theta, lambda, rho) on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSchedule {
    grid: TimeGrid,
    kappa: Vec<f64>,
    theta: Vec<f64>,
    lambda: Vec<f64>,
    rho: Vec<f64>,
}

impl ParamSchedule {
    pub fn new(
        grid: TimeGrid,
        kappa: Vec<f64>,
        theta: Vec<f64>,
        lambda: Vec<f64>,
        rho: Vec<f64>,
    ) -> Result<Self> {
        let n = grid.n_intervals();
        for (name, v) in [
            ("kappa", &kappa),
            ("theta", &theta),
            ("lambda", &lambda),
            ("rho", &rho),
        ] {
            if v.len() != n {
                return Err(invalid(format!(
                    "{name}: need one value per interval ({n}), got {}",
                    v.len()
                )));
            }
        }
        for (i, (((&k, &th), &l), &r)) in kappa
            .iter()
            .zip(&theta)
            .zip(&lambda)
            .zip(&rho)
            .enumerate()
        {
            if !(k > 0.0) || !k.is_finite() {
                return Err(invalid(format!("kappa[{i}] = {k} must be > 0")));
            }
            if !(th > 0.0) || !th.is_finite() {
                return Err(invalid(format!("theta[{i}] = {th} must be > 0")));
            }
            if !(l >= 0.0) || !l.is_finite() {
                return Err(invalid(format!("lambda[{i}] = {l} must be >= 0")));
            }
            if !(r.abs() < 1.0) {
                return Err(invalid(format!("rho[{i}] = {r} must be in (-1, 1)")));
            }
        }
        Ok(Self {
            grid,
            kappa,
            theta,
            lambda,
            rho,
        })
    }

    /// Schedule with the same parameter quadruple on every interval.
    pub fn constant(maturity: f64, kappa: f64, theta: f64, lambda: f64, rho: f64) -> Result<Self> {
        let grid = TimeGrid::from_maturities(&[maturity])?;
        Self::new(grid, vec![kappa], vec![theta], vec![lambda], vec![rho])
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Parameter quadruple `(kappa, theta, lambda, rho)` on interval `i`.
    pub fn at(&self, i: usize) -> (f64, f64, f64, f64) {
        (self.kappa[i], self.theta[i], self.lambda[i], self.rho[i])
    }

    pub fn min_kappa(&self) -> f64 {
        self.kappa.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Schedule clipped (or flat-extended) so that its grid ends exactly at
    /// `horizon`. Truncation drops later intervals and shortens the one
    /// containing `horizon`; extension keeps the final parameter values.
    pub fn restricted_to(&self, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(domain(format!("horizon must be positive, got {horizon}")));
        }
        let mut boundaries = vec![0.0];
        let mut pick = Vec::new();
        for i in 0..self.grid.n_intervals() {
            let (a, b) = self.grid.interval(i);
            if a >= horizon {
                break;
            }
            boundaries.push(b.min(horizon));
            pick.push(i);
            if b >= horizon {
                break;
            }
        }
        if *boundaries.last().unwrap() < horizon {
            // flat extension past the end of the grid
            boundaries.push(horizon);
            pick.push(self.grid.n_intervals() - 1);
        }
        Self::new(
            TimeGrid::new(boundaries)?,
            pick.iter().map(|&i| self.kappa[i]).collect(),
            pick.iter().map(|&i| self.theta[i]).collect(),
            pick.iter().map(|&i| self.lambda[i]).collect(),
            pick.iter().map(|&i| self.rho[i]).collect(),
        )
    }
}
