//! Second-order vol-of-vol expansion for European puts.
//!
//! The price is approximated by the Black-Scholes kernel at the integrated
//! proxy variance `psi_T` plus five greek corrections,
//!
//! ```text
//! P = P_BS(x0, psi) + a0 Py + a1 Pxy + a2 Pxxy + b0 Pyy + b2 Pxxyy
//! ```
//!
//! where the coefficients are nested time integrals of the piecewise-constant
//! parameters against the deterministic volatility proxy `v0(t)`. For
//! piecewise-constant parameters every such integral is evaluated exactly by
//! the phi recursion below, advanced interval by interval; no quadrature is
//! involved anywhere in this module.

use crate::blackscholes::{self, BsContext};
use crate::error::{domain, invalid, Result};
use crate::termstructure::{ModelState, ParamSchedule, MIN_KAPPA};
use std::collections::HashMap;

/// Deterministic volatility proxy `v0(t)` (zeroth expansion order).
///
/// Within an interval with parameters `(kappa_i, theta_i)` it relaxes
/// exponentially: `v0(t) = theta_i + (v0(T_i) - theta_i) e^{-kappa_i (t-T_i)}`,
/// chained continuously across boundaries.
pub fn v0_at(schedule: &ParamSchedule, v0: f64, t: f64) -> Result<f64> {
    if !(v0 > 0.0) {
        return Err(domain(format!("initial volatility must be > 0, got {v0}")));
    }
    let idx = schedule.grid().interval_of(t)?;
    let mut v = v0;
    for i in 0..idx {
        let (a, b) = schedule.grid().interval(i);
        let (k, th, _, _) = schedule.at(i);
        v = th + (v - th) * (-k * (b - a)).exp();
    }
    let (a, _) = schedule.grid().interval(idx);
    let (k, th, _, _) = schedule.at(idx);
    Ok(th + (v - th) * (-k * (t - a)).exp())
}

/// One level `(n, m, p)` of a nested phi integral: integrand factor
/// `e^{n kappa_i dT gamma(s)} gamma(s)^m v0(s)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhiLevel {
    pub n: i32,
    pub m: u32,
    pub p: u32,
}

/// Ordered levels of a nested phi integral, outermost first (1 to 3 levels).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhiKey(Vec<PhiLevel>);

impl PhiKey {
    pub fn new(levels: Vec<PhiLevel>) -> Result<Self> {
        if levels.is_empty() || levels.len() > 3 {
            return Err(invalid(format!(
                "phi key needs 1 to 3 levels, got {}",
                levels.len()
            )));
        }
        Ok(Self(levels))
    }

    pub fn levels(&self) -> &[PhiLevel] {
        &self.0
    }
}

/// Interval data consumed by the phi recursion: length, mean-reversion pair
/// and the proxy volatility at the interval start.
#[derive(Debug, Clone, Copy)]
pub struct IntervalData {
    pub dt: f64,
    pub kappa: f64,
    pub theta: f64,
    pub v_start: f64,
}

impl IntervalData {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(domain(format!("interval length must be > 0, got {}", self.dt)));
        }
        if !(self.kappa >= MIN_KAPPA) {
            return Err(domain(format!(
                "kappa must be >= {MIN_KAPPA} for the phi closed forms, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

type PhiCache = HashMap<Vec<PhiLevel>, f64>;

/// Nested integral `phi_{t,T_{i+1}}` for `t` inside the interval, by the
/// exact closed-form recursion (no quadrature). `gamma = (t - T_i) / dT`.
pub fn phi(interval: &IntervalData, key: &PhiKey, t: f64) -> Result<f64> {
    interval.validate()?;
    let gamma = t / interval.dt;
    if !(0.0..=1.0 + 1e-12).contains(&gamma) {
        return Err(domain(format!(
            "t = {t} outside interval of length {}",
            interval.dt
        )));
    }
    let mut cache = PhiCache::new();
    Ok(phi_rec(interval, key.levels(), gamma.min(1.0), &mut cache))
}

fn phi_rec(iv: &IntervalData, key: &[PhiLevel], gamma: f64, cache: &mut PhiCache) -> f64 {
    if let Some(&v) = cache.get(key) {
        return v;
    }
    let top = key[0];
    let kd = iv.kappa * iv.dt;
    let val = if key.len() == 1 {
        let PhiLevel { n, m, p } = top;
        if p > 0 {
            // v0(s)^p = v0(s)^{p-1} (theta + (v_start - theta) e^{-kappa dT gamma(s)})
            iv.theta * phi_rec(iv, &[PhiLevel { n, m, p: p - 1 }], gamma, cache)
                + (iv.v_start - iv.theta)
                    * phi_rec(iv, &[PhiLevel { n: n - 1, m, p: p - 1 }], gamma, cache)
        } else if n == 0 {
            iv.dt / (m + 1) as f64 * (1.0 - gamma.powi(m as i32 + 1))
        } else {
            let nk = n as f64 * iv.kappa;
            let base = ((n as f64 * kd).exp() - gamma.powi(m as i32) * (n as f64 * kd * gamma).exp()) / nk;
            if m == 0 {
                base
            } else {
                base - m as f64 / (nk * iv.dt)
                    * phi_rec(iv, &[PhiLevel { n, m: m - 1, p: 0 }], gamma, cache)
            }
        }
    } else {
        let rest = &key[1..];
        let next = rest[0];
        let PhiLevel { n, m, p } = top;
        if p > 0 {
            let mut lo = key.to_vec();
            lo[0] = PhiLevel { n, m, p: p - 1 };
            let mut hi = key.to_vec();
            hi[0] = PhiLevel { n: n - 1, m, p: p - 1 };
            iv.theta * phi_rec(iv, &lo, gamma, cache)
                + (iv.v_start - iv.theta) * phi_rec(iv, &hi, gamma, cache)
        } else if n == 0 {
            // merge: outer power integrates onto the next level
            let c = iv.dt / (m + 1) as f64;
            let mut merged = rest.to_vec();
            merged[0] = PhiLevel {
                n: next.n,
                m: next.m + m + 1,
                p: next.p,
            };
            -c * gamma.powi(m as i32 + 1) * phi_rec(iv, rest, gamma, cache)
                + c * phi_rec(iv, &merged, gamma, cache)
        } else {
            let nk = n as f64 * iv.kappa;
            let e_g = (n as f64 * kd * gamma).exp();
            if m == 0 {
                let mut merged = rest.to_vec();
                merged[0] = PhiLevel {
                    n: n + next.n,
                    m: next.m,
                    p: next.p,
                };
                (-e_g * phi_rec(iv, rest, gamma, cache) + phi_rec(iv, &merged, gamma, cache)) / nk
            } else {
                // integration by parts m times: factorial-weighted sum
                let mut sum_g = 0.0; // sum_j gamma^j (m!/j!) (-1/(n kappa dT))^{m-j}
                let mut sum_terms = 0.0;
                let mut fact_ratio = 1.0; // m!/j! built downward from j = m
                for j in (0..=m).rev() {
                    let w = fact_ratio * (-1.0 / (nk * iv.dt)).powi((m - j) as i32);
                    sum_g += gamma.powi(j as i32) * w;
                    let mut merged = rest.to_vec();
                    merged[0] = PhiLevel {
                        n: n + next.n,
                        m: next.m + j,
                        p: next.p,
                    };
                    sum_terms += w * phi_rec(iv, &merged, gamma, cache);
                    fact_ratio *= j as f64; // m!/(j-1)! = (m!/j!) * j
                }
                (-e_g * sum_g * phi_rec(iv, rest, gamma, cache) + sum_terms) / nk
            }
        }
    };
    cache.insert(key.to_vec(), val);
    val
}

/// Per-interval constant multiplier of an omega level (the part of the
/// integrand besides `e^{n int kappa}` and the `v0` power).
#[derive(Debug, Clone, Copy)]
enum LevelFactor {
    One,
    LambdaSq,
    RhoLambda,
    TwoRhoLambda,
}

impl LevelFactor {
    fn eval(self, lambda: f64, rho: f64) -> f64 {
        match self {
            LevelFactor::One => 1.0,
            LevelFactor::LambdaSq => lambda * lambda,
            LevelFactor::RhoLambda => rho * lambda,
            LevelFactor::TwoRhoLambda => 2.0 * rho * lambda,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct OmegaLevel {
    n: i32,
    factor: LevelFactor,
    p: u32,
}

/// One tracked omega integral together with all of its outer prefixes.
/// `vals[k-1]` holds the `k`-level prefix value accumulated from 0 to the
/// current boundary.
#[derive(Debug, Clone)]
struct OmegaChain {
    levels: Vec<OmegaLevel>,
    vals: Vec<f64>,
}

impl OmegaChain {
    fn new(levels: Vec<OmegaLevel>) -> Self {
        let vals = vec![0.0; levels.len()];
        Self { levels, vals }
    }

    fn full_value(&self) -> f64 {
        *self.vals.last().unwrap()
    }

    /// Advance every prefix across one interval. `log_e0` is
    /// `int_0^{T_i} kappa`; all right-hand prefix values are the ones at
    /// `T_i`, so the update reads old state only.
    fn advance(
        &mut self,
        iv: &IntervalData,
        lambda: f64,
        rho: f64,
        log_e0: f64,
        cache: &mut PhiCache,
    ) {
        let old = self.vals.clone();
        for k in 1..=self.levels.len() {
            let mut acc = old[k - 1];
            for j in 0..k {
                let prefix = if j == 0 { 1.0 } else { old[j - 1] };
                if prefix == 0.0 {
                    continue;
                }
                let slice = &self.levels[j..k];
                let l_prod: f64 = slice.iter().map(|l| l.factor.eval(lambda, rho)).product();
                if l_prod == 0.0 {
                    continue;
                }
                let n_sum: i32 = slice.iter().map(|l| l.n).sum();
                let key: Vec<PhiLevel> = slice
                    .iter()
                    .map(|l| PhiLevel { n: l.n, m: 0, p: l.p })
                    .collect();
                let phi_val = phi_rec(iv, &key, 0.0, cache);
                acc += prefix * (n_sum as f64 * log_e0).exp() * l_prod * phi_val;
            }
            self.vals[k - 1] = acc;
        }
    }
}

/// The expansion coefficient sextuple for one horizon.
///
/// `b2 = a1^2 / 2` holds exactly by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionCoefficients {
    pub psi: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b2: f64,
}

impl ExpansionCoefficients {
    pub fn new(psi: f64, a0: f64, a1: f64, a2: f64, b0: f64) -> Self {
        Self {
            psi,
            a0,
            a1,
            a2,
            b0,
            b2: 0.5 * a1 * a1,
        }
    }
}

/// Running omega state: the seven tracked integrals of the coefficient set,
/// the accumulated `int kappa` and the proxy volatility, advanced one
/// parameter interval at a time.
#[derive(Debug, Clone)]
pub struct OmegaState {
    psi: OmegaChain,
    a0: OmegaChain,
    a1: OmegaChain,
    a2_first: OmegaChain,
    a2_second: OmegaChain,
    b0: OmegaChain,
    log_e0: f64,
    v: f64,
    t: f64,
}

impl OmegaState {
    pub fn new(v0: f64) -> Result<Self> {
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(domain(format!("initial volatility must be > 0, got {v0}")));
        }
        use LevelFactor::*;
        let lvl = |n: i32, factor: LevelFactor, p: u32| OmegaLevel { n, factor, p };
        Ok(Self {
            psi: OmegaChain::new(vec![lvl(0, One, 2)]),
            a0: OmegaChain::new(vec![lvl(2, LambdaSq, 2), lvl(-2, One, 0)]),
            a1: OmegaChain::new(vec![lvl(1, RhoLambda, 2), lvl(-1, One, 1)]),
            a2_first: OmegaChain::new(vec![
                lvl(1, RhoLambda, 2),
                lvl(0, TwoRhoLambda, 1),
                lvl(-1, One, 1),
            ]),
            a2_second: OmegaChain::new(vec![
                lvl(1, RhoLambda, 2),
                lvl(1, RhoLambda, 2),
                lvl(-2, One, 0),
            ]),
            b0: OmegaChain::new(vec![lvl(2, LambdaSq, 2), lvl(-1, One, 1), lvl(-1, One, 1)]),
            log_e0: 0.0,
            v: v0,
            t: 0.0,
        })
    }

    /// Current time (end of the last advanced interval).
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Proxy volatility at the current boundary.
    pub fn proxy_vol(&self) -> f64 {
        self.v
    }

    /// Advance all tracked omega values across one interval of constant
    /// parameters.
    pub fn advance(&mut self, dt: f64, kappa: f64, theta: f64, lambda: f64, rho: f64) -> Result<()> {
        let iv = IntervalData {
            dt,
            kappa,
            theta,
            v_start: self.v,
        };
        iv.validate()?;
        let mut cache = PhiCache::new();
        let log_e0 = self.log_e0;
        for chain in [
            &mut self.psi,
            &mut self.a0,
            &mut self.a1,
            &mut self.a2_first,
            &mut self.a2_second,
            &mut self.b0,
        ] {
            chain.advance(&iv, lambda, rho, log_e0, &mut cache);
        }
        self.log_e0 += kappa * dt;
        self.v = theta + (self.v - theta) * (-kappa * dt).exp();
        self.t += dt;
        Ok(())
    }

    /// Assemble the coefficient sextuple at the current horizon.
    pub fn coefficients(&self) -> ExpansionCoefficients {
        ExpansionCoefficients::new(
            self.psi.full_value(),
            self.a0.full_value(),
            2.0 * self.a1.full_value(),
            2.0 * (self.a2_first.full_value() + self.a2_second.full_value()),
            4.0 * self.b0.full_value(),
        )
    }
}

/// Expansion coefficients for horizon `maturity`.
///
/// The schedule is truncated at the horizon, or flat-extended when the
/// horizon lies past the grid end.
pub fn coefficients(schedule: &ParamSchedule, v0: f64, maturity: f64) -> Result<ExpansionCoefficients> {
    if !(maturity > 0.0) {
        return Err(domain(format!("maturity must be > 0, got {maturity}")));
    }
    let s = schedule.restricted_to(maturity)?;
    if s.min_kappa() < MIN_KAPPA {
        return Err(domain(format!(
            "kappa below {MIN_KAPPA} is rejected by the expansion closed forms"
        )));
    }
    let mut state = OmegaState::new(v0)?;
    for i in 0..s.grid().n_intervals() {
        let (a, b) = s.grid().interval(i);
        let (k, th, l, r) = s.at(i);
        state.advance(b - a, k, th, l, r)?;
    }
    Ok(state.coefficients())
}

/// Second-order expansion price of a European put.
pub fn price_put_expansion(
    state: &ModelState,
    schedule: &ParamSchedule,
    ctx: &BsContext,
) -> Result<f64> {
    let c = coefficients(schedule, state.v0, ctx.maturity)?;
    let x0 = state.x0();
    let base = blackscholes::put_price_xy(ctx, x0, c.psi)?;
    let g = |i, j| blackscholes::greek_xy(ctx, x0, c.psi, i, j);
    Ok(base
        + c.a0 * g(0, 1)?
        + c.a1 * g(1, 1)?
        + c.a2 * g(2, 1)?
        + c.b0 * g(0, 2)?
        + c.b2 * g(2, 2)?)
}

/// Expansion price of a European call, via put-call parity.
pub fn price_call_expansion(
    state: &ModelState,
    schedule: &ParamSchedule,
    ctx: &BsContext,
) -> Result<f64> {
    Ok(price_put_expansion(state, schedule, ctx)? - ctx.discounted_strike()
        + ctx.discounted_spot(state.x0()))
}
