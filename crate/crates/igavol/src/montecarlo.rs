//! Monte Carlo pricing oracle.
//!
//! Only the volatility is simulated: conditional on the vol-driving Brownian
//! path, the put price is the Black-Scholes kernel evaluated at
//!
//! ```text
//! x = x0 + int rho V dB - 1/2 int (rho V)^2 dt ,   y = int (1 - rho^2) V^2 dt ,
//! ```
//!
//! so the orthogonal spot noise never enters the estimator. The volatility
//! update is the unconditionally positive scheme
//!
//! ```text
//! delta = (kappa + lambda^2/2) dt - lambda dB
//! V <- V e^{-delta} + kappa theta (1 - e^{-delta})/delta dt
//! ```
//!
//! Stochastic integrals use the left-point rule on the same Brownian
//! increments that drive the volatility update.
//!
//! Reproducibility: path `p` draws from a stream that is a pure function of
//! `(seed, p)`, and reductions run in fixed path order (Kahan), so serial and
//! parallel runs are bit-identical.

use crate::blackscholes::{put_price_xy, BsContext};
use crate::error::{domain, Result};
use crate::termstructure::{ModelState, ParamSchedule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-path random stream (xoshiro256++ state derived from
/// `(seed, path)` via splitmix64).
#[derive(Debug, Clone)]
pub struct PathRng {
    s: [u64; 4],
    spare: Option<f64>,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut st = seed ^ path.wrapping_mul(GOLDEN).wrapping_add(0x6A09_E667_F3BC_C909);
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut st);
        }
        if s == [0; 4] {
            s[0] = 1;
        }
        Self { s, spare: None }
    }

    fn next_u64(&mut self) -> u64 {
        let r = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        r
    }

    /// Uniform draw in (0, 1].
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw (Box-Muller, second value cached).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// One step of the volatility scheme. Output is positive whenever `v > 0`
/// (both terms are products of positives); `|delta|` near zero is handled by
/// a series branch for `(1 - e^{-delta})/delta`.
pub fn step_vol(v: f64, kappa: f64, theta: f64, lambda: f64, dt: f64, db: f64) -> f64 {
    let delta = (kappa + 0.5 * lambda * lambda) * dt - lambda * db;
    let em = (-delta).exp();
    let ratio = if delta.abs() < 1e-5 {
        1.0 - delta * (0.5 - delta * (1.0 / 6.0 - delta / 24.0))
    } else {
        (1.0 - em) / delta
    };
    v * em + kappa * theta * ratio * dt
}

/// Simulation controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McConfig {
    /// Total number of simulated volatility paths.
    pub paths: usize,
    /// Time-step resolution; each parameter interval gets at least one step.
    pub steps_per_year: u32,
    pub seed: u64,
    /// Pair each path with its sign-flipped Brownian mirror.
    pub antithetic: bool,
    /// Execution knob only: serial and parallel runs are bit-identical.
    pub parallel: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        // desk-scale defaults; the heavy reference configuration
        // (24 steps/day, 1e6 paths) is a flag away in the CLI
        Self {
            paths: 200_000,
            steps_per_year: 2920,
            seed: 42,
            antithetic: true,
            parallel: true,
        }
    }
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(domain("at least one path is required"));
        }
        if self.antithetic && self.paths % 2 != 0 {
            return Err(domain("antithetic sampling needs an even path count"));
        }
        if self.steps_per_year == 0 {
            return Err(domain("steps_per_year must be >= 1"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub paths: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    n_steps: usize,
    dt: f64,
    kappa: f64,
    theta: f64,
    lambda: f64,
    rho: f64,
}

fn build_segments(schedule: &ParamSchedule, maturity: f64, steps_per_year: u32) -> Result<Vec<Segment>> {
    let s = schedule.restricted_to(maturity)?;
    let mut segs = Vec::with_capacity(s.grid().n_intervals());
    for i in 0..s.grid().n_intervals() {
        let (a, b) = s.grid().interval(i);
        let (kappa, theta, lambda, rho) = s.at(i);
        let len = b - a;
        let n_steps = ((steps_per_year as f64 * len).ceil() as usize).max(1);
        segs.push(Segment {
            n_steps,
            dt: len / n_steps as f64,
            kappa,
            theta,
            lambda,
            rho,
        });
    }
    Ok(segs)
}

/// Path functionals entering the conditional Black-Scholes payoff.
#[derive(Clone, Copy, Default)]
struct PathIntegrals {
    int_rho_v_db: f64,
    int_rho_v_sq: f64,
    int_orth_v_sq: f64,
}

impl PathIntegrals {
    fn log_spot_shift(&self) -> f64 {
        self.int_rho_v_db - 0.5 * self.int_rho_v_sq
    }
}

fn simulate_path(
    v0: f64,
    segments: &[Segment],
    rng: &mut PathRng,
    antithetic: bool,
) -> (PathIntegrals, PathIntegrals) {
    let mut plus = PathIntegrals::default();
    let mut minus = PathIntegrals::default();
    let mut vp = v0;
    let mut vm = v0;
    for seg in segments {
        let sq_dt = seg.dt.sqrt();
        let rho2 = seg.rho * seg.rho;
        for _ in 0..seg.n_steps {
            let db = sq_dt * rng.next_normal();
            plus.int_rho_v_db += seg.rho * vp * db;
            plus.int_rho_v_sq += rho2 * vp * vp * seg.dt;
            plus.int_orth_v_sq += (1.0 - rho2) * vp * vp * seg.dt;
            vp = step_vol(vp, seg.kappa, seg.theta, seg.lambda, seg.dt, db);
            if antithetic {
                minus.int_rho_v_db -= seg.rho * vm * db;
                minus.int_rho_v_sq += rho2 * vm * vm * seg.dt;
                minus.int_orth_v_sq += (1.0 - rho2) * vm * vm * seg.dt;
                vm = step_vol(vm, seg.kappa, seg.theta, seg.lambda, seg.dt, -db);
            }
        }
    }
    (plus, minus)
}

struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new() -> Self {
        Self { sum: 0.0, c: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Price puts at several strikes off one shared set of volatility paths.
///
/// All strikes share maturity and discounting; `dd`/`df` are the integrated
/// domestic/foreign rates to `maturity`.
pub fn mc_price_puts(
    state: &ModelState,
    schedule: &ParamSchedule,
    maturity: f64,
    dd: f64,
    df: f64,
    strikes: &[f64],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>> {
    cfg.validate()?;
    if strikes.is_empty() {
        return Err(domain("at least one strike is required"));
    }
    let contexts: Vec<BsContext> = strikes
        .iter()
        .map(|&k| BsContext::new(k, maturity, dd, df))
        .collect::<Result<_>>()?;
    let segments = build_segments(schedule, maturity, cfg.steps_per_year)?;
    let x0 = state.x0();
    let v0 = state.v0;

    let n_samples = if cfg.antithetic {
        cfg.paths / 2
    } else {
        cfg.paths
    };
    let n_strikes = strikes.len();
    let mut values = vec![0.0f64; n_samples * n_strikes];

    let fill = |sample: usize, out: &mut [f64]| {
        let mut rng = PathRng::new(cfg.seed, sample as u64);
        let (plus, minus) = simulate_path(v0, &segments, &mut rng, cfg.antithetic);
        for (j, ctx) in contexts.iter().enumerate() {
            // the integrals are nonnegative by construction, so the kernel
            // evaluation cannot fail
            let p_plus = put_price_xy(ctx, x0 + plus.log_spot_shift(), plus.int_orth_v_sq).unwrap();
            out[j] = if cfg.antithetic {
                let p_minus =
                    put_price_xy(ctx, x0 + minus.log_spot_shift(), minus.int_orth_v_sq).unwrap();
                0.5 * (p_plus + p_minus)
            } else {
                p_plus
            };
        }
    };

    if cfg.parallel {
        values
            .par_chunks_mut(n_strikes)
            .enumerate()
            .for_each(|(i, out)| fill(i, out));
    } else {
        for (i, out) in values.chunks_mut(n_strikes).enumerate() {
            fill(i, out);
        }
    }

    let mut estimates = Vec::with_capacity(n_strikes);
    for j in 0..n_strikes {
        let mut sum = Kahan::new();
        for i in 0..n_samples {
            sum.add(values[i * n_strikes + j]);
        }
        let mean = sum.sum / n_samples as f64;
        let std_error = if n_samples > 1 {
            let mut ss = Kahan::new();
            for i in 0..n_samples {
                let d = values[i * n_strikes + j] - mean;
                ss.add(d * d);
            }
            (ss.sum / (n_samples as f64 * (n_samples as f64 - 1.0))).sqrt()
        } else {
            0.0
        };
        estimates.push(McEstimate {
            price: mean,
            std_error,
            paths: cfg.paths,
        });
    }
    Ok(estimates)
}

/// Monte Carlo price of a single European put.
pub fn mc_price_put(
    state: &ModelState,
    schedule: &ParamSchedule,
    ctx: &BsContext,
    cfg: &McConfig,
) -> Result<McEstimate> {
    Ok(mc_price_puts(
        state,
        schedule,
        ctx.maturity,
        ctx.dd,
        ctx.df,
        &[ctx.strike],
        cfg,
    )?
    .remove(0))
}

/// Terminal volatility draws `V_T`, one per path (diagnostics and moment
/// checks; the antithetic flag is ignored here).
pub fn terminal_vol_samples(
    schedule: &ParamSchedule,
    v0: f64,
    maturity: f64,
    cfg: &McConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(v0 > 0.0) {
        return Err(domain(format!("initial volatility must be > 0, got {v0}")));
    }
    let segments = build_segments(schedule, maturity, cfg.steps_per_year)?;
    let sim = |i: usize| {
        let mut rng = PathRng::new(cfg.seed, i as u64);
        let mut v = v0;
        for seg in &segments {
            let sq_dt = seg.dt.sqrt();
            for _ in 0..seg.n_steps {
                v = step_vol(
                    v,
                    seg.kappa,
                    seg.theta,
                    seg.lambda,
                    seg.dt,
                    sq_dt * rng.next_normal(),
                );
            }
        }
        v
    };
    Ok(if cfg.parallel {
        (0..cfg.paths).into_par_iter().map(sim).collect()
    } else {
        (0..cfg.paths).map(sim).collect()
    })
}
