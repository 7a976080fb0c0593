//! Shared test oracles, independent of the library's closed-form paths.
//!
//! - the nested coefficient integrals are evaluated as a backward ODE system
//!   with classic RK4 and step-halving until self-agreement, never through
//!   the phi recursion;
//! - greeks are checked against scale-aware Richardson finite differences of
//!   the put kernel.

// each test binary compiles its own copy and uses a subset
#![allow(dead_code)]

use igavol::blackscholes::BsContext;
use igavol::termstructure::ParamSchedule;
use std::path::PathBuf;

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// One level of a nested integral: integrand factor
/// `e^{n int_0^u kappa} * l(lambda, rho) * v(u)^p`, outermost first.
#[derive(Clone, Copy)]
pub struct OracleLevel {
    pub n: i32,
    pub l: fn(f64, f64) -> f64,
    pub p: u32,
}

pub fn l_one(_: f64, _: f64) -> f64 {
    1.0
}
pub fn l_lambda_sq(l: f64, _: f64) -> f64 {
    l * l
}
pub fn l_rho_lambda(l: f64, r: f64) -> f64 {
    r * l
}
pub fn l_two_rho_lambda(l: f64, r: f64) -> f64 {
    2.0 * r * l
}

struct PiecewiseModel {
    bounds: Vec<f64>,
    kappa: Vec<f64>,
    theta: Vec<f64>,
    lambda: Vec<f64>,
    rho: Vec<f64>,
    /// proxy vol at each boundary
    v_nodes: Vec<f64>,
    /// integral of kappa up to each boundary
    a_nodes: Vec<f64>,
}

impl PiecewiseModel {
    fn new(schedule: &ParamSchedule, v0: f64) -> Self {
        let bounds = schedule.grid().boundaries().to_vec();
        let n = schedule.grid().n_intervals();
        let mut v_nodes = vec![v0];
        let mut a_nodes = vec![0.0];
        for i in 0..n {
            let dt = bounds[i + 1] - bounds[i];
            let (k, th, _, _) = schedule.at(i);
            let v_prev = v_nodes[i];
            v_nodes.push(th + (v_prev - th) * (-k * dt).exp());
            a_nodes.push(a_nodes[i] + k * dt);
        }
        Self {
            bounds,
            kappa: schedule.kappa().to_vec(),
            theta: schedule.theta().to_vec(),
            lambda: schedule.lambda().to_vec(),
            rho: schedule.rho().to_vec(),
            v_nodes,
            a_nodes,
        }
    }

    fn interval_of(&self, t: f64) -> usize {
        let mut i = self.bounds.partition_point(|&b| b <= t);
        i = i.saturating_sub(1);
        i.min(self.kappa.len() - 1)
    }

    fn v(&self, t: f64) -> f64 {
        let i = self.interval_of(t);
        let th = self.theta[i];
        th + (self.v_nodes[i] - th) * (-self.kappa[i] * (t - self.bounds[i])).exp()
    }

    fn int_kappa(&self, t: f64) -> f64 {
        let i = self.interval_of(t);
        self.a_nodes[i] + self.kappa[i] * (t - self.bounds[i])
    }
}

/// Value of the nested integral `omega_{0,T}` for one chain, by backward RK4
/// over the suffix system `S_k'(t) = -g_k(t) S_{k+1}(t)`, refined until two
/// successive step sizes agree.
fn omega_chain(model: &PiecewiseModel, chain: &[OracleLevel]) -> f64 {
    let eval = |steps_per_interval: usize| -> f64 {
        let m = chain.len();
        let mut s = vec![0.0f64; m]; // S_k(T) = 0
        // the sweep interval is pinned explicitly: lambda and rho jump at
        // boundaries, and evaluating the shared endpoint with the wrong
        // side's values would degrade RK4 to first order
        let g = |k: usize, i: usize, t: f64| -> f64 {
            let lvl = &chain[k];
            ((lvl.n as f64) * model.int_kappa(t)).exp()
                * (lvl.l)(model.lambda[i], model.rho[i])
                * model.v(t).powi(lvl.p as i32)
        };
        // rhs of the backward sweep in tau = T - t
        let rhs = |i: usize, t: f64, s: &[f64], out: &mut [f64]| {
            for k in 0..m {
                let upper = if k + 1 < m { s[k + 1] } else { 1.0 };
                out[k] = g(k, i, t) * upper;
            }
        };
        let mut k1 = vec![0.0; m];
        let mut k2 = vec![0.0; m];
        let mut k3 = vec![0.0; m];
        let mut k4 = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        for i in (0..model.kappa.len()).rev() {
            let (a, b) = (model.bounds[i], model.bounds[i + 1]);
            let h = (b - a) / steps_per_interval as f64;
            let mut t = b;
            for _ in 0..steps_per_interval {
                rhs(i, t, &s, &mut k1);
                for j in 0..m {
                    tmp[j] = s[j] + 0.5 * h * k1[j];
                }
                rhs(i, t - 0.5 * h, &tmp, &mut k2);
                for j in 0..m {
                    tmp[j] = s[j] + 0.5 * h * k2[j];
                }
                rhs(i, t - 0.5 * h, &tmp, &mut k3);
                for j in 0..m {
                    tmp[j] = s[j] + h * k3[j];
                }
                rhs(i, t - h, &tmp, &mut k4);
                for j in 0..m {
                    s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
                t -= h;
            }
        }
        s[0]
    };

    let mut steps = 128usize;
    let mut prev = eval(steps);
    for _ in 0..8 {
        steps *= 2;
        let next = eval(steps);
        if (next - prev).abs() <= 1e-11 * next.abs().max(1e-16) {
            return next;
        }
        prev = next;
    }
    prev
}

/// All six expansion coefficients from nested quadrature of their integral
/// definitions: `(psi, a0, a1, a2, b0, b2)`.
pub fn oracle_coefficients(schedule: &ParamSchedule, v0: f64) -> [f64; 6] {
    let model = PiecewiseModel::new(schedule, v0);
    let lvl = |n: i32, l: fn(f64, f64) -> f64, p: u32| OracleLevel { n, l, p };
    let psi = omega_chain(&model, &[lvl(0, l_one, 2)]);
    let a0 = omega_chain(&model, &[lvl(2, l_lambda_sq, 2), lvl(-2, l_one, 0)]);
    let a1 = 2.0 * omega_chain(&model, &[lvl(1, l_rho_lambda, 2), lvl(-1, l_one, 1)]);
    let a2 = 2.0
        * omega_chain(
            &model,
            &[
                lvl(1, l_rho_lambda, 2),
                lvl(0, l_two_rho_lambda, 1),
                lvl(-1, l_one, 1),
            ],
        )
        + 2.0
            * omega_chain(
                &model,
                &[
                    lvl(1, l_rho_lambda, 2),
                    lvl(1, l_rho_lambda, 2),
                    lvl(-2, l_one, 0),
                ],
            );
    let b0 = 4.0
        * omega_chain(
            &model,
            &[
                lvl(2, l_lambda_sq, 2),
                lvl(-1, l_one, 1),
                lvl(-1, l_one, 1),
            ],
        );
    [psi, a0, a1, a2, b0, 0.5 * a1 * a1]
}

/// Nested-quadrature value of a phi integral on one interval:
/// levels are `(n, m, p)` outermost first, integrand
/// `e^{n kappa dT gamma(s)} gamma(s)^m v(s)^p`, evaluated from `t` to the
/// interval end (`t` relative to the interval start).
pub fn oracle_phi(
    dt: f64,
    kappa: f64,
    theta: f64,
    v_start: f64,
    levels: &[(i32, u32, u32)],
    t: f64,
) -> f64 {
    let m = levels.len();
    let v = |s: f64| theta + (v_start - theta) * (-kappa * s).exp();
    let g = |k: usize, s: f64| -> f64 {
        let (n, mm, p) = levels[k];
        let gamma = s / dt;
        (n as f64 * kappa * dt * gamma).exp() * gamma.powi(mm as i32) * v(s).powi(p as i32)
    };
    let eval = |steps: usize| -> f64 {
        let mut s_vec = vec![0.0f64; m];
        let h = (dt - t) / steps as f64;
        let rhs = |s: f64, sv: &[f64], out: &mut [f64]| {
            for k in 0..m {
                let upper = if k + 1 < m { sv[k + 1] } else { 1.0 };
                out[k] = g(k, s) * upper;
            }
        };
        let mut k1 = vec![0.0; m];
        let mut k2 = vec![0.0; m];
        let mut k3 = vec![0.0; m];
        let mut k4 = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        let mut s = dt;
        for _ in 0..steps {
            rhs(s, &s_vec, &mut k1);
            for j in 0..m {
                tmp[j] = s_vec[j] + 0.5 * h * k1[j];
            }
            rhs(s - 0.5 * h, &tmp, &mut k2);
            for j in 0..m {
                tmp[j] = s_vec[j] + 0.5 * h * k2[j];
            }
            rhs(s - 0.5 * h, &tmp, &mut k3);
            for j in 0..m {
                tmp[j] = s_vec[j] + h * k3[j];
            }
            rhs(s - h, &tmp, &mut k4);
            for j in 0..m {
                s_vec[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            s -= h;
        }
        s_vec[0]
    };
    let mut steps = 256usize;
    let mut prev = eval(steps);
    for _ in 0..7 {
        steps *= 2;
        let next = eval(steps);
        if (next - prev).abs() <= 1e-12 * next.abs().max(1e-16) {
            return next;
        }
        prev = next;
    }
    prev
}

/// Central difference with two Richardson levels (O(h^6) truncation).
fn rich_d1(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    let r1 = |h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    (16.0 * r1(h / 2.0) - r1(h)) / 15.0
}

fn rich_d2(f: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    let r1 = |h: f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    (16.0 * r1(h / 2.0) - r1(h)) / 15.0
}

fn upper_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Time value of the put kernel: the price minus its (y-independent)
/// intrinsic part, arranged so neither branch subtracts O(1) terms. Every
/// supported greek differentiates in y at least once, so differencing the
/// time value instead of the full price changes nothing analytically while
/// removing the intrinsic part's ulp noise from the stencils.
fn time_value(ctx: &BsContext, x: f64, y: f64) -> f64 {
    let kd = ctx.discounted_strike();
    let f = ctx.discounted_spot(x);
    let sy = y.sqrt();
    let m = (kd / f).ln();
    let (hp, hm) = (m / sy + 0.5 * sy, m / sy - 0.5 * sy);
    if m >= 0.0 {
        f * upper_tail(hm) - kd * upper_tail(hp)
    } else {
        kd * (1.0 - upper_tail(hp)) - f * (1.0 - upper_tail(hm))
    }
}

/// Finite-difference oracle for the five mixed kernel derivatives.
///
/// Steps scale with the kernel structure (x varies on the sqrt(y) scale, y
/// multiplicatively) and shrink in the tails where the integrand steepens
/// like e^{-z^2/2}; two Richardson levels keep truncation O(h^6). The
/// fourth-order (2,2) stencil trades noise against truncation hardest and
/// gets its own, tighter steps.
pub fn fd_greek(ctx: &BsContext, x: f64, y: f64, i: u32, j: u32) -> f64 {
    let z0 = ((ctx.discounted_strike() / ctx.discounted_spot(x)).ln() / y.sqrt()
        - 0.5 * y.sqrt())
    .abs();
    let (cx, cy) = if (i, j) == (2, 2) {
        (0.07, 0.09)
    } else {
        (0.12, 0.08)
    };
    let hx = y.sqrt() * (0.30 / (1.0 + z0)).min(cx);
    let hy = y * (0.60 / (1.0 + z0)).min(cy);
    let dyj = |xx: f64| {
        let f = |g: f64| time_value(ctx, xx, y + g);
        match j {
            1 => rich_d1(&f, hy),
            2 => rich_d2(&f, hy),
            _ => unreachable!(),
        }
    };
    match i {
        0 => dyj(x),
        1 => rich_d1(&|g| dyj(x + g), hx),
        2 => rich_d2(&|g| dyj(x + g), hx),
        _ => unreachable!(),
    }
}

/// Domain where the f64 finite-difference oracle is itself accurate to well
/// under 1e-6 relative (outside it the frozen high-precision table is the
/// reference).
pub fn fd_certifiable(z0: f64, y: f64, i: u32, j: u32) -> bool {
    if (i, j) == (2, 2) {
        z0.abs() <= 3.0 && y >= 5e-3
    } else {
        z0.abs() <= 3.5
    }
}

/// Magnitude of the terms composing a greek (the greek itself can vanish at
/// interior zero crossings where the terms cancel; comparisons there must be
/// read relative to the term size both sides actually carry).
pub fn greek_scale(ctx: &BsContext, x: f64, y: f64, i: u32, j: u32) -> f64 {
    let f = ctx.discounted_spot(x);
    let sy = y.sqrt();
    let s = 1.0 / sy;
    let z = ((ctx.discounted_strike() / f).ln() / sy - 0.5 * sy).abs();
    let u = f * (-0.5 * z * z).exp() * 0.398_942_280_401_432_7 * 0.5 * s;
    let a = 1.0 + z * s;
    let q = 0.5 * (s * s * z * z + s * z + s * s);
    let dq = s * s * z + 0.5 * s;
    match (i, j) {
        (0, 1) => u,
        (1, 1) => u * a,
        (2, 1) => u * (a * a + s * s),
        (0, 2) => u * q,
        (2, 2) => u * ((a * a + s * s) * q + 2.0 * s * a * dq + s * s * s * s),
        _ => unreachable!(),
    }
}
