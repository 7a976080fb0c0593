//! Black-Scholes put kernel in (log-spot, integrated-variance) coordinates.
//!
//! The kernel is
//!
//! ```text
//! P(x, y) = K~ N(m/sqrt(y) + sqrt(y)/2) - F N(m/sqrt(y) - sqrt(y)/2)
//! ```
//!
//! with `K~ = K e^{-Dd}`, `F = e^x e^{-Df}` and `m = ln(K~/F)`, where `Dd`
//! and `Df` are the integrated domestic and foreign short rates to maturity.
//! The expansion needs the mixed derivatives d^{i+j}P/dx^i dy^j for
//! `(i,j) in {(0,1),(1,1),(2,1),(0,2),(2,2)}`; all five reduce to the common
//! factor `U = dP/dy = F n(z) / (2 sqrt(y))` times a polynomial in
//! `z = m/sqrt(y) - sqrt(y)/2` and `s = 1/sqrt(y)`.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF via the complementary error function.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Contract and discounting data for the kernel: strike, maturity and the
/// integrated domestic/foreign rates `Dd = int r_d`, `Df = int r_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsContext {
    pub strike: f64,
    pub maturity: f64,
    pub dd: f64,
    pub df: f64,
}

impl BsContext {
    pub fn new(strike: f64, maturity: f64, dd: f64, df: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(domain(format!("strike must be positive, got {strike}")));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(domain(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if !dd.is_finite() || !df.is_finite() {
            return Err(domain("discount integrals must be finite"));
        }
        Ok(Self {
            strike,
            maturity,
            dd,
            df,
        })
    }

    /// From equivalent constant rates: `Dd = r_d_eq * T`, `Df = r_f_eq * T`.
    pub fn from_equivalent_rates(strike: f64, maturity: f64, r_d_eq: f64, r_f_eq: f64) -> Result<Self> {
        Self::new(strike, maturity, r_d_eq * maturity, r_f_eq * maturity)
    }

    /// Discounted strike `K e^{-Dd}`.
    pub fn discounted_strike(&self) -> f64 {
        self.strike * (-self.dd).exp()
    }

    /// Discounted spot `e^x e^{-Df}` for log-spot `x`.
    pub fn discounted_spot(&self, x: f64) -> f64 {
        (x - self.df).exp()
    }
}

/// Put price at log-spot `x` and integrated variance `y`.
///
/// `y = 0` is treated as a limit and returns the discounted intrinsic value;
/// `y < 0` is a domain error.
pub fn put_price_xy(ctx: &BsContext, x: f64, y: f64) -> Result<f64> {
    if y < 0.0 {
        return Err(domain(format!("integrated variance must be >= 0, got {y}")));
    }
    let kd = ctx.discounted_strike();
    let f = ctx.discounted_spot(x);
    if y == 0.0 {
        return Ok((kd - f).max(0.0));
    }
    let sy = y.sqrt();
    let m = (kd / f).ln();
    Ok(kd * norm_cdf(m / sy + 0.5 * sy) - f * norm_cdf(m / sy - 0.5 * sy))
}

/// Call price from the put via parity `C = P - K~ + F`.
pub fn call_price_xy(ctx: &BsContext, x: f64, y: f64) -> Result<f64> {
    Ok(put_price_xy(ctx, x, y)? - ctx.discounted_strike() + ctx.discounted_spot(x))
}

/// Mixed derivative `d^{i+j} P / dx^i dy^j` of the put kernel.
///
/// Supported orders: (0,1), (1,1), (2,1), (0,2), (2,2). Requires `y > 0`.
pub fn greek_xy(ctx: &BsContext, x: f64, y: f64, i: u32, j: u32) -> Result<f64> {
    if !(y > 0.0) {
        return Err(domain(format!("greeks need y > 0, got {y}")));
    }
    let kd = ctx.discounted_strike();
    let f = ctx.discounted_spot(x);
    let sy = y.sqrt();
    let s = 1.0 / sy;
    let m = (kd / f).ln();
    let z = m * s - 0.5 * sy;
    // common factor U = dP/dy = F n(z) / (2 sqrt(y))
    let u = f * norm_pdf(z) * 0.5 * s;
    let a = 1.0 + z * s;
    match (i, j) {
        (0, 1) => Ok(u),
        (1, 1) => Ok(u * a),
        (2, 1) => Ok(u * (a * a - s * s)),
        (0, 2) => Ok(u * q_poly(z, s, sy)),
        (2, 2) => {
            let q = q_poly(z, s, sy);
            let dq = s * s * z + 0.5 * s;
            let ddq = s * s;
            Ok(u * ((a * a - s * s) * q - 2.0 * s * a * dq + s * s * ddq))
        }
        _ => Err(domain(format!("unsupported greek order ({i}, {j})"))),
    }
}

/// `q(z) = dU/dy / U = (s^2 z^2 + s z - s^2) / 2` with `s = 1/sqrt(y)`.
fn q_poly(z: f64, s: f64, _sy: f64) -> f64 {
    0.5 * (s * s * z * z + s * z - s * s)
}

/// Put vega with respect to annualized volatility: `dP/dsigma = U * 2 sigma T`.
pub fn put_vega_sigma(ctx: &BsContext, x: f64, sigma: f64) -> Result<f64> {
    let y = sigma * sigma * ctx.maturity;
    Ok(greek_xy(ctx, x, y, 0, 1)? * 2.0 * sigma * ctx.maturity)
}

/// Solver bracket for the implied volatility search.
pub const IMPLIED_VOL_MIN: f64 = 1e-6;
pub const IMPLIED_VOL_MAX: f64 = 5.0;

/// Annualized implied volatility of a European put.
///
/// `price` must lie strictly inside the no-arbitrage bounds
/// `(max(K~ - F, 0), K~)`. The solver brackets sigma in
/// [`IMPLIED_VOL_MIN`, `IMPLIED_VOL_MAX`] and runs safeguarded Newton with
/// bisection fallback; the root reproduces the price to 1e-12 absolute.
pub fn implied_vol_put(
    price: f64,
    spot: f64,
    strike: f64,
    maturity: f64,
    r_d_eq: f64,
    r_f_eq: f64,
) -> Result<f64> {
    if !(spot > 0.0) {
        return Err(domain(format!("spot must be positive, got {spot}")));
    }
    let ctx = BsContext::from_equivalent_rates(strike, maturity, r_d_eq, r_f_eq)?;
    let x = spot.ln();
    let kd = ctx.discounted_strike();
    let f = ctx.discounted_spot(x);
    let lower = (kd - f).max(0.0);
    if !(price > lower) || !(price < kd) {
        return Err(domain(format!(
            "put price {price} outside no-arbitrage bounds ({lower}, {kd})"
        )));
    }

    let eval = |sigma: f64| -> f64 {
        // y > 0 on the bracket, so the unwrap cannot fire
        put_price_xy(&ctx, x, sigma * sigma * maturity).unwrap() - price
    };

    let mut lo = IMPLIED_VOL_MIN;
    let mut hi = IMPLIED_VOL_MAX;
    let flo = eval(lo);
    let fhi = eval(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(domain(format!(
            "implied volatility outside solver range [{IMPLIED_VOL_MIN}, {IMPLIED_VOL_MAX}]"
        )));
    }

    const PRICE_TOL: f64 = 1e-13;
    let mut sigma = 0.5 * (lo + hi);
    let mut fval = eval(sigma);
    for _ in 0..200 {
        if fval.abs() <= PRICE_TOL {
            return Ok(sigma);
        }
        if fval > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        // Newton step, safeguarded to remain inside the bracket
        let vega = put_vega_sigma(&ctx, x, sigma).unwrap_or(0.0);
        let mut next = if vega > 0.0 { sigma - fval / vega } else { f64::NAN };
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - sigma).abs() < 1e-16 * sigma.max(1e-6) {
            sigma = next;
            fval = eval(sigma);
            if fval.abs() <= PRICE_TOL * 10.0 {
                return Ok(sigma);
            }
            break;
        }
        sigma = next;
        fval = eval(sigma);
    }
    if fval.abs() <= 1e-10 {
        return Ok(sigma);
    }
    Err(crate::error::Error::NoConvergence(format!(
        "implied vol solver stalled at sigma = {sigma}, residual {fval}"
    )))
}

/// Implied volatility of a call, by converting to the parity-equivalent put.
pub fn implied_vol_call(
    price: f64,
    spot: f64,
    strike: f64,
    maturity: f64,
    r_d_eq: f64,
    r_f_eq: f64,
) -> Result<f64> {
    let ctx = BsContext::from_equivalent_rates(strike, maturity, r_d_eq, r_f_eq)?;
    let put = price + ctx.discounted_strike() - ctx.discounted_spot(spot.ln());
    implied_vol_put(put, spot, strike, maturity, r_d_eq, r_f_eq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx(k: f64) -> BsContext {
        BsContext::new(k, 1.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn put_intrinsic_at_zero_variance() {
        let c = ctx(1.2);
        assert_relative_eq!(put_price_xy(&c, 0.0, 0.0).unwrap(), 0.2, epsilon = 1e-15);
        // deep OTM side
        let c2 = ctx(0.8);
        assert_eq!(put_price_xy(&c2, 0.0, 0.0).unwrap(), 0.0);
        // tiny y approaches the intrinsic limit
        assert_relative_eq!(
            put_price_xy(&c, 0.0, 1e-300).unwrap(),
            0.2,
            epsilon = 1e-14
        );
    }

    #[test]
    fn put_rejects_negative_variance() {
        assert!(put_price_xy(&ctx(1.0), 0.0, -1e-12).is_err());
    }

    #[test]
    fn put_matches_frozen_reference() {
        // x = log(100), K = 100, Dd = Df = 0, y = 0.04; reference computed
        // with a 50-digit normal CDF before the build.
        let c = ctx(100.0);
        let p = put_price_xy(&c, 100f64.ln(), 0.04).unwrap();
        assert_relative_eq!(p, BS_PUT_REF, max_relative = 1e-12);
    }

    // independent high-precision reference for the case above
    const BS_PUT_REF: f64 = 7.965567455405796;

    #[test]
    fn put_call_parity() {
        for &(x, y, k, dd, df) in &[
            (0.0, 0.04, 1.1, 0.0, 0.0),
            (4.6, 0.09, 102.0, 0.002, 0.005),
            (-0.2, 0.5, 0.9, -0.001, 0.01),
        ] {
            let c = BsContext::new(k, 1.0, dd, df).unwrap();
            let put = put_price_xy(&c, x, y).unwrap();
            let call = call_price_xy(&c, x, y).unwrap();
            assert_relative_eq!(
                put - call,
                c.discounted_strike() - c.discounted_spot(x),
                epsilon = 1e-15,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn put_monotone_in_variance() {
        let c = ctx(1.1);
        let mut prev = put_price_xy(&c, 0.0, 0.0).unwrap();
        for i in 1..=60 {
            let y = i as f64 * 0.01;
            let p = put_price_xy(&c, 0.0, y).unwrap();
            assert!(p >= prev - 1e-15);
            prev = p;
        }
    }

    #[test]
    fn greek_identity_point() {
        // dP/dy = (d2P/dx2 - dP/dx) / 2 at (x=0, y=0.09, K=1, D=0);
        // the x-derivatives follow from the closed forms:
        //   dP/dx = -F N(z), d2P/dx2 = -F N(z) + F n(z) / sqrt(y)
        let c = ctx(1.0);
        let (x, y) = (0.0f64, 0.09f64);
        let f = c.discounted_spot(x);
        let z = (c.discounted_strike() / f).ln() / y.sqrt() - 0.5 * y.sqrt();
        let px = -f * norm_cdf(z);
        let pxx = px + f * norm_pdf(z) / y.sqrt();
        let py = greek_xy(&c, x, y, 0, 1).unwrap();
        assert_relative_eq!(py, 0.5 * (pxx - px), max_relative = 1e-12);
    }

    #[test]
    fn deep_itm_dy_vanishes() {
        let c = ctx(1.0);
        let y = 0.04f64;
        let x = c.strike.ln() - 10.0 * y.sqrt();
        assert!(greek_xy(&c, x, y, 0, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn greeks_match_frozen_reference_values() {
        // all five orders at (x = 0, y = 0.04, K = 1.1, D = 0), frozen from
        // 50-digit finite differences of the kernel before the build
        let c = ctx(1.1);
        let (x, y) = (0.0, 0.04);
        let refs = [
            (0, 1, 0.9290961091485833),
            (1, 1, 2.6783559850355444),
            (2, 1, -15.506359973353626),
            (0, 2, -9.092357979194585),
            (2, 2, 413.34079817889437),
        ];
        for &(i, j, expected) in &refs {
            let exact = greek_xy(&c, x, y, i, j).unwrap();
            assert_relative_eq!(exact, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn greek_rejects_bad_orders_and_variance() {
        let c = ctx(1.0);
        assert!(greek_xy(&c, 0.0, 0.04, 1, 2).is_err());
        assert!(greek_xy(&c, 0.0, 0.04, 3, 1).is_err());
        assert!(greek_xy(&c, 0.0, 0.04, 0, 0).is_err());
        assert!(greek_xy(&c, 0.0, 0.0, 0, 1).is_err());
        assert!(greek_xy(&c, 0.0, -0.1, 0, 1).is_err());
    }

    #[test]
    fn implied_vol_round_trip() {
        let (spot, k, t, rd, rf) = (1.0f64, 1.05, 0.5, 0.01, 0.02);
        let ctx = BsContext::from_equivalent_rates(k, t, rd, rf).unwrap();
        let price = put_price_xy(&ctx, spot.ln(), 0.2f64.powi(2) * t).unwrap();
        let vol = implied_vol_put(price, spot, k, t, rd, rf).unwrap();
        assert_relative_eq!(vol, 0.20, epsilon = 1e-10);
    }

    #[test]
    fn implied_vol_identity_across_sigma_range() {
        let (spot, k, t, rd, rf) = (1.0f64, 0.97, 0.75, 0.005, 0.015);
        let ctx = BsContext::from_equivalent_rates(k, t, rd, rf).unwrap();
        for i in 0..=99 {
            let sigma = 0.01 + 0.99 * i as f64 / 99.0;
            let price = put_price_xy(&ctx, spot.ln(), sigma * sigma * t).unwrap();
            let back = implied_vol_put(price, spot, k, t, rd, rf).unwrap();
            assert_relative_eq!(back, sigma, epsilon = 1e-9);
        }
    }

    #[test]
    fn implied_vol_rejects_bound_prices() {
        // K chosen so the intrinsic value 0.25 is exact in binary
        let (spot, k, t) = (1.0, 1.25, 0.25);
        // price exactly at the lower bound
        assert!(implied_vol_put(0.25, spot, k, t, 0.0, 0.0).is_err());
        // below lower bound
        assert!(implied_vol_put(0.24, spot, k, t, 0.0, 0.0).is_err());
        // at/above upper bound
        assert!(implied_vol_put(1.25, spot, k, t, 0.0, 0.0).is_err());
        assert!(implied_vol_put(1.30, spot, k, t, 0.0, 0.0).is_err());
    }

    #[test]
    fn implied_vol_audusd_1m_atm() {
        // AUD/USD 1M ATM: S0 = 0.9335, K = 0.9356, vol 6.38%,
        // r_d = 0.21%, r_f = 2.80%, T = 1/12
        let (spot, k, t, rd, rf) = (0.9335f64, 0.9356, 1.0 / 12.0, 0.0021, 0.0280);
        let ctx = BsContext::from_equivalent_rates(k, t, rd, rf).unwrap();
        let price = put_price_xy(&ctx, spot.ln(), 0.0638f64.powi(2) * t).unwrap();
        let vol = implied_vol_put(price, spot, k, t, rd, rf).unwrap();
        assert_relative_eq!(vol, 0.0638, epsilon = 1e-10);
    }

    #[test]
    fn convex_in_spot() {
        // second differences of P against e^x are nonnegative on a grid
        let c = ctx(1.0);
        let y = 0.09;
        let n = 200;
        let prices: Vec<f64> = (0..=n)
            .map(|i| {
                let spot = 0.5 + 1.5 * i as f64 / n as f64;
                put_price_xy(&c, spot.ln(), y).unwrap()
            })
            .collect();
        for w in prices.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10);
        }
    }
}
