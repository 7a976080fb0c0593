//! Long-run volatility distributions.
//!
//! With constant parameters and `beta = 2 kappa / lambda^2`, the model's
//! volatility converges to an inverse gamma law with shape `1 + beta` and
//! scale `beta theta`; the Heston volatility (square root of the CIR
//! variance) converges to a generalized chi law with `a = 0`,
//! `b = 1/sqrt(2 beta)` and `nu = 2 beta theta`. Only `(beta, theta)` are
//! identifiable from the stationary law; kappa and lambda enter through
//! `beta` alone.

use crate::error::{domain, Result};
use serde::{Deserialize, Serialize};

/// `2 kappa theta / lambda^2`, the Feller ratio (variance stays positive in
/// the Heston model iff it exceeds one).
pub fn feller_ratio(kappa: f64, theta: f64, lambda: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Err(domain("Feller ratio undefined at lambda = 0"));
    }
    Ok(2.0 * kappa * theta / (lambda * lambda))
}

/// Stationary inverse gamma law of the volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IgaStationary {
    /// Shape `alpha = 1 + beta`.
    pub alpha: f64,
    /// Scale `beta theta`.
    pub scale: f64,
}

impl IgaStationary {
    pub fn from_beta_theta(beta: f64, theta: f64) -> Result<Self> {
        if !(beta > 0.0) || !(theta > 0.0) {
            return Err(domain(format!(
                "need beta > 0 and theta > 0, got beta = {beta}, theta = {theta}"
            )));
        }
        Ok(Self {
            alpha: 1.0 + beta,
            scale: beta * theta,
        })
    }

    pub fn from_kappa_theta_lambda(kappa: f64, theta: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(domain("stationary law needs lambda > 0"));
        }
        Self::from_beta_theta(2.0 * kappa / (lambda * lambda), theta)
    }

    pub fn beta(&self) -> f64 {
        self.alpha - 1.0
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(domain(format!("inverse gamma density needs x > 0, got {x}")));
        }
        Ok(self.alpha * self.scale.ln() - libm::lgamma(self.alpha)
            - (self.alpha + 1.0) * x.ln()
            - self.scale / x)
    }

    /// `p(x) = scale^alpha / Gamma(alpha) x^{-alpha-1} e^{-scale/x}`,
    /// evaluated in log space.
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Long-run mean `theta` (exists for `beta > 0`).
    pub fn mean(&self) -> f64 {
        self.scale / (self.alpha - 1.0)
    }

    /// Long-run variance `theta^2 / (beta - 1)` (exists for `beta > 1`).
    pub fn variance(&self) -> Result<f64> {
        if self.alpha <= 2.0 {
            return Err(domain("variance needs beta > 1"));
        }
        let m = self.mean();
        Ok(m * m / (self.alpha - 2.0))
    }
}

/// Stationary generalized chi law of the Heston volatility `sqrt(V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonVolStationary {
    /// Scale `b = 1/sqrt(2 beta)`.
    pub b: f64,
    /// Degrees of freedom `nu = 2 beta theta`.
    pub nu: f64,
}

impl HestonVolStationary {
    pub fn from_beta_theta(beta: f64, theta: f64) -> Result<Self> {
        if !(beta > 0.0) || !(theta > 0.0) {
            return Err(domain(format!(
                "need beta > 0 and theta > 0, got beta = {beta}, theta = {theta}"
            )));
        }
        Ok(Self {
            b: 1.0 / (2.0 * beta).sqrt(),
            nu: 2.0 * beta * theta,
        })
    }

    pub fn from_kappa_theta_lambda(kappa: f64, theta: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(domain("stationary law needs lambda > 0"));
        }
        Self::from_beta_theta(2.0 * kappa / (lambda * lambda), theta)
    }

    /// Gamma shape of the underlying variance, `beta theta` (the Feller
    /// quantity of the matched Heston parameters).
    pub fn gamma_shape(&self) -> f64 {
        0.5 * self.nu
    }

    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(domain(format!(
                "generalized chi density needs x > 0, got {x}"
            )));
        }
        let r = x / self.b;
        Ok(-(0.5 * self.nu - 1.0) * std::f64::consts::LN_2 - self.b.ln()
            - libm::lgamma(0.5 * self.nu)
            + (self.nu - 1.0) * r.ln()
            - 0.5 * r * r)
    }

    /// `p(x) = (x/b)^{nu-1} e^{-(x/b)^2/2} / (2^{nu/2-1} b Gamma(nu/2))`.
    ///
    /// For `nu < 1` the density diverges (integrably) as `x -> 0+`; the
    /// pointwise value for `x > 0` is still finite and is what's returned.
    pub fn density(&self, x: f64) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Long-run mean `Gamma(k + 1/2) / Gamma(k) * b * sqrt(2)` with
    /// `k = beta theta`.
    pub fn mean(&self) -> f64 {
        let k = self.gamma_shape();
        (libm::lgamma(k + 0.5) - libm::lgamma(k)).exp() * self.b * std::f64::consts::SQRT_2
    }

    /// Long-run second moment `theta`.
    pub fn second_moment(&self) -> f64 {
        self.nu * self.b * self.b
    }
}

/// Moment-matched stationary parameters for both models, sharing the target
/// mean and standard deviation of the volatility.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MatchedPair {
    pub mean: f64,
    pub std: f64,
    pub iga_beta: f64,
    pub iga_theta: f64,
    pub heston_beta: f64,
    pub heston_theta: f64,
    /// `2 kappa theta / lambda^2 = beta theta` of the matched Heston law.
    pub heston_feller: f64,
}

impl MatchedPair {
    pub fn iga(&self) -> IgaStationary {
        IgaStationary::from_beta_theta(self.iga_beta, self.iga_theta).unwrap()
    }

    pub fn heston(&self) -> HestonVolStationary {
        HestonVolStationary::from_beta_theta(self.heston_beta, self.heston_theta).unwrap()
    }
}

/// Match both stationary laws to a target volatility mean and standard
/// deviation.
///
/// Inverse gamma closes in one line (`theta = mean`,
/// `beta = 1 + mean^2/std^2`); the Heston side sets `theta = mean^2 + std^2`
/// and solves the Gamma-ratio mean equation
/// `Gamma(k+1/2)/(Gamma(k) sqrt(k)) = mean/sqrt(theta)` for `k = beta theta`
/// by bisection to 1e-10.
pub fn match_moments(mean: f64, std: f64) -> Result<MatchedPair> {
    if !(mean > 0.0) || !(std > 0.0) {
        return Err(domain(format!(
            "need mean > 0 and std > 0, got mean = {mean}, std = {std}"
        )));
    }
    let iga_beta = 1.0 + mean * mean / (std * std);
    let heston_theta = mean * mean + std * std;
    let target = mean / heston_theta.sqrt(); // in (0, 1)

    let ratio = |k: f64| (libm::lgamma(k + 0.5) - libm::lgamma(k) - 0.5 * k.ln()).exp();
    let (mut lo, mut hi) = (1e-4, 1e4);
    if ratio(lo) > target || ratio(hi) < target {
        return Err(domain(format!(
            "moment targets (mean = {mean}, std = {std}) unattainable for the Heston volatility"
        )));
    }
    // the ratio is monotone increasing on the bracket
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * hi.max(1.0) {
            break;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok(MatchedPair {
        mean,
        std,
        iga_beta,
        iga_theta: mean,
        heston_beta: k / heston_theta,
        heston_theta,
        heston_feller: k,
    })
}

/// Density curves for one matched pair, on a fixed evaluation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityCurves {
    pub pair: MatchedPair,
    pub x: Vec<f64>,
    pub iga: Vec<f64>,
    pub heston: Vec<f64>,
}

/// Number of grid points emitted by [`density_curves`].
pub const DENSITY_GRID_POINTS: usize = 2000;
/// Evaluation range of the emitted density grid.
pub const DENSITY_GRID_RANGE: (f64, f64) = (1e-4, 1.2);

/// Tabulate both matched densities on the standard emission grid.
pub fn density_curves(mean: f64, std: f64) -> Result<DensityCurves> {
    let pair = match_moments(mean, std)?;
    let iga = pair.iga();
    let heston = pair.heston();
    let (a, b) = DENSITY_GRID_RANGE;
    let n = DENSITY_GRID_POINTS;
    let mut xs = Vec::with_capacity(n);
    let mut di = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        xs.push(x);
        di.push(iga.density(x)?);
        dh.push(heston.density(x)?);
    }
    Ok(DensityCurves {
        pair,
        x: xs,
        iga: di,
        heston: dh,
    })
}
