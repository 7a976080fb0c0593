//! JSON file schemas: market data inputs and calibrated parameter files.
//!
//! Vols and rates are stored as decimals (0.0638, not 6.38); tenor labels are
//! display-only, `maturity_years` is authoritative. All numeric output uses
//! the shortest round-trip float representation, so a written file re-read
//! reproduces every number bit-exactly.

use crate::calibration::{
    CalibrationResult, ErrorStats, Quote, QuoteFit, QuoteLabel, Slice, VolSurface,
};
use crate::error::{invalid, Error, Result};
use crate::termstructure::{ModelState, ParamSchedule, RateCurve, TimeGrid};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Year fraction of a standard tenor label (simple-fraction convention:
/// 1M = 1/12, 2M = 2/12, 3M = 0.25, 6M = 0.5, 1Y = 1).
pub fn tenor_years(label: &str) -> Option<f64> {
    match label {
        "1M" => Some(1.0 / 12.0),
        "2M" => Some(2.0 / 12.0),
        "3M" => Some(0.25),
        "6M" => Some(0.5),
        "9M" => Some(0.75),
        "1Y" => Some(1.0),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketQuote {
    pub label: QuoteLabel,
    pub strike: f64,
    pub vol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketSlice {
    pub tenor: String,
    pub maturity_years: f64,
    pub r_d_eq: f64,
    pub r_f_eq: f64,
    pub quotes: Vec<MarketQuote>,
}

/// Market data file: spot, day-count tag and one slice per maturity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarketDataFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
    pub spot: f64,
    pub day_count: String,
    pub slices: Vec<MarketSlice>,
}

impl MarketDataFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("market data parse error: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::InvalidData(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("market data serializes")
    }

    /// Validate and convert into a [`VolSurface`].
    pub fn to_surface(&self) -> Result<VolSurface> {
        let slices = self
            .slices
            .iter()
            .map(|s| Slice {
                maturity: s.maturity_years,
                r_d_eq: s.r_d_eq,
                r_f_eq: s.r_f_eq,
                quotes: s
                    .quotes
                    .iter()
                    .map(|q| Quote {
                        label: q.label,
                        strike: q.strike,
                        vol: q.vol,
                    })
                    .collect(),
            })
            .collect();
        VolSurface::new(self.spot, slices)
    }
}

/// Piecewise-constant parameter block of a params file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleDef {
    pub boundaries: Vec<f64>,
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ScheduleDef {
    pub fn to_schedule(&self) -> Result<ParamSchedule> {
        ParamSchedule::new(
            TimeGrid::new(self.boundaries.clone())?,
            self.kappa.clone(),
            self.theta.clone(),
            self.lambda.clone(),
            self.rho.clone(),
        )
    }

    pub fn from_schedule(s: &ParamSchedule) -> Self {
        Self {
            boundaries: s.grid().boundaries().to_vec(),
            kappa: s.kappa().to_vec(),
            theta: s.theta().to_vec(),
            lambda: s.lambda().to_vec(),
            rho: s.rho().to_vec(),
        }
    }
}

/// Equivalent-rate block of a params file (same quoting convention as the
/// market data tables).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesDef {
    pub maturities: Vec<f64>,
    pub r_d_eq: Vec<f64>,
    pub r_f_eq: Vec<f64>,
}

impl RatesDef {
    pub fn domestic_curve(&self) -> Result<RateCurve> {
        RateCurve::from_equivalent_rates(&self.maturities, &self.r_d_eq)
    }

    pub fn foreign_curve(&self) -> Result<RateCurve> {
        RateCurve::from_equivalent_rates(&self.maturities, &self.r_f_eq)
    }
}

/// Calibrated (or published) model parameters, self-contained for pricing:
/// spot, initial volatility, parameter schedule and rate curves. Fit details
/// are optional so hand-written parameter files stay minimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsFile {
    pub name: String,
    pub spot: f64,
    pub v0: f64,
    pub schedule: ScheduleDef,
    pub rates: RatesDef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<Vec<QuoteFit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<ErrorStats>,
}

impl ParamsFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamsFile =
            serde_json::from_str(text).map_err(|e| invalid(format!("params parse error: {e}")))?;
        file.validate()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::InvalidData(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params file serializes")
    }

    fn validate(&self) -> Result<()> {
        self.state()?;
        self.schedule.to_schedule()?;
        self.rates.domestic_curve()?;
        self.rates.foreign_curve()?;
        Ok(())
    }

    pub fn state(&self) -> Result<ModelState> {
        ModelState::new(self.spot, self.v0)
    }

    pub fn schedule(&self) -> Result<ParamSchedule> {
        self.schedule.to_schedule()
    }

    /// Integrated domestic and foreign rates to `maturity`.
    pub fn discounts(&self, maturity: f64) -> Result<(f64, f64)> {
        let dd = self.rates.domestic_curve()?.integral(0.0, maturity)?;
        let df = self.rates.foreign_curve()?.integral(0.0, maturity)?;
        Ok((dd, df))
    }

    /// Bundle a calibration result with its market context.
    pub fn from_result(name: &str, spot: f64, rates: RatesDef, result: &CalibrationResult) -> Self {
        Self {
            name: name.to_string(),
            spot,
            v0: result.v0,
            schedule: ScheduleDef::from_schedule(&result.schedule),
            rates,
            converged: Some(result.converged),
            fit: Some(result.quote_fits.clone()),
            stats: Some(result.stats),
        }
    }
}

/// Rates block extracted from a market data file.
pub fn rates_from_market(file: &MarketDataFile) -> RatesDef {
    RatesDef {
        maturities: file.slices.iter().map(|s| s.maturity_years).collect(),
        r_d_eq: file.slices.iter().map(|s| s.r_d_eq).collect(),
        r_f_eq: file.slices.iter().map(|s| s.r_f_eq).collect(),
    }
}
