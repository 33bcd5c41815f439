//! Scenario generation: forecasts perturbed by ARMA noise paths.
//!
//! Real-time price noise is additive on the price; wind noise is additive on
//! wind speed before the power curve. Penalty prices are derived from each
//! scenario's realized RT price (under-production must always cost more than
//! the RT revenue it frees up).

use crate::arma::{sample_noise, ArmaModel};
use crate::market::{MarketDay, ScenarioSet};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid power curve: {0}")]
    InvalidCurve(String),
    #[error("scenario count must be at least 1")]
    NoScenarios,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model file error: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported model file version {0}")]
    Version(u32),
}

/// Turbine power curve: zero below cut-in and at/after cut-out, rated on the
/// plateau, cubic ramp in between.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerCurve {
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_power: f64,
}

impl Default for PowerCurve {
    fn default() -> Self {
        Self { cut_in: 3.0, rated_speed: 12.0, cut_out: 25.0, rated_power: 400.0 }
    }
}

impl PowerCurve {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(0.0 < self.cut_in && self.cut_in < self.rated_speed && self.rated_speed < self.cut_out)
        {
            return Err(ScenarioError::InvalidCurve(format!(
                "need 0 < cut_in < rated_speed < cut_out, got {} / {} / {}",
                self.cut_in, self.rated_speed, self.cut_out
            )));
        }
        if self.rated_power <= 0.0 {
            return Err(ScenarioError::InvalidCurve(format!(
                "rated power {} must be positive",
                self.rated_power
            )));
        }
        Ok(())
    }

    /// Inverse on [0, rated_power]; the plateau maps to `rated_speed` and
    /// zero power maps to zero speed.
    pub fn speed_for_power(&self, power: f64) -> f64 {
        if power <= 0.0 {
            0.0
        } else if power >= self.rated_power {
            self.rated_speed
        } else {
            let ci3 = self.cut_in.powi(3);
            let rs3 = self.rated_speed.powi(3);
            (ci3 + power / self.rated_power * (rs3 - ci3)).cbrt()
        }
    }
}

/// Converts a wind speed (m/s) to electrical power (MW).
pub fn speed_to_power(curve: &PowerCurve, speed: f64) -> f64 {
    if speed < curve.cut_in || speed >= curve.cut_out {
        0.0
    } else if speed >= curve.rated_speed {
        curve.rated_power
    } else {
        let ci3 = curve.cut_in.powi(3);
        let rs3 = curve.rated_speed.powi(3);
        curve.rated_power * (speed.powi(3) - ci3) / (rs3 - ci3)
    }
}

/// Penalty-price construction: λ^up = κ_up·max(λ^RT, 0) + floor_up and
/// λ^op = κ_op·max(λ^RT, 0), clamping handles negative LMPs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub kappa_up: f64,
    pub floor_up: f64,
    pub kappa_op: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self { kappa_up: 1.5, floor_up: 5.0, kappa_op: 0.5 }
    }
}

impl PenaltyConfig {
    pub fn up_price(&self, rt: f64) -> f64 {
        self.kappa_up * rt.max(0.0) + self.floor_up
    }

    pub fn op_price(&self, rt: f64) -> f64 {
        self.kappa_op * rt.max(0.0)
    }
}

/// Samples a scenario set around the day's forecasts. The wind-speed forecast
/// is recovered by inverting the power curve on the forecast power; when the
/// true speed series is at hand prefer [`generate_scenarios_from_speeds`].
pub fn generate_scenarios(
    day: &MarketDay,
    price_model: &ArmaModel,
    wind_model: &ArmaModel,
    curve: &PowerCurve,
    penalties: &PenaltyConfig,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    let speeds: Vec<f64> = day.wind_forecast.iter().map(|p| curve.speed_for_power(*p)).collect();
    generate_scenarios_from_speeds(day, &speeds, price_model, wind_model, curve, penalties, n, seed)
}

/// Like [`generate_scenarios`] but with an explicit wind-speed forecast.
#[allow(clippy::too_many_arguments)]
pub fn generate_scenarios_from_speeds(
    day: &MarketDay,
    speed_forecast: &[f64],
    price_model: &ArmaModel,
    wind_model: &ArmaModel,
    curve: &PowerCurve,
    penalties: &PenaltyConfig,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::NoScenarios);
    }
    curve.validate()?;
    let horizon = day.horizon();
    let prob = vec![1.0 / n as f64; n];
    let mut wind = Vec::with_capacity(n);
    let mut rt_price = Vec::with_capacity(n);
    let mut up_price = Vec::with_capacity(n);
    let mut op_price = Vec::with_capacity(n);
    for w in 0..n {
        // Independent per-scenario streams for the two noise sources.
        let price_noise = sample_noise(price_model, horizon, seed.wrapping_add(2 * w as u64));
        let wind_noise = sample_noise(wind_model, horizon, seed.wrapping_add(2 * w as u64 + 1));
        let rt: Vec<f64> =
            day.rt_price_forecast.iter().zip(&price_noise).map(|(fc, e)| fc + e).collect();
        let g: Vec<f64> = speed_forecast
            .iter()
            .zip(&wind_noise)
            .map(|(v, e)| speed_to_power(curve, (v + e).max(0.0)))
            .collect();
        up_price.push(rt.iter().map(|p| penalties.up_price(*p)).collect());
        op_price.push(rt.iter().map(|p| penalties.op_price(*p)).collect());
        rt_price.push(rt);
        wind.push(g);
    }
    Ok(ScenarioSet { prob, wind, rt_price, up_price, op_price })
}

/// Fitted noise models plus the power curve, produced by `fit-noise` and
/// consumed by training/evaluation. Serialized as a versioned JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseModels {
    pub version: u32,
    pub price: ArmaModel,
    pub wind: ArmaModel,
    pub curve: PowerCurve,
}

pub const NOISE_MODELS_VERSION: u32 = 1;

impl NoiseModels {
    pub fn new(price: ArmaModel, wind: ArmaModel, curve: PowerCurve) -> Self {
        Self { version: NOISE_MODELS_VERSION, price, wind, curve }
    }

    /// Models whose noise paths are identically zero (scenarios == forecast).
    pub fn silent(curve: PowerCurve) -> Self {
        Self::new(ArmaModel::silent(), ArmaModel::silent(), curve)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScenarioError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)?;
        let models: NoiseModels = serde_json::from_str(&text)?;
        if models.version != NOISE_MODELS_VERSION {
            return Err(ScenarioError::Version(models.version));
        }
        Ok(models)
    }
}
