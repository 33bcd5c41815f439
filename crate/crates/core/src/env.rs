//! One-step contextual bidding environment.
//!
//! A reset samples a historical day, a random battery context, and a scenario
//! set. The agent sees scaled forecasts plus battery context, answers with a
//! fraction of the wind forecast to commit day-ahead, and receives the
//! normalized second-stage optimum as its single reward.

use crate::data::DataSet;
use crate::market::{
    solve_second_stage, BatteryContext, BidVector, MarketDay, ModelConfig, ModelError, ScenarioSet,
};
use crate::scenario::{
    generate_scenarios_from_speeds, speed_to_power, NoiseModels, PenaltyConfig, ScenarioError,
};
use crate::simplex::SimplexStatus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("data exhausted: the data source holds no complete day")]
    DataExhausted,
    #[error("action has length {got}, horizon is {expected}")]
    ActionLength { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("second stage ended {0:?} on a sampled episode")]
    NotOptimal(SimplexStatus),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("episode file error: {0}")]
    Format(#[from] serde_json::Error),
}

/// Flat observation vector of length 3T+5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Fraction of the forecast to commit, per hour, in `[0,1]` after clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action(pub Vec<f64>);

impl Action {
    pub fn clipped(mut self) -> Action {
        for a in self.0.iter_mut() {
            *a = a.clamp(0.0, 1.0);
        }
        self
    }
}

/// Closed sampling interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.hi > self.lo {
            rng.gen_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }

    fn valid(&self) -> bool {
        self.lo <= self.hi && self.lo.is_finite() && self.hi.is_finite()
    }
}

/// Randomization ranges for the per-episode battery context.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatteryRanges {
    /// e_max as a multiple of four mean forecast hours.
    pub e_max_scale: Range,
    /// e_init as a fraction of [e_min, e_max].
    pub e_init_frac: Range,
    /// e_final as a fraction of [e_min, e_init].
    pub e_final_frac: Range,
    /// Charge/discharge rate as a fraction of rated power (shared draw).
    pub p_rate_frac: Range,
    pub eta_ch: Range,
    pub eta_dis: Range,
}

impl Default for BatteryRanges {
    fn default() -> Self {
        Self {
            e_max_scale: Range::new(0.25, 2.0),
            e_init_frac: Range::new(0.0, 1.0),
            e_final_frac: Range::new(0.0, 1.0),
            p_rate_frac: Range::new(0.1, 0.5),
            eta_ch: Range::new(0.85, 1.0),
            eta_dis: Range::new(0.85, 1.0),
        }
    }
}

impl BatteryRanges {
    /// All-zero battery on every episode.
    pub fn disabled() -> Self {
        Self {
            e_max_scale: Range::fixed(0.0),
            e_init_frac: Range::fixed(0.0),
            e_final_frac: Range::fixed(0.0),
            p_rate_frac: Range::fixed(0.0),
            eta_ch: Range::fixed(1.0),
            eta_dis: Range::fixed(1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub battery: BatteryRanges,
    pub n_scenarios: usize,
    pub penalties: PenaltyConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            battery: BatteryRanges::default(),
            n_scenarios: 10,
            penalties: PenaltyConfig::default(),
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), String> {
        let r = &self.battery;
        for (name, range) in [
            ("e_max_scale", r.e_max_scale),
            ("e_init_frac", r.e_init_frac),
            ("e_final_frac", r.e_final_frac),
            ("p_rate_frac", r.p_rate_frac),
            ("eta_ch", r.eta_ch),
            ("eta_dis", r.eta_dis),
        ] {
            if !range.valid() {
                return Err(format!("range {name} invalid: [{}, {}]", range.lo, range.hi));
            }
        }
        if r.eta_ch.lo <= 0.0 || r.eta_dis.lo <= 0.0 {
            return Err("efficiency ranges must be positive".into());
        }
        if self.n_scenarios == 0 {
            return Err("need at least one scenario".into());
        }
        Ok(())
    }
}

/// Everything `step` needs to replay an episode exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeState {
    pub day: MarketDay,
    pub battery: BatteryContext,
    pub scenarios: ScenarioSet,
    pub seed: u64,
}

impl EpisodeState {
    pub fn save_json(&self, path: &Path) -> Result<(), EnvError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, EnvError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub reward: f64,
    /// Always true: episodes are single-step.
    pub done: bool,
    /// Set when the normalization denominator vanished (calm day).
    pub degenerate: bool,
    /// Raw second-stage objective behind the reward.
    pub objective: f64,
    pub denominator: f64,
}

pub struct Environment {
    pub data: DataSet,
    pub models: NoiseModels,
    pub episode: EpisodeConfig,
    pub model_config: ModelConfig,
}

impl Environment {
    pub fn new(
        data: DataSet,
        models: NoiseModels,
        episode: EpisodeConfig,
        model_config: ModelConfig,
    ) -> Self {
        Self { data, models, episode, model_config }
    }

    pub fn horizon(&self) -> usize {
        self.data.days.first().map(|d| d.da_price.len()).unwrap_or(24)
    }

    /// Samples a day, a battery context, and a scenario set. Deterministic per
    /// seed.
    pub fn reset(&self, seed: u64) -> Result<(Observation, EpisodeState), EnvError> {
        if self.data.days.is_empty() {
            return Err(EnvError::DataExhausted);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let day_idx = rng.gen_range(0..self.data.days.len());
        let record = &self.data.days[day_idx];
        let curve = &self.models.curve;
        let forecast_power: Vec<f64> =
            record.wind_speed.iter().map(|v| speed_to_power(curve, *v)).collect();
        let day = MarketDay {
            da_price: record.da_price.clone(),
            rt_price_forecast: record.rt_price.clone(),
            wind_forecast: forecast_power.clone(),
        };

        let ranges = &self.episode.battery;
        let mean_fc = forecast_power.iter().sum::<f64>() / forecast_power.len().max(1) as f64;
        let e_max = ranges.e_max_scale.sample(&mut rng) * 4.0 * mean_fc;
        let e_min = 0.0;
        let e_init = e_min + ranges.e_init_frac.sample(&mut rng) * (e_max - e_min);
        let e_final = e_min + ranges.e_final_frac.sample(&mut rng) * (e_init - e_min);
        let p_rate = ranges.p_rate_frac.sample(&mut rng) * curve.rated_power;
        let battery = BatteryContext {
            e_min,
            e_max,
            e_init,
            e_final,
            p_ch_max: p_rate,
            p_dis_max: p_rate,
            eta_ch: ranges.eta_ch.sample(&mut rng),
            eta_dis: ranges.eta_dis.sample(&mut rng),
        };

        let scenario_seed: u64 = rng.gen();
        let scenarios = generate_scenarios_from_speeds(
            &day,
            &record.wind_speed,
            &self.models.price,
            &self.models.wind,
            curve,
            &self.episode.penalties,
            self.episode.n_scenarios,
            scenario_seed,
        )?;

        let state = EpisodeState { day, battery, scenarios, seed };
        let obs = self.observe(&state);
        Ok((obs, state))
    }

    /// Scaled observation: prices /100, wind /rated_power, battery energies
    /// /e_max (capacity itself /rated_power), efficiencies raw.
    pub fn observe(&self, state: &EpisodeState) -> Observation {
        let horizon = state.day.horizon();
        let rated = self.models.curve.rated_power;
        let e_scale = state.battery.e_max.max(1e-9);
        let mut v = Vec::with_capacity(3 * horizon + 5);
        v.extend(state.day.da_price.iter().map(|p| p / 100.0));
        v.extend(state.day.wind_forecast.iter().map(|g| g / rated));
        v.extend(state.day.rt_price_forecast.iter().map(|p| p / 100.0));
        v.push(state.battery.e_init / e_scale);
        v.push(state.battery.e_final / e_scale);
        v.push(state.battery.e_max / rated);
        v.push(state.battery.eta_ch);
        v.push(state.battery.eta_dis);
        debug_assert_eq!(v.len(), 3 * horizon + 5);
        debug_assert!(v.iter().all(|x| x.is_finite()));
        Observation(v)
    }

    /// Turns the action into a bid, solves the second stage, and normalizes.
    pub fn step(&self, state: &EpisodeState, action: Action) -> Result<StepOutcome, EnvError> {
        let horizon = state.day.horizon();
        if action.0.len() != horizon {
            return Err(EnvError::ActionLength { expected: horizon, got: action.0.len() });
        }
        let action = action.clipped();
        let bid = BidVector {
            p_da: action.0.iter().zip(&state.day.wind_forecast).map(|(a, g)| a * g).collect(),
        };
        let report = solve_second_stage(
            &state.day,
            &state.battery,
            &state.scenarios,
            &bid,
            &self.model_config,
        )?;
        if report.status != SimplexStatus::Optimal {
            return Err(EnvError::NotOptimal(report.status));
        }

        let n = state.scenarios.n_scenarios() as f64;
        let mut denominator = 0.0;
        for (w, wind) in state.scenarios.wind.iter().enumerate() {
            for (t, g) in wind.iter().enumerate() {
                denominator += g * state.day.da_price[t].max(state.scenarios.rt_price[w][t]);
            }
        }
        denominator /= n;

        if denominator.abs() <= 1e-9 {
            return Ok(StepOutcome {
                reward: 0.0,
                done: true,
                degenerate: true,
                objective: report.objective,
                denominator,
            });
        }
        Ok(StepOutcome {
            reward: report.objective / denominator,
            done: true,
            degenerate: false,
            objective: report.objective,
            denominator,
        })
    }
}
