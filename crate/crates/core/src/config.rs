//! Flat key=value run configuration with dotted module prefixes.
//!
//! Defaults encode the reference experiment: T=24, 10 scenarios at 0.1 each,
//! ARMA(5,2) price noise and AR(3) wind noise, 3x16 networks, 500k training
//! steps, 2000 evaluation episodes. Every module's invariants are re-validated
//! at load time.

use crate::ddpg::AgentConfig;
use crate::env::{BatteryRanges, EpisodeConfig, Range};
use crate::market::{DischargeConvention, ModelConfig, UpCap};
use crate::scenario::{PenaltyConfig, PowerCurve};
use crate::simplex::SimplexOptions;
use serde::Serialize;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {detail}")]
    Parse { path: String, line: usize, detail: String },
    #[error("config invalid: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmaOrders {
    pub price_p: usize,
    pub price_q: usize,
    pub wind_p: usize,
    pub wind_q: usize,
    /// "empirical" (bootstrap) or "gaussian" residual fits.
    pub gaussian_residuals: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub horizon: usize,
    pub scenarios: usize,
    pub seed: u64,
    pub threads: usize,
    pub train_steps: usize,
    pub eval_episodes: usize,
    pub synth_days: usize,
    pub arma: ArmaOrders,
    pub curve: PowerCurve,
    pub penalties: PenaltyConfig,
    pub battery: BatteryRanges,
    pub discharge_convention: DischargeConvention,
    pub up_cap: UpCap,
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub noise_sigma: f64,
    pub noise_decay: f64,
    pub hidden: Vec<usize>,
    pub use_target_networks: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            horizon: 24,
            scenarios: 10,
            seed: 0,
            threads: 0,
            train_steps: 500_000,
            eval_episodes: 2000,
            synth_days: 200,
            arma: ArmaOrders {
                price_p: 5,
                price_q: 2,
                wind_p: 3,
                wind_q: 0,
                gaussian_residuals: false,
            },
            curve: PowerCurve::default(),
            penalties: PenaltyConfig::default(),
            battery: BatteryRanges::default(),
            discharge_convention: DischargeConvention::Multiply,
            up_cap: UpCap::Bid,
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            noise_sigma: 0.2,
            noise_decay: 0.999,
            hidden: vec![16, 16, 16],
            use_target_networks: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = RunConfig::default();
        let path_text = path.display().to_string();
        for (li, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                path: path_text.clone(),
                line: li + 1,
                detail: format!("expected key = value, got {raw:?}"),
            })?;
            cfg.apply(key.trim(), value.trim()).map_err(|detail| ConfigError::Parse {
                path: path_text.clone(),
                line: li + 1,
                detail,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one dotted key. Unknown keys are errors.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
        }
        fn range(key: &str, value: &str) -> Result<Range, String> {
            let (lo, hi) = value
                .split_once("..")
                .ok_or_else(|| format!("{key}: expected lo..hi, got {value:?}"))?;
            Ok(Range::new(num(key, lo.trim())?, num(key, hi.trim())?))
        }
        match key {
            "horizon" => self.horizon = num(key, value)?,
            "scenarios" => self.scenarios = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "train.steps" => self.train_steps = num(key, value)?,
            "eval.episodes" => self.eval_episodes = num(key, value)?,
            "data.synth_days" => self.synth_days = num(key, value)?,
            "arma.price_p" => self.arma.price_p = num(key, value)?,
            "arma.price_q" => self.arma.price_q = num(key, value)?,
            "arma.wind_p" => self.arma.wind_p = num(key, value)?,
            "arma.wind_q" => self.arma.wind_q = num(key, value)?,
            "arma.residuals" => match value {
                "empirical" => self.arma.gaussian_residuals = false,
                "gaussian" => self.arma.gaussian_residuals = true,
                other => return Err(format!("{key}: expected empirical|gaussian, got {other:?}")),
            },
            "curve.cut_in" => self.curve.cut_in = num(key, value)?,
            "curve.rated_speed" => self.curve.rated_speed = num(key, value)?,
            "curve.cut_out" => self.curve.cut_out = num(key, value)?,
            "curve.rated_power" => self.curve.rated_power = num(key, value)?,
            "penalty.kappa_up" => self.penalties.kappa_up = num(key, value)?,
            "penalty.floor_up" => self.penalties.floor_up = num(key, value)?,
            "penalty.kappa_op" => self.penalties.kappa_op = num(key, value)?,
            "battery.e_max_scale" => self.battery.e_max_scale = range(key, value)?,
            "battery.e_init_frac" => self.battery.e_init_frac = range(key, value)?,
            "battery.e_final_frac" => self.battery.e_final_frac = range(key, value)?,
            "battery.p_rate_frac" => self.battery.p_rate_frac = range(key, value)?,
            "battery.eta_ch" => self.battery.eta_ch = range(key, value)?,
            "battery.eta_dis" => self.battery.eta_dis = range(key, value)?,
            "market.discharge_convention" => match value {
                "multiply" => self.discharge_convention = DischargeConvention::Multiply,
                "divide" => self.discharge_convention = DischargeConvention::Divide,
                other => return Err(format!("{key}: expected multiply|divide, got {other:?}")),
            },
            "market.up_cap" => match value {
                "bid" => self.up_cap = UpCap::Bid,
                "unlimited" => self.up_cap = UpCap::Unlimited,
                other => return Err(format!("{key}: expected bid|unlimited, got {other:?}")),
            },
            "solver.feas_tol" => self.feas_tol = num(key, value)?,
            "solver.opt_tol" => self.opt_tol = num(key, value)?,
            "agent.actor_lr" => self.actor_lr = num(key, value)?,
            "agent.critic_lr" => self.critic_lr = num(key, value)?,
            "agent.tau" => self.tau = num(key, value)?,
            "agent.batch_size" => self.batch_size = num(key, value)?,
            "agent.buffer_capacity" => self.buffer_capacity = num(key, value)?,
            "agent.noise_sigma" => self.noise_sigma = num(key, value)?,
            "agent.noise_decay" => self.noise_decay = num(key, value)?,
            "agent.hidden" => {
                let sizes: Result<Vec<usize>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                self.hidden = sizes.map_err(|_| format!("{key}: cannot parse {value:?}"))?;
            }
            "agent.use_target_networks" => {
                self.use_target_networks = parse_bool(key, value)?;
            }
            unknown => return Err(format!("unknown key {unknown:?}")),
        }
        Ok(())
    }

    /// Re-checks every embedded module's invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::Invalid("horizon must be positive".into()));
        }
        if self.scenarios == 0 {
            return Err(ConfigError::Invalid("scenario count must be positive".into()));
        }
        self.curve.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.penalties.kappa_up < 0.0
            || self.penalties.floor_up < 0.0
            || self.penalties.kappa_op < 0.0
        {
            return Err(ConfigError::Invalid("penalty coefficients must be nonnegative".into()));
        }
        self.episode_config().validate().map_err(ConfigError::Invalid)?;
        self.agent_config(1, 1).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.feas_tol <= 0.0 || self.opt_tol <= 0.0 {
            return Err(ConfigError::Invalid("solver tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            discharge_convention: self.discharge_convention,
            up_cap: self.up_cap,
            solver: SimplexOptions {
                feas_tol: self.feas_tol,
                opt_tol: self.opt_tol,
                ..SimplexOptions::default()
            },
        }
    }

    pub fn episode_config(&self) -> EpisodeConfig {
        EpisodeConfig {
            battery: self.battery.clone(),
            n_scenarios: self.scenarios,
            penalties: self.penalties.clone(),
        }
    }

    pub fn agent_config(&self, obs_dim: usize, action_dim: usize) -> AgentConfig {
        AgentConfig {
            obs_dim,
            action_dim,
            hidden: self.hidden.clone(),
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            tau: self.tau,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            noise_sigma: self.noise_sigma,
            noise_decay: self.noise_decay,
            use_target_networks: self.use_target_networks,
            seed: self.seed,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("{key}: expected true|false, got {other:?}")),
    }
}
