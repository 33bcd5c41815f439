//! DDPG specialized to single-step episodes.
//!
//! Episodes end after one step, so the TD target is the raw reward and no
//! bootstrap term exists; target networks are therefore off by default but can
//! be kept for multi-step variants. The critic fits Q(s,a) to the reward by
//! squared error, the actor ascends Q(s, actor(s)) through the critic, both
//! with Adam at the usual DDPG rates.

use crate::env::{Action, EnvError, Environment, Observation};
use crate::nn::{soft_update, Activation, Adam, Grads, Mlp, NnError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdpgError {
    #[error("training steps {steps} below batch size {batch}")]
    StepsBelowBatch { steps: usize, batch: usize },
    #[error("invalid agent config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format error: {0}")]
    Format(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentConfig {
    pub obs_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Soft-update rate for the optional target networks.
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub noise_sigma: f64,
    /// Multiplicative sigma decay applied after every episode.
    pub noise_decay: f64,
    /// Keep target networks (unused by the one-step TD target).
    pub use_target_networks: bool,
    pub seed: u64,
}

impl AgentConfig {
    pub fn for_dims(obs_dim: usize, action_dim: usize) -> Self {
        Self {
            obs_dim,
            action_dim,
            hidden: vec![16, 16, 16],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            noise_sigma: 0.2,
            noise_decay: 0.999,
            use_target_networks: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DdpgError> {
        let mut problems = Vec::new();
        if self.obs_dim == 0 || self.action_dim == 0 {
            problems.push("zero observation or action dimension".to_string());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            problems.push("hidden layer sizes must be positive".to_string());
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            problems.push(format!("tau {} outside (0, 1]", self.tau));
        }
        if self.actor_lr < 0.0 || self.critic_lr < 0.0 {
            problems.push("negative learning rate".to_string());
        }
        if self.noise_sigma < 0.0 {
            problems.push(format!("negative noise sigma {}", self.noise_sigma));
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            problems.push(format!(
                "buffer capacity {} cannot hold batch {}",
                self.buffer_capacity, self.batch_size
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DdpgError::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
}

/// Fixed-capacity ring of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    ring: Vec<Transition>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { capacity, ring: Vec::with_capacity(capacity.min(4096)), next: 0 }
    }

    pub fn push(&mut self, tr: Transition) {
        if self.ring.len() < self.capacity {
            self.ring.push(tr);
        } else {
            self.ring[self.next] = tr;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.ring[i]
    }

    fn sample_indices(&self, rng: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
        (0..k).map(|_| rng.gen_range(0..self.ring.len())).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainDiag {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

pub struct Agent {
    pub config: AgentConfig,
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Option<Mlp>,
    pub target_critic: Option<Mlp>,
    actor_opt: Adam,
    critic_opt: Adam,
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: AgentConfig,
    actor: Mlp,
    critic: Mlp,
}

impl Agent {
    pub fn new(config: AgentConfig) -> Result<Self, DdpgError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut actor_sizes = vec![config.obs_dim];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(config.action_dim);
        let actor = Mlp::new(&actor_sizes, Activation::Relu, Activation::Logistic, &mut rng);
        let mut critic_sizes = vec![config.obs_dim + config.action_dim];
        critic_sizes.extend(&config.hidden);
        critic_sizes.push(1);
        let critic = Mlp::new(&critic_sizes, Activation::Relu, Activation::Identity, &mut rng);
        let (target_actor, target_critic) = if config.use_target_networks {
            (Some(actor.clone()), Some(critic.clone()))
        } else {
            (None, None)
        };
        let actor_opt = Adam::new(&actor, config.actor_lr);
        let critic_opt = Adam::new(&critic, config.critic_lr);
        Ok(Self { config, actor, critic, target_actor, target_critic, actor_opt, critic_opt })
    }

    /// Deterministic policy output in `[0,1]^T`.
    pub fn act(&self, obs: &Observation) -> Result<Action, DdpgError> {
        Ok(Action(self.actor.forward(&obs.0)?))
    }

    /// Policy output plus clipped Gaussian exploration noise.
    pub fn act_with_noise(
        &self,
        obs: &Observation,
        sigma: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Action, DdpgError> {
        let mut a = self.actor.forward(&obs.0)?;
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma checked nonnegative");
            for v in a.iter_mut() {
                *v = (*v + normal.sample(rng)).clamp(0.0, 1.0);
            }
        }
        Ok(Action(a))
    }

    pub fn critic_value(&self, obs: &[f64], action: &[f64]) -> Result<f64, DdpgError> {
        let mut input = Vec::with_capacity(obs.len() + action.len());
        input.extend_from_slice(obs);
        input.extend_from_slice(action);
        Ok(self.critic.forward(&input)?[0])
    }

    /// One gradient step on a sampled batch: critic regression to the rewards,
    /// actor ascent through the critic, optional target soft updates.
    pub fn train_step(
        &mut self,
        buffer: &ReplayBuffer,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrainDiag, DdpgError> {
        assert!(buffer.len() >= self.config.batch_size, "buffer below batch size");
        let idx = buffer.sample_indices(rng, self.config.batch_size);
        let inv_b = 1.0 / self.config.batch_size as f64;

        let mut critic_grads = Grads::zeros_like(&self.critic);
        let mut critic_loss = 0.0;
        for &i in &idx {
            let tr = buffer.get(i);
            let mut input = tr.obs.clone();
            input.extend_from_slice(&tr.action);
            let cache = self.critic.forward_cached(&input)?;
            let err = cache.output()[0] - tr.reward;
            critic_loss += err * err * inv_b;
            let (g, _) = self.critic.backprop(&cache, &[2.0 * err * inv_b]);
            critic_grads.add(&g);
        }
        self.critic_opt.step(&mut self.critic, &critic_grads);

        let mut actor_grads = Grads::zeros_like(&self.actor);
        let mut actor_objective = 0.0;
        for &i in &idx {
            let tr = buffer.get(i);
            let a_cache = self.actor.forward_cached(&tr.obs)?;
            let mut input = tr.obs.clone();
            input.extend_from_slice(a_cache.output());
            let q_cache = self.critic.forward_cached(&input)?;
            actor_objective += q_cache.output()[0] * inv_b;
            let (_, dq_dinput) = self.critic.backprop(&q_cache, &[1.0]);
            let dq_da = &dq_dinput[tr.obs.len()..];
            // Ascent on Q == descent on -Q.
            let upstream: Vec<f64> = dq_da.iter().map(|g| -g * inv_b).collect();
            let (g, _) = self.actor.backprop(&a_cache, &upstream);
            actor_grads.add(&g);
        }
        self.actor_opt.step(&mut self.actor, &actor_grads);

        if self.config.use_target_networks {
            if let Some(t) = self.target_actor.as_mut() {
                soft_update(t, &self.actor, self.config.tau)?;
            }
            if let Some(t) = self.target_critic.as_mut() {
                soft_update(t, &self.critic, self.config.tau)?;
            }
        }

        assert!(self.actor.params_finite(), "actor parameters left the finite range");
        assert!(self.critic.params_finite(), "critic parameters left the finite range");
        Ok(TrainDiag { critic_loss, actor_objective })
    }

    pub fn save_json(&self, path: &Path) -> Result<(), DdpgError> {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            actor: self.actor.clone(),
            critic: self.critic.clone(),
        };
        std::fs::write(path, serde_json::to_string(&ck)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, DdpgError> {
        let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(DdpgError::Version(ck.version));
        }
        ck.config.validate()?;
        let (target_actor, target_critic) = if ck.config.use_target_networks {
            (Some(ck.actor.clone()), Some(ck.critic.clone()))
        } else {
            (None, None)
        };
        let actor_opt = Adam::new(&ck.actor, ck.config.actor_lr);
        let critic_opt = Adam::new(&ck.critic, ck.config.critic_lr);
        Ok(Self {
            config: ck.config,
            actor: ck.actor,
            critic: ck.critic,
            target_actor,
            target_critic,
            actor_opt,
            critic_opt,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogRow {
    pub step: usize,
    pub mean_recent_reward: f64,
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Writes the learning curve as `step,mean_reward,critic_loss,actor_objective`.
pub fn write_learning_curve(rows: &[LogRow], path: &Path) -> Result<(), std::io::Error> {
    use std::fmt::Write as _;
    let mut out = String::from("step,mean_reward,critic_loss,actor_objective\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.step, r.mean_recent_reward, r.critic_loss, r.actor_objective
        );
    }
    std::fs::write(path, out)
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub n_steps: usize,
    /// Log cadence in steps.
    pub log_interval: usize,
    /// Checkpoint cadence in steps (0 disables).
    pub checkpoint_interval: usize,
    pub checkpoint_dir: Option<PathBuf>,
    /// Base seed for the per-step episode resets.
    pub episode_seed: u64,
}

impl TrainOptions {
    pub fn steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            log_interval: 500,
            checkpoint_interval: 0,
            checkpoint_dir: None,
            episode_seed: 1,
        }
    }
}

/// Full training loop: reset, act with noise, step, store, learn.
pub fn train(
    env: &Environment,
    config: &AgentConfig,
    opts: &TrainOptions,
) -> Result<(Agent, Vec<LogRow>), DdpgError> {
    config.validate()?;
    if opts.n_steps < config.batch_size {
        return Err(DdpgError::StepsBelowBatch { steps: opts.n_steps, batch: config.batch_size });
    }
    let mut agent = Agent::new(config.clone())?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut sigma = config.noise_sigma;
    let mut recent: VecDeque<f64> = VecDeque::with_capacity(100);
    let mut log = Vec::new();
    let mut diag = TrainDiag::default();

    for step in 0..opts.n_steps {
        let (obs, state) = env.reset(opts.episode_seed.wrapping_add(step as u64))?;
        let action = agent.act_with_noise(&obs, sigma, &mut rng)?;
        let outcome = env.step(&state, action.clone())?;
        buffer.push(Transition { obs: obs.0, action: action.0, reward: outcome.reward });
        if recent.len() == 100 {
            recent.pop_front();
        }
        recent.push_back(outcome.reward);
        if buffer.len() >= config.batch_size {
            diag = agent.train_step(&buffer, &mut rng)?;
        }
        sigma *= config.noise_decay;

        let last = step + 1 == opts.n_steps;
        if (opts.log_interval > 0 && (step + 1) % opts.log_interval == 0) || last {
            log.push(LogRow {
                step: step + 1,
                mean_recent_reward: recent.iter().sum::<f64>() / recent.len() as f64,
                critic_loss: diag.critic_loss,
                actor_objective: diag.actor_objective,
            });
        }
        if opts.checkpoint_interval > 0 && (step + 1) % opts.checkpoint_interval == 0 {
            if let Some(dir) = &opts.checkpoint_dir {
                agent.save_json(&dir.join(format!("checkpoint_{:07}.json", step + 1)))?;
            }
        }
    }
    Ok((agent, log))
}
