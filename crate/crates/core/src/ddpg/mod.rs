//! Deep deterministic policy gradient agents.
//!
//! Each agent owns an actor, a critic, their targets, two optimizers and a
//! replay buffer. Observations are normalized inside the agent with a fixed
//! affine map; actor outputs live in `[-1, 1]` and are scaled to the action
//! bounds, and the critic sees the same normalized action.

mod buffer;
mod checkpoint;
pub mod toy;

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use buffer::{ReplayBuffer, Transition};
pub use checkpoint::{AgentCheckpoint, AGENT_FORMAT, AGENT_FORMAT_VERSION};

use crate::environment::{ActionMulti, Observation};
use crate::neural::{Activation, Mlp, OptimizerState};
use crate::{Error, Result};

/// Hyperparameters shared by every agent of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub hidden_sizes: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    /// Environment steps of uniform random actions before learning starts.
    pub warmup_steps: usize,
    /// Exploration std-dev as a fraction of the action half-range.
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    pub noise_anneal_episodes: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            buffer_capacity: 100_000,
            batch_size: 64,
            warmup_steps: 1_000,
            noise_sigma_start: 0.1,
            noise_sigma_end: 0.02,
            noise_anneal_episodes: 40,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad("agent.hidden_sizes must be non-empty with positive widths");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("agent learning rates must be > 0");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("agent.gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("agent.tau must lie in (0, 1]");
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 {
            return bad("agent.buffer_capacity and agent.batch_size must be > 0");
        }
        if !(self.noise_sigma_start >= 0.0 && self.noise_sigma_end >= 0.0) {
            return bad("agent noise scales must be >= 0");
        }
        Ok(())
    }

    /// Linear anneal from start to end over `noise_anneal_episodes`.
    pub fn noise_for_episode(&self, episode: usize) -> f64 {
        if episode >= self.noise_anneal_episodes {
            return self.noise_sigma_end;
        }
        let f = (episode as f64 / self.noise_anneal_episodes as f64).min(1.0);
        self.noise_sigma_start + (self.noise_sigma_end - self.noise_sigma_start) * f
    }
}

/// Fixed affine observation normalization, `(x − offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ObsNormalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Torque demand in kN·m-ish units, SoC around the operating window.
    pub fn powertrain() -> Self {
        Self {
            offset: vec![0.0, 0.3],
            scale: vec![1000.0, 0.1],
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (((o, &x), &m), &s) in out.iter_mut().zip(x).zip(&self.offset).zip(&self.scale) {
            *o = (x - m) / s;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnStats {
    pub critic_loss: f64,
    /// Mean `Q(s, μ(s))` over the batch, the quantity the actor ascends.
    pub actor_objective: f64,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    actor_opt: OptimizerState,
    critic_opt: OptimizerState,
    pub buffer: ReplayBuffer,
    pub gamma: f64,
    pub tau: f64,
    /// Fraction of the half-range used as exploration std-dev.
    pub noise_sigma: f64,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub normalizer: ObsNormalizer,
}

impl Agent {
    pub fn new(
        obs_dim: usize,
        action_low: Vec<f64>,
        action_high: Vec<f64>,
        normalizer: ObsNormalizer,
        cfg: &AgentConfig,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let act_dim = action_low.len();
        if act_dim == 0 || action_high.len() != act_dim {
            return Err(Error::Argument(
                "action bounds must be non-empty and of equal length".into(),
            ));
        }
        if action_low.iter().zip(&action_high).any(|(l, h)| !(l < h)) {
            return Err(Error::Argument(
                "every action_low must be < action_high".into(),
            ));
        }
        if normalizer.offset.len() != obs_dim || normalizer.scale.len() != obs_dim {
            return Err(Error::Argument(
                "normalizer dimension differs from observation".into(),
            ));
        }
        if normalizer
            .scale
            .iter()
            .any(|&s| !(s != 0.0 && s.is_finite()))
        {
            return Err(Error::Argument(
                "normalizer scales must be finite and non-zero".into(),
            ));
        }
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden_sizes);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![obs_dim + act_dim];
        critic_sizes.extend(&cfg.hidden_sizes);
        critic_sizes.push(1);
        let actor = Mlp::seeded(
            &actor_sizes,
            Activation::Relu,
            Activation::Tanh,
            crate::rng::derive_seed(seed, &[1]),
        )?;
        let critic = Mlp::seeded(
            &critic_sizes,
            Activation::Relu,
            Activation::Identity,
            crate::rng::derive_seed(seed, &[2]),
        )?;
        Ok(Self {
            actor_opt: OptimizerState::new(&actor, cfg.actor_lr),
            critic_opt: OptimizerState::new(&critic, cfg.critic_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            buffer: ReplayBuffer::new(cfg.buffer_capacity)?,
            gamma: cfg.gamma,
            tau: cfg.tau,
            noise_sigma: cfg.noise_sigma_start,
            action_low,
            action_high,
            normalizer,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.normalizer.offset.len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_low.len()
    }

    fn half_range(&self, i: usize) -> f64 {
        0.5 * (self.action_high[i] - self.action_low[i])
    }

    fn mid(&self, i: usize) -> f64 {
        0.5 * (self.action_high[i] + self.action_low[i])
    }

    fn to_unit(&self, i: usize, a: f64) -> f64 {
        (a - self.mid(i)) / self.half_range(i)
    }

    fn check_obs(&self, obs: &[f64]) -> Result<()> {
        if obs.len() != self.obs_dim() {
            return Err(Error::Argument(format!(
                "observation has {} entries, agent expects {}",
                obs.len(),
                self.obs_dim()
            )));
        }
        Ok(())
    }

    /// Policy action; with `explore`, Gaussian noise is added before clamping.
    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        explore: bool,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        self.check_obs(obs)?;
        let mut x = vec![0.0; obs.len()];
        self.normalizer.apply(obs, &mut x);
        let (y, _) = self.actor.forward(&x)?;
        let mut out = Vec::with_capacity(y.len());
        for (i, u) in y.into_iter().enumerate() {
            let mut a = self.mid(i) + self.half_range(i) * u;
            if explore && self.noise_sigma > 0.0 {
                let n = Normal::new(0.0, self.noise_sigma * self.half_range(i))
                    .expect("positive sigma");
                a += n.sample(rng);
            }
            out.push(a.clamp(self.action_low[i], self.action_high[i]));
        }
        Ok(out)
    }

    /// Uniform draw over the action box, used during warm-up.
    pub fn random_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(&l, &h)| rng.random_range(l..=h))
            .collect()
    }

    pub fn remember(&mut self, t: Transition) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::Argument(
                "transition contains non-finite values".into(),
            ));
        }
        if t.observation.len() != self.obs_dim()
            || t.observation_next.len() != self.obs_dim()
            || t.action.len() != self.action_dim()
        {
            return Err(Error::Argument(
                "transition dimensions do not match agent".into(),
            ));
        }
        self.buffer.push(t);
        Ok(())
    }

    /// Normalized critic input `[obs ‖ action]` rows for the given buffer slots.
    fn batch(&self, idx: &[usize]) -> (Array2<f64>, Array2<f64>, Vec<f64>, Array2<f64>, Vec<bool>) {
        let (od, ad) = (self.obs_dim(), self.action_dim());
        let n = idx.len();
        let mut sa = Array2::zeros((n, od + ad));
        let mut next = Array2::zeros((n, od));
        let mut rewards = Vec::with_capacity(n);
        let mut done = Vec::with_capacity(n);
        for (r, &i) in idx.iter().enumerate() {
            let t = self.buffer.get(i).expect("sampled index in range");
            let row = sa.row_mut(r).into_slice().expect("standard layout");
            self.normalizer.apply(&t.observation, &mut row[..od]);
            for (j, &a) in t.action.iter().enumerate() {
                row[od + j] = self.to_unit(j, a);
            }
            self.normalizer.apply(
                &t.observation_next,
                next.row_mut(r).into_slice().expect("standard layout"),
            );
            rewards.push(t.reward);
            done.push(t.done);
        }
        let obs = sa.slice(s![.., ..od]).to_owned();
        (sa, obs, rewards, next, done)
    }

    /// One critic regression step, one actor ascent step, then target updates.
    /// Returns `Ok(None)` while the buffer holds fewer than `batch_size` items.
    pub fn learn_step<R: Rng + ?Sized>(
        &mut self,
        batch_size: usize,
        rng: &mut R,
    ) -> Result<Option<LearnStats>> {
        if batch_size == 0 || self.buffer.len() < batch_size {
            return Ok(None);
        }
        let idx = self.buffer.sample_indices(batch_size, rng);
        let (sa, obs, rewards, next, done) = self.batch(&idx);
        let n = batch_size as f64;
        let od = self.obs_dim();

        // TD target
        let next_a = self.actor_target.predict(next.view())?;
        let next_sa =
            ndarray::concatenate(Axis(1), &[next.view(), next_a.view()]).expect("row counts agree");
        let q_next = self.critic_target.predict(next_sa.view())?;
        let target: Vec<f64> = (0..batch_size)
            .map(|i| {
                rewards[i]
                    + if done[i] {
                        0.0
                    } else {
                        self.gamma * q_next[[i, 0]]
                    }
            })
            .collect();

        let (q, cache) = self.critic.forward_batch(sa.view())?;
        let mut dq = Array2::zeros((batch_size, 1));
        let mut critic_loss = 0.0;
        for i in 0..batch_size {
            let e = q[[i, 0]] - target[i];
            critic_loss += e * e / n;
            dq[[i, 0]] = 2.0 * e / n;
        }
        let (g, _) = self.critic.backward(&cache, dq.view())?;
        self.critic_opt.step(&mut self.critic, &g)?;

        // Deterministic policy gradient through the updated critic.
        let (mu, actor_cache) = self.actor.forward_batch(obs.view())?;
        let s_mu =
            ndarray::concatenate(Axis(1), &[obs.view(), mu.view()]).expect("row counts agree");
        let (q_mu, critic_cache) = self.critic.forward_batch(s_mu.view())?;
        let actor_objective = q_mu.sum() / n;
        let ascend = Array2::from_elem((batch_size, 1), -1.0 / n);
        let (_, d_input) = self.critic.backward(&critic_cache, ascend.view())?;
        let d_mu = d_input.slice(s![.., od..]).to_owned();
        let (ga, _) = self.actor.backward(&actor_cache, d_mu.view())?;
        self.actor_opt.step(&mut self.actor, &ga)?;

        self.actor
            .soft_update_into(&mut self.actor_target, self.tau)?;
        self.critic
            .soft_update_into(&mut self.critic_target, self.tau)?;

        if !(critic_loss.is_finite() && actor_objective.is_finite()) {
            return Err(Error::Training {
                episode: 0,
                step: self.critic_opt.step as usize,
                message: "non-finite loss".into(),
            });
        }
        Ok(Some(LearnStats {
            critic_loss,
            actor_objective,
        }))
    }

    /// Critic value at `(obs, action)` in environment units.
    pub fn q_value(&self, obs: &[f64], action: &[f64]) -> Result<f64> {
        self.check_obs(obs)?;
        let mut x = vec![0.0; obs.len() + action.len()];
        self.normalizer.apply(obs, &mut x[..obs.len()]);
        for (j, &a) in action.iter().enumerate() {
            x[obs.len() + j] = self.to_unit(j, a);
        }
        Ok(self.critic.forward(&x)?.0[0])
    }

    pub fn checkpoint(&self) -> AgentCheckpoint {
        AgentCheckpoint::from_agent(self)
    }
}

/// Two decentralized agents sharing one observation: agent 1 commands MG1
/// (`u_mot1 ∈ [0, 1]`), agent 2 commands MG2 (`u_mot2 ∈ [−1, 1]`).
#[derive(Debug, Clone)]
pub struct MultiAgentSystem {
    pub agent1: Agent,
    pub agent2: Agent,
}

impl MultiAgentSystem {
    pub fn new(cfg: &AgentConfig, seed: u64) -> Result<Self> {
        Ok(Self {
            agent1: mg1_agent(cfg, crate::rng::derive_seed(seed, &[0xA1]))?,
            agent2: Agent::new(
                2,
                vec![-1.0],
                vec![1.0],
                ObsNormalizer::powertrain(),
                cfg,
                crate::rng::derive_seed(seed, &[0xA2]),
            )?,
        })
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        obs: Observation,
        explore: bool,
        rng: &mut R,
    ) -> Result<ActionMulti> {
        let o = obs.to_array();
        let u1 = self.agent1.act(&o, explore, rng)?[0];
        let u2 = self.agent2.act(&o, explore, rng)?[0];
        Ok(ActionMulti {
            u_mot1: u1,
            u_mot2: u2,
        })
    }
}

/// Agent commanding the MG1 generation fraction from `[T_dem, SoC]`.
pub fn mg1_agent(cfg: &AgentConfig, seed: u64) -> Result<Agent> {
    Agent::new(
        2,
        vec![0.0],
        vec![1.0],
        ObsNormalizer::powertrain(),
        cfg,
        seed,
    )
}

#[cfg(test)]
mod tests;
