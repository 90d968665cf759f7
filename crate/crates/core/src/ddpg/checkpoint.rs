//! Agent checkpoints: networks, targets and optimizer moments. The replay
//! buffer is not saved, so a restored agent reproduces evaluation exactly
//! but resumed training diverges from an uninterrupted run.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Agent, ObsNormalizer, ReplayBuffer};
use crate::neural::{Mlp, OptimizerState};
use crate::{Error, Result};

pub const AGENT_FORMAT: &str = "mmhev-agent";
pub const AGENT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentCheckpoint {
    pub format: String,
    pub version: u32,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: OptimizerState,
    pub critic_opt: OptimizerState,
    pub gamma: f64,
    pub tau: f64,
    pub noise_sigma: f64,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub normalizer: ObsNormalizer,
}

impl AgentCheckpoint {
    pub fn from_agent(a: &Agent) -> Self {
        Self {
            format: AGENT_FORMAT.into(),
            version: AGENT_FORMAT_VERSION,
            actor: a.actor.clone(),
            critic: a.critic.clone(),
            actor_target: a.actor_target.clone(),
            critic_target: a.critic_target.clone(),
            actor_opt: a.actor_opt.clone(),
            critic_opt: a.critic_opt.clone(),
            gamma: a.gamma,
            tau: a.tau,
            noise_sigma: a.noise_sigma,
            action_low: a.action_low.clone(),
            action_high: a.action_high.clone(),
            normalizer: a.normalizer.clone(),
        }
    }

    /// Rebuild an agent with an empty replay buffer of `buffer_capacity`.
    pub fn into_agent(self, buffer_capacity: usize) -> Result<Agent> {
        if self.format != AGENT_FORMAT || self.version != AGENT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported agent checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if !self.actor.same_shape(&self.actor_target)
            || !self.critic.same_shape(&self.critic_target)
        {
            return Err(Error::Config(
                "checkpoint target networks differ in shape".into(),
            ));
        }
        let obs_dim = self.normalizer.offset.len();
        let act_dim = self.action_low.len();
        if self.actor.input_dim() != obs_dim
            || self.actor.output_dim() != act_dim
            || self.critic.input_dim() != obs_dim + act_dim
        {
            return Err(Error::Config(
                "checkpoint network dimensions are inconsistent".into(),
            ));
        }
        Ok(Agent {
            actor: self.actor,
            critic: self.critic,
            actor_target: self.actor_target,
            critic_target: self.critic_target,
            actor_opt: self.actor_opt,
            critic_opt: self.critic_opt,
            buffer: ReplayBuffer::new(buffer_capacity)?,
            gamma: self.gamma,
            tau: self.tau,
            noise_sigma: self.noise_sigma,
            action_low: self.action_low,
            action_high: self.action_high,
            normalizer: self.normalizer,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }
}
