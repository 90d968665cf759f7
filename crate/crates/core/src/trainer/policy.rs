use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ddpg::{Agent, AgentCheckpoint, MultiAgentSystem};
use crate::drivecycle::DriveCycle;
use crate::environment::trace::TraceWriter;
use crate::environment::{
    Action, ActionMulti, ActionSingle, Environment, EpisodeSummary, Observation, RewardSpec,
};
use crate::powertrain::Powertrain;
use crate::{Error, Result};

pub const POLICY_FORMAT: &str = "mmhev-policy";
pub const POLICY_FORMAT_VERSION: u32 = 1;

/// A controller that can drive an episode greedily.
#[derive(Debug, Clone)]
pub enum Policy {
    /// No MG1 generation; MG2 covers the demand and the engine only
    /// assists when MG2 saturates.
    Zero,
    Single(Agent),
    Multi(MultiAgentSystem),
}

impl Policy {
    pub fn method(&self) -> &'static str {
        match self {
            Policy::Zero => "zero",
            Policy::Single(_) => "single",
            Policy::Multi(_) => "multi",
        }
    }

    pub fn greedy(&self, obs: Observation) -> Result<Action> {
        let mut rng = crate::rng::stream(0, &[]);
        Ok(match self {
            Policy::Zero => Action::Single(ActionSingle { u_mot1: 0.0 }),
            Policy::Single(a) => Action::Single(ActionSingle {
                u_mot1: a.act(&obs.to_array(), false, &mut rng)?[0],
            }),
            Policy::Multi(m) => {
                let ActionMulti { u_mot1, u_mot2 } = m.act(obs, false, &mut rng)?;
                Action::Multi(ActionMulti { u_mot1, u_mot2 })
            }
        })
    }

    pub fn checkpoint(&self) -> PolicyCheckpoint {
        let agents = match self {
            Policy::Zero => vec![],
            Policy::Single(a) => vec![a.checkpoint()],
            Policy::Multi(m) => vec![m.agent1.checkpoint(), m.agent2.checkpoint()],
        };
        PolicyCheckpoint {
            format: POLICY_FORMAT.into(),
            version: POLICY_FORMAT_VERSION,
            method: self.method().into(),
            agents,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.checkpoint())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: PolicyCheckpoint = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        ck.into_policy()
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format: String,
    pub version: u32,
    pub method: String,
    pub agents: Vec<AgentCheckpoint>,
}

impl PolicyCheckpoint {
    pub fn into_policy(self) -> Result<Policy> {
        if self.format != POLICY_FORMAT || self.version != POLICY_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported policy checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut agents = self.agents.into_iter().map(|a| a.into_agent(1));
        let policy = match (self.method.as_str(), agents.len()) {
            ("zero", 0) => Policy::Zero,
            ("single", 1) => Policy::Single(agents.next().unwrap()?),
            ("multi", 2) => Policy::Multi(MultiAgentSystem {
                agent1: agents.next().unwrap()?,
                agent2: agents.next().unwrap()?,
            }),
            (m, n) => {
                return Err(Error::Config(format!(
                    "policy '{m}' with {n} agents is not valid"
                )))
            }
        };
        Ok(policy)
    }
}

/// One greedy episode, optionally streaming a per-step trace.
pub fn rollout<W: std::io::Write>(
    powertrain: Arc<Powertrain>,
    cycle: &DriveCycle,
    reward: RewardSpec,
    initial_soc: f64,
    policy: &Policy,
    mut trace: Option<&mut TraceWriter<W>>,
) -> Result<EpisodeSummary> {
    let mut env = Environment::new(powertrain, cycle.clone(), reward, initial_soc)?;
    while !env.is_done() {
        let action = policy.greedy(env.observation())?;
        let step = env.cursor();
        let out = env.step(action).map_err(|e| match e {
            Error::ModelValidation(m) => Error::ModelValidation(format!("step {step}: {m}")),
            other => other,
        })?;
        if let Some(t) = trace.as_deref_mut() {
            t.record(env.state(), &out)?;
        }
    }
    Ok(env.summary())
}
