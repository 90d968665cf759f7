use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TrainMode};
use super::policy::Policy;
use crate::ddpg::{mg1_agent, Agent, MultiAgentSystem, Transition};
use crate::drivecycle::build_learning_cycle;
use crate::environment::{Action, ActionMulti, ActionSingle, Environment};
use crate::rng;
use crate::{Error, Result};

/// Per-episode summary. Reward columns are per-episode sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Σ reward_single (single) or Σ r_m1 (multi).
    pub reward_agent1: f64,
    /// Σ r_m2; absent for single-agent runs.
    pub reward_agent2: Option<f64>,
    /// Σ reward_single, logged for both modes.
    pub reward_single: f64,
    /// Σ (r_global + r_local1 + r_local2), independent of r_ind.
    pub combined_reward: f64,
    pub fuel_g: f64,
    pub distance_m: f64,
    pub fuel_l_per_100km: f64,
    pub soc_end: f64,
    pub infeasible_steps: usize,
    pub steps: usize,
    pub terminated_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub mode: TrainMode,
    pub r_ind: f64,
    pub seed: u64,
    pub config_hash: String,
    pub records: Vec<EpisodeRecord>,
}

pub const RUN_LOG_COLUMNS: &str = "episode,reward_agent1,reward_agent2,reward_single,combined_reward,fuel_g,distance_m,fuel_l_per_100km,soc_end,infeasible_steps,steps,terminated_early";

impl RunLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(RUN_LOG_COLUMNS);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.episode,
                r.reward_agent1,
                r.reward_agent2.map_or(String::new(), |v| v.to_string()),
                r.reward_single,
                r.combined_reward,
                r.fuel_g,
                r.distance_m,
                r.fuel_l_per_100km,
                r.soc_end,
                r.infeasible_steps,
                r.steps,
                u8::from(r.terminated_early)
            ));
        }
        s
    }

    /// Mean combined reward over the last `n` episodes.
    pub fn final_combined_reward(&self, n: usize) -> f64 {
        let tail = &self.records[self.records.len().saturating_sub(n)..];
        tail.iter().map(|r| r.combined_reward).sum::<f64>() / tail.len().max(1) as f64
    }
}

pub struct TrainOutcome {
    pub log: RunLog,
    pub policy: Policy,
    /// Wall time per episode; kept out of the deterministic log.
    pub wall_time_s: Vec<f64>,
}

enum Learner {
    Single(Agent),
    Multi(MultiAgentSystem),
}

impl Learner {
    fn agents_mut(&mut self) -> Vec<&mut Agent> {
        match self {
            Learner::Single(a) => vec![a],
            Learner::Multi(m) => vec![&mut m.agent1, &mut m.agent2],
        }
    }
}

/// Train one agent system for `config.episodes` episodes with `seed`.
///
/// Each episode runs on a fresh permutation of the composite cycle. During
/// the first `warmup_steps` environment steps actions are uniform random;
/// afterwards every agent takes one learning step per environment step.
pub fn train(config: &ExperimentConfig, seed: u64) -> Result<TrainOutcome> {
    config.validate()?;
    let powertrain = config.powertrain()?;
    let composite = config.composite(seed)?;
    let reward = config.training_reward()?;
    let cfg = &config.agent;
    let mut learner = match config.mode {
        TrainMode::Single => Learner::Single(mg1_agent(cfg, rng::derive_seed(seed, &[0xA0]))?),
        TrainMode::Multi => Learner::Multi(MultiAgentSystem::new(cfg, seed)?),
    };
    let mut rng = rng::stream(seed, &[0x7A1]);
    let mut total_steps = 0usize;
    let mut records = Vec::with_capacity(config.episodes);
    let mut wall = Vec::with_capacity(config.episodes);

    for episode in 0..config.episodes {
        let started = Instant::now();
        let sigma = cfg.noise_for_episode(episode);
        for a in learner.agents_mut() {
            a.noise_sigma = sigma;
        }
        let cycle = build_learning_cycle(&composite, episode as u64);
        let mut env = Environment::new(
            powertrain.clone(),
            cycle,
            reward.clone(),
            config.initial_soc,
        )?;
        let (mut sum1, mut sum2, mut sum_single, mut combined) = (0.0, 0.0, 0.0, 0.0);
        let warm = |steps: usize| steps < cfg.warmup_steps;
        let fail = |step: usize, e: Error| match e {
            Error::Training { message, .. } => Error::Training {
                episode,
                step,
                message,
            },
            other => other,
        };

        while !env.is_done() {
            let step = env.cursor();
            let obs = env.observation();
            let o = obs.to_array().to_vec();
            let actions: Vec<Vec<f64>> = learner
                .agents_mut()
                .into_iter()
                .map(|a| {
                    if warm(total_steps) {
                        Ok(a.random_action(&mut rng))
                    } else {
                        a.act(&o, true, &mut rng)
                    }
                })
                .collect::<Result<_>>()?;
            let action = match &learner {
                Learner::Single(_) => Action::Single(ActionSingle {
                    u_mot1: actions[0][0],
                }),
                Learner::Multi(_) => Action::Multi(ActionMulti {
                    u_mot1: actions[0][0],
                    u_mot2: actions[1][0],
                }),
            };
            let out = env.step(action).map_err(|e| match e {
                Error::ModelValidation(m) => Error::Training {
                    episode,
                    step,
                    message: m,
                },
                other => other,
            })?;
            let next = out.observation_next.to_array().to_vec();
            let terminal = out.info.soc_violation;
            let rewards = match &learner {
                Learner::Single(_) => vec![out.reward_single],
                Learner::Multi(_) => vec![out.r_m1, out.r_m2],
            };
            sum1 += rewards[0];
            sum2 += rewards.get(1).copied().unwrap_or(0.0);
            sum_single += out.reward_single;
            combined += out.r_global + out.r_local1 + out.r_local2;
            for ((agent, action), r) in learner.agents_mut().into_iter().zip(actions).zip(rewards) {
                agent.remember(Transition {
                    observation: o.clone(),
                    action,
                    reward: r,
                    observation_next: next.clone(),
                    done: terminal,
                })?;
            }
            total_steps += 1;
            if !warm(total_steps) {
                for agent in learner.agents_mut() {
                    agent
                        .learn_step(cfg.batch_size, &mut rng)
                        .map_err(|e| fail(step, e))?;
                }
            }
        }

        let s = env.summary();
        records.push(EpisodeRecord {
            episode,
            reward_agent1: sum1,
            reward_agent2: matches!(learner, Learner::Multi(_)).then_some(sum2),
            reward_single: sum_single,
            combined_reward: combined,
            fuel_g: s.fuel_g,
            distance_m: s.distance_m,
            fuel_l_per_100km: s.fuel_l_per_100km()?,
            soc_end: s.soc_end,
            infeasible_steps: s.infeasible_steps,
            steps: s.steps,
            terminated_early: s.terminated_early,
        });
        wall.push(started.elapsed().as_secs_f64());
    }

    let policy = match learner {
        Learner::Single(a) => Policy::Single(a),
        Learner::Multi(m) => Policy::Multi(m),
    };
    Ok(TrainOutcome {
        log: RunLog {
            mode: config.mode,
            r_ind: config.r_ind,
            seed,
            config_hash: config.hash(),
            records,
        },
        policy,
        wall_time_s: wall,
    })
}
