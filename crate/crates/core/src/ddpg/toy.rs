//! One-dimensional integrator used as a learner sanity task: move a point
//! on `[-1, 1]` to a target with velocity commands in `[-1, 1]`.

use rand::Rng;

use super::{Agent, AgentConfig, ObsNormalizer, Transition};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorTask {
    pub dt: f64,
    pub steps: usize,
}

impl Default for IntegratorTask {
    fn default() -> Self {
        Self { dt: 0.1, steps: 20 }
    }
}

/// Position range width; success threshold is 5 % of it.
pub const RANGE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyReport {
    pub episodes_run: usize,
    /// Mean greedy `|final error|` at the last evaluation.
    pub final_error: f64,
    pub solved: bool,
}

impl IntegratorTask {
    fn run_episode<R: Rng + ?Sized>(
        &self,
        agent: &mut Agent,
        start: f64,
        target: f64,
        explore: bool,
        learn: Option<(usize, &AgentConfig)>,
        total_steps: &mut usize,
        rng: &mut R,
    ) -> Result<f64> {
        let mut x = start;
        for k in 0..self.steps {
            let obs = [x, target];
            let action = match learn {
                Some((_, cfg)) if *total_steps < cfg.warmup_steps => agent.random_action(rng),
                _ => agent.act(&obs, explore, rng)?,
            };
            x = (x + action[0] * self.dt).clamp(-1.0, 1.0);
            let reward = -(x - target).abs();
            if let Some((_, cfg)) = learn {
                agent.remember(Transition {
                    observation: obs.to_vec(),
                    action,
                    reward,
                    observation_next: vec![x, target],
                    done: false,
                })?;
                *total_steps += 1;
                if *total_steps >= cfg.warmup_steps {
                    agent.learn_step(cfg.batch_size, rng)?;
                }
            }
            let _ = k;
        }
        Ok((x - target).abs())
    }

    /// Mean greedy final error over `n` fixed start/target pairs.
    pub fn evaluate(&self, agent: &mut Agent, n: usize) -> Result<f64> {
        let mut rng = crate::rng::stream(0, &[0x70E]);
        let mut total = 0.0;
        let mut steps = 0;
        for _ in 0..n {
            let start = rng.random_range(-1.0..=1.0);
            let target = rng.random_range(-1.0..=1.0);
            total += self.run_episode(agent, start, target, false, None, &mut steps, &mut rng)?;
        }
        Ok(total / n as f64)
    }

    /// Train for up to `max_episodes`, evaluating every 10 episodes and
    /// stopping once the mean final error drops below 5 % of the range.
    pub fn train(&self, cfg: &AgentConfig, seed: u64, max_episodes: usize) -> Result<ToyReport> {
        let mut agent = Agent::new(
            2,
            vec![-1.0],
            vec![1.0],
            ObsNormalizer::identity(2),
            cfg,
            seed,
        )?;
        let mut rng = crate::rng::stream(seed, &[0x70F]);
        let mut total_steps = 0;
        let mut final_error = f64::INFINITY;
        for ep in 0..max_episodes {
            agent.noise_sigma = cfg.noise_for_episode(ep);
            let start = rng.random_range(-1.0..=1.0);
            let target = rng.random_range(-1.0..=1.0);
            self.run_episode(
                &mut agent,
                start,
                target,
                true,
                Some((ep, cfg)),
                &mut total_steps,
                &mut rng,
            )?;
            if (ep + 1) % 10 == 0 {
                final_error = self.evaluate(&mut agent, 20)?;
                if final_error < 0.05 * RANGE {
                    return Ok(ToyReport {
                        episodes_run: ep + 1,
                        final_error,
                        solved: true,
                    });
                }
            }
        }
        Ok(ToyReport {
            episodes_run: max_episodes,
            final_error,
            solved: false,
        })
    }

    pub fn default_config() -> AgentConfig {
        AgentConfig {
            warmup_steps: 200,
            noise_sigma_start: 0.3,
            noise_sigma_end: 0.05,
            noise_anneal_episodes: 100,
            actor_lr: 1e-3,
            ..AgentConfig::default()
        }
    }
}
