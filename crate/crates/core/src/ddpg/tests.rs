use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn agent(seed: u64) -> Agent {
    Agent::new(
        2,
        vec![0.0, -1.0],
        vec![1.0, 1.0],
        ObsNormalizer::powertrain(),
        &AgentConfig::default(),
        seed,
    )
    .unwrap()
}

#[test]
fn greedy_action_is_deterministic() {
    let a = agent(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = a.act(&[300.0, 0.3], false, &mut rng).unwrap();
    let y = a.act(&[300.0, 0.3], false, &mut rng).unwrap();
    assert_eq!(x, y);
}

#[test]
fn zero_noise_exploration_is_greedy() {
    let mut a = agent(1);
    a.noise_sigma = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(
        a.act(&[300.0, 0.3], true, &mut rng).unwrap(),
        a.act(&[300.0, 0.3], false, &mut rng).unwrap()
    );
}

#[test]
fn actions_stay_in_bounds() {
    let mut a = agent(2);
    a.noise_sigma = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10_000 {
        let obs = [rng.random_range(-5e3..5e3), rng.random_range(0.0..1.0)];
        let u = a.act(&obs, rng.random_bool(0.5), &mut rng).unwrap();
        assert!((0.0..=1.0).contains(&u[0]));
        assert!((-1.0..=1.0).contains(&u[1]));
    }
}

#[test]
fn rejects_bad_construction() {
    let cfg = AgentConfig::default();
    assert!(Agent::new(2, vec![1.0], vec![0.0], ObsNormalizer::identity(2), &cfg, 0).is_err());
    assert!(Agent::new(3, vec![0.0], vec![1.0], ObsNormalizer::identity(2), &cfg, 0).is_err());
    let bad = AgentConfig { gamma: 1.0, ..cfg };
    assert!(Agent::new(2, vec![0.0], vec![1.0], ObsNormalizer::identity(2), &bad, 0).is_err());
}

#[test]
fn learn_step_waits_for_a_full_batch() {
    let mut a = agent(3);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert_eq!(a.learn_step(4, &mut rng).unwrap(), None);
    for _ in 0..3 {
        a.remember(Transition {
            observation: vec![0.0, 0.3],
            action: vec![0.5, 0.0],
            reward: 1.0,
            observation_next: vec![0.0, 0.3],
            done: true,
        })
        .unwrap();
    }
    assert_eq!(a.learn_step(4, &mut rng).unwrap(), None);
    assert!(a.learn_step(3, &mut rng).unwrap().is_some());
}

fn one_d_agent(seed: u64, gamma: f64) -> Agent {
    let cfg = AgentConfig {
        gamma,
        hidden_sizes: vec![16, 16],
        ..AgentConfig::default()
    };
    Agent::new(
        1,
        vec![-1.0],
        vec![1.0],
        ObsNormalizer::identity(1),
        &cfg,
        seed,
    )
    .unwrap()
}

#[test]
fn done_transitions_ignore_targets() {
    // With every transition terminal the critic target is r alone, so
    // scrambling the target networks must not change the critic update.
    let mut a = one_d_agent(4, 0.99);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..32 {
        let o = rng.random_range(-1.0..1.0);
        a.remember(Transition {
            observation: vec![o],
            action: vec![rng.random_range(-1.0..1.0)],
            reward: 0.7,
            observation_next: vec![-o],
            done: true,
        })
        .unwrap();
    }
    let mut b = a.clone();
    b.critic_target =
        Mlp::seeded(&[2, 16, 16, 1], Activation::Relu, Activation::Identity, 99).unwrap();
    b.actor_target = Mlp::seeded(&[1, 16, 16, 1], Activation::Relu, Activation::Tanh, 98).unwrap();
    let sa = a
        .learn_step(16, &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap()
        .unwrap();
    let sb = b
        .learn_step(16, &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap()
        .unwrap();
    assert_eq!(sa.critic_loss, sb.critic_loss);
    assert_eq!(a.critic, b.critic);
}

#[test]
fn critic_converges_to_constant_reward() {
    let r_bar = -1.5;
    let mut a = one_d_agent(5, 0.5);
    a.gamma = f64::MIN_POSITIVE; // γ → 0
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..64 {
        a.remember(Transition {
            observation: vec![rng.random_range(-1.0..1.0)],
            action: vec![rng.random_range(-1.0..1.0)],
            reward: r_bar,
            observation_next: vec![0.0],
            done: true,
        })
        .unwrap();
    }
    for _ in 0..2000 {
        a.learn_step(32, &mut rng).unwrap();
    }
    for _ in 0..20 {
        let o = [rng.random_range(-1.0..1.0)];
        let act = [rng.random_range(-1.0..1.0)];
        let q = a.q_value(&o, &act).unwrap();
        assert!((q - r_bar).abs() <= 0.05 * r_bar.abs(), "Q = {q}");
    }
}

#[test]
fn single_sample_loss_settles() {
    // Overfitting one transition: after burn-in the critic loss stops growing.
    let mut ok = 0;
    for seed in 0..20 {
        let mut a = one_d_agent(seed, 0.9);
        a.remember(Transition {
            observation: vec![0.2],
            action: vec![0.1],
            reward: 1.0,
            observation_next: vec![0.2],
            done: false,
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let losses: Vec<f64> = (0..400)
            .map(|_| a.learn_step(1, &mut rng).unwrap().unwrap().critic_loss)
            .collect();
        let tail = &losses[100..];
        let first = tail[..50].iter().sum::<f64>() / 50.0;
        let last = tail[tail.len() - 50..].iter().sum::<f64>() / 50.0;
        if last <= first {
            ok += 1;
        }
    }
    assert!(ok >= 19, "{ok}/20 seeds");
}

#[test]
fn noise_schedule_anneals_linearly() {
    let cfg = AgentConfig::default();
    assert_eq!(cfg.noise_for_episode(0), 0.1);
    assert!((cfg.noise_for_episode(20) - 0.06).abs() < 1e-15);
    assert_eq!(cfg.noise_for_episode(40), 0.02);
    assert_eq!(cfg.noise_for_episode(79), 0.02);
}

#[test]
fn checkpoint_restores_the_policy() {
    let mut a = agent(7);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..80 {
        a.remember(Transition {
            observation: vec![rng.random_range(-500.0..500.0), 0.3],
            action: a.random_action(&mut rng),
            reward: -1.0,
            observation_next: vec![0.0, 0.3],
            done: false,
        })
        .unwrap();
    }
    for _ in 0..10 {
        a.learn_step(16, &mut rng).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.json");
    a.checkpoint().save(&path).unwrap();
    let b = AgentCheckpoint::load(&path)
        .unwrap()
        .into_agent(100)
        .unwrap();
    assert_eq!(b.actor, a.actor);
    assert_eq!(b.critic_target, a.critic_target);
    assert!(b.buffer.is_empty());
    let o = [123.0, 0.29];
    assert_eq!(
        a.act(&o, false, &mut rng).unwrap(),
        b.act(&o, false, &mut rng).unwrap()
    );
}

#[test]
fn multi_agent_actions_respect_ranges() {
    let sys = MultiAgentSystem::new(&AgentConfig::default(), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = sys
        .act(
            Observation {
                t_dem: 400.0,
                soc: 0.3,
            },
            true,
            &mut rng,
        )
        .unwrap();
    assert!((0.0..=1.0).contains(&a.u_mot1));
    assert!((-1.0..=1.0).contains(&a.u_mot2));
}

#[test]
fn toy_task_is_learned() {
    let task = toy::IntegratorTask::default();
    let report = task
        .train(&toy::IntegratorTask::default_config(), 0, 200)
        .unwrap();
    assert!(report.solved, "{report:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn soft_update_is_convex(seed in 0u64..500, tau in 0.0f64..=1.0) {
        let mut a = agent(seed);
        let b = agent(seed + 1);
        a.actor_target = b.actor.clone();
        let before = a.actor_target.flat_params();
        a.actor.soft_update_into(&mut a.actor_target, tau).unwrap();
        for ((n, o), p) in a.actor_target.flat_params().iter().zip(before).zip(a.actor.flat_params()) {
            prop_assert!(*n >= o.min(p) - 1e-15 && *n <= o.max(p) + 1e-15);
        }
    }
}
