use super::*;
use crate::ddpg::AgentConfig;

fn tiny(mode: TrainMode) -> ExperimentConfig {
    ExperimentConfig {
        mode,
        episodes: 2,
        seeds: vec![0],
        agent: AgentConfig {
            hidden_sizes: vec![8, 8],
            warmup_steps: 100,
            batch_size: 16,
            ..AgentConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn training_is_reproducible() {
    let c = tiny(TrainMode::Multi);
    let a = train(&c, 3).unwrap();
    let b = train(&c, 3).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.log.to_csv(), b.log.to_csv());
    assert_eq!(a.log.records.len(), 2);
    assert!(a.log.records.iter().all(|r| r.reward_agent2.is_some()));
}

#[test]
fn single_mode_logs_one_agent() {
    let c = tiny(TrainMode::Single);
    let o = train(&c, 0).unwrap();
    let r = &o.log.records[0];
    assert!(r.reward_agent2.is_none());
    assert_eq!(r.reward_agent1, r.reward_single);
    assert!(curve_csv(&o.log, 2).is_err());
}

#[test]
fn zero_ratio_logs_local_rewards() {
    let mut c = tiny(TrainMode::Multi);
    c.r_ind = 0.0;
    c.episodes = 1;
    let o = train(&c, 1).unwrap();
    let r = &o.log.records[0];
    // with r_ind = 0 the agents' sums add up to the local parts of the combined reward
    let global = r.combined_reward - r.reward_agent1 - r.reward_agent2.unwrap();
    assert!(global <= 0.0);
}

#[test]
fn sweep_cell_equals_direct_training() {
    let c = tiny(TrainMode::Multi);
    let cells = sweep_rind(&c, &[0.2], 1).unwrap();
    assert_eq!(cells.len(), 1);
    let direct = train(&c, 0).unwrap();
    assert_eq!(cells[0].outcome.as_ref().unwrap().log, direct.log);
}

#[test]
fn sweep_writes_manifest_and_curves() {
    let mut c = tiny(TrainMode::Multi);
    c.seeds = vec![0, 1];
    let cells = sweep_rind(&c, &[0.0, 0.4], 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m = write_sweep(dir.path(), &c, &cells).unwrap();
    assert_eq!(m.cells.len(), 4);
    assert_eq!(m.failed_cells(), 0);
    for cell in &m.cells {
        for agent in ["curve_agent1", "curve_agent2"] {
            let text = std::fs::read_to_string(dir.path().join(&cell.files[agent])).unwrap();
            assert_eq!(text.lines().count(), 1 + c.episodes);
        }
    }
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn policy_checkpoint_reproduces_evaluation() {
    let c = tiny(TrainMode::Multi);
    let o = train(&c, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.json");
    o.policy.save(&path).unwrap();
    let loaded = Policy::load(&path).unwrap();
    let pt = c.powertrain().unwrap();
    let cycle = c.evaluation_cycle().unwrap();
    let a = evaluate(
        pt.clone(),
        &o.policy,
        &cycle,
        &c.reward,
        &c.eval_initial_socs,
    )
    .unwrap();
    let b = evaluate(pt, &loaded, &cycle, &c.reward, &c.eval_initial_socs).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 3);
    for r in &a {
        assert_eq!(
            r.soc_error_pct().unwrap(),
            crate::environment::soc_error(r.initial_soc, r.end_soc).unwrap()
        );
    }
}

#[test]
fn engine_off_policy_burns_nothing() {
    // gentle cruise, always within MG2's torque
    let c = ExperimentConfig::default();
    let speeds: Vec<f64> = (0..200).map(|k| (k as f64 * 0.5).min(15.0)).collect();
    let cruise = crate::drivecycle::DriveCycle::new("cruise", 1.0, speeds, None).unwrap();
    let rows = evaluate(
        c.powertrain().unwrap(),
        &Policy::Zero,
        &cruise,
        &c.reward,
        &[0.3],
    )
    .unwrap();
    assert_eq!(rows[0].fuel_l_per_100km, 0.0);
    assert!(rows[0].end_soc < 0.3);
}

#[test]
fn zero_distance_cycle_is_rejected() {
    let c = ExperimentConfig::default();
    let idle = crate::drivecycle::DriveCycle::new("idle", 1.0, vec![0.0; 10], None).unwrap();
    let e = evaluate(
        c.powertrain().unwrap(),
        &Policy::Zero,
        &idle,
        &c.reward,
        &[0.3],
    )
    .unwrap_err();
    assert!(matches!(e, crate::Error::Argument(_)));
}
