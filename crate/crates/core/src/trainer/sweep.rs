use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TrainMode};
use super::run::{train, RunLog, TrainOutcome};
use crate::{Error, Result};

pub const MANIFEST_FORMAT: &str = "mmhev-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const SMOOTHING_WINDOW: usize = 5;

/// Trailing moving average; the first entries average what is available.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    (0..values.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            values[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// Learning curve for agent 1 or 2: `episode, reward, reward_smoothed`.
pub fn curve_csv(log: &RunLog, agent: usize) -> Result<String> {
    let raw: Vec<f64> = match agent {
        1 => log.records.iter().map(|r| r.reward_agent1).collect(),
        2 => log
            .records
            .iter()
            .map(|r| {
                r.reward_agent2
                    .ok_or_else(|| Error::Argument("run has no second agent".into()))
            })
            .collect::<Result<_>>()?,
        _ => {
            return Err(Error::Argument(format!(
                "agent must be 1 or 2, got {agent}"
            )))
        }
    };
    let smooth = moving_average(&raw, SMOOTHING_WINDOW);
    let mut s = String::from("episode,reward,reward_smoothed\n");
    for (r, (v, m)) in log.records.iter().zip(raw.iter().zip(&smooth)) {
        s.push_str(&format!("{},{v},{m}\n", r.episode));
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub mode: TrainMode,
    pub r_ind: f64,
    pub seed: u64,
    pub config_hash: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Output role → path relative to the manifest.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub command: String,
    pub config_hash: String,
    pub effective_config: ExperimentConfig,
    pub cells: Vec<CellEntry>,
    /// Outputs not tied to a training cell (tables, metrics, curves).
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Self {
            format: MANIFEST_FORMAT.into(),
            version: MANIFEST_VERSION,
            command: command.into(),
            config_hash: config.hash(),
            effective_config: config.clone(),
            cells: Vec::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.status != "ok").count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(
            &dir.join("manifest.json"),
            &serde_json::to_string_pretty(self)?,
        )
    }
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Write a run's log, curves and policy under `dir/rel` and describe them.
pub fn write_run(
    dir: &Path,
    rel: &str,
    config: &ExperimentConfig,
    outcome: &TrainOutcome,
) -> Result<CellEntry> {
    let log = &outcome.log;
    let mut files = BTreeMap::new();
    let mut put = |role: &str, name: &str, text: String| -> Result<()> {
        let rel_path = if rel.is_empty() {
            name.to_string()
        } else {
            format!("{rel}/{name}")
        };
        write_file(&dir.join(&rel_path), &text)?;
        files.insert(role.to_string(), rel_path);
        Ok(())
    };
    put("run_log_csv", "run_log.csv", log.to_csv())?;
    put(
        "run_log_json",
        "run_log.json",
        serde_json::to_string_pretty(log)?,
    )?;
    put("curve_agent1", "curve_agent1.csv", curve_csv(log, 1)?)?;
    if log.mode == TrainMode::Multi {
        put("curve_agent2", "curve_agent2.csv", curve_csv(log, 2)?)?;
    }
    put(
        "policy",
        "policy.json",
        serde_json::to_string(&outcome.policy.checkpoint())?,
    )?;
    Ok(CellEntry {
        mode: log.mode,
        r_ind: log.r_ind,
        seed: log.seed,
        config_hash: config.hash(),
        status: "ok".into(),
        error: None,
        files,
    })
}

/// Wall-clock timings, written apart from the deterministic outputs.
pub fn write_timing(dir: &Path, outcomes: &[&TrainOutcome]) -> Result<()> {
    let entries: Vec<serde_json::Value> = outcomes
        .iter()
        .map(|o| {
            serde_json::json!({
                "mode": o.log.mode.as_str(),
                "r_ind": o.log.r_ind,
                "seed": o.log.seed,
                "episode_wall_time_s": o.wall_time_s,
            })
        })
        .collect();
    write_file(
        &dir.join("timing.json"),
        &serde_json::to_string_pretty(&entries)?,
    )
}

pub struct SweepCell {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub outcome: Result<TrainOutcome>,
}

/// Multi-agent training for every `(ratio, seed)` pair, at most `jobs` at a
/// time. Failed cells are kept with their error; the rest still run.
pub fn sweep_rind(
    config: &ExperimentConfig,
    ratios: &[f64],
    jobs: usize,
) -> Result<Vec<SweepCell>> {
    if ratios.is_empty() {
        return Err(Error::Argument("ratio list must not be empty".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Argument(format!("ratio {r} outside [0, 1]")));
    }
    config.validate()?;
    let cells: Vec<(ExperimentConfig, u64)> = ratios
        .iter()
        .flat_map(|&r| {
            let mut c = config.clone();
            c.mode = TrainMode::Multi;
            c.r_ind = r;
            config.seeds.iter().map(move |&s| (c.clone(), s))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .into_par_iter()
            .map(|(c, seed)| {
                let outcome = train(&c, seed);
                SweepCell {
                    config: c,
                    seed,
                    outcome,
                }
            })
            .collect()
    }))
}

/// Write every cell and the manifest under `dir`.
pub fn write_sweep(dir: &Path, config: &ExperimentConfig, cells: &[SweepCell]) -> Result<Manifest> {
    let mut manifest = Manifest::new("sweep", config);
    for cell in cells {
        let rel = format!("cells/rind_{:.2}_seed_{}", cell.config.r_ind, cell.seed);
        let entry = match &cell.outcome {
            Ok(o) => write_run(dir, &rel, &cell.config, o)?,
            Err(e) => CellEntry {
                mode: cell.config.mode,
                r_ind: cell.config.r_ind,
                seed: cell.seed,
                config_hash: cell.config.hash(),
                status: "failed".into(),
                error: Some(e.to_string()),
                files: BTreeMap::new(),
            },
        };
        manifest.cells.push(entry);
    }
    let done: Vec<&TrainOutcome> = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .collect();
    write_timing(dir, &done)?;
    manifest.write(dir)?;
    Ok(manifest)
}
