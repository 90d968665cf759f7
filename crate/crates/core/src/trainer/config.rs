use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ddpg::AgentConfig;
use crate::drivecycle::{self, synthetic, CompositeCycleSpec, CyclePhase, DriveCycle, PhaseLabel};
use crate::environment::{RewardConfig, RewardSpec};
use crate::powertrain::{BatterySpec, MapSources, Powertrain, VehicleConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Single,
    Multi,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Single => "single",
            TrainMode::Multi => "multi",
        }
    }
}

/// A phase cut from a cycle file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSource {
    pub label: PhaseLabel,
    pub path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleConfig {
    /// Four phase sources; the bundled synthetic phases when empty.
    pub phases: Vec<PhaseSource>,
    /// Permutation seed; the run seed when absent.
    pub seed: Option<u64>,
    /// Evaluation cycle file; the composite in canonical order when absent.
    pub evaluation: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: TrainMode,
    pub r_ind: f64,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub initial_soc: f64,
    pub eval_initial_socs: Vec<f64>,
    pub dt: f64,
    pub vehicle: VehicleConfig,
    pub battery: BatterySpec,
    pub maps: MapSources,
    pub reward: RewardConfig,
    pub agent: AgentConfig,
    pub cycle: CycleConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Multi,
            r_ind: 0.2,
            episodes: 80,
            seeds: vec![0, 1, 2, 3, 4],
            initial_soc: 0.28,
            eval_initial_socs: vec![0.25, 0.28, 0.30],
            dt: 1.0,
            vehicle: VehicleConfig::default(),
            battery: BatterySpec::default(),
            maps: MapSources::default(),
            reward: RewardConfig::default(),
            agent: AgentConfig::default(),
            cycle: CycleConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path
            .parent()
            .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        Self::from_json(&text, &base).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be > 0".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if !(0.0..=1.0).contains(&self.r_ind) {
            return Err(Error::Config(format!(
                "r_ind must lie in [0, 1], got {}",
                self.r_ind
            )));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        self.vehicle.validate()?;
        self.battery.validate()?;
        self.agent.validate()?;
        let window = self.battery.soc_min..=self.battery.soc_max;
        for &soc in std::iter::once(&self.initial_soc).chain(&self.eval_initial_socs) {
            if !window.contains(&soc) {
                return Err(Error::Config(format!(
                    "initial SoC {soc} outside battery window [{}, {}]",
                    self.battery.soc_min, self.battery.soc_max
                )));
            }
        }
        self.reward.resolve(self.initial_soc, self.r_ind)?;
        if !self.cycle.phases.is_empty() && self.cycle.phases.len() != 4 {
            return Err(Error::Config(format!(
                "cycle.phases needs 4 entries, got {}",
                self.cycle.phases.len()
            )));
        }
        let files = self
            .cycle
            .phases
            .iter()
            .map(|p| &p.path)
            .chain(&self.cycle.evaluation)
            .chain(&self.maps.engine_fuel_map)
            .chain(&self.maps.mg1_efficiency_map)
            .chain(&self.maps.mg2_efficiency_map);
        for f in files {
            let p = self.resolve(f);
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "referenced file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn powertrain(&self) -> Result<Arc<Powertrain>> {
        Ok(Arc::new(Powertrain::from_sources(
            self.vehicle.clone(),
            self.battery.clone(),
            &self.maps,
            &self.base_dir,
        )?))
    }

    pub fn phases(&self) -> Result<Vec<CyclePhase>> {
        if self.cycle.phases.is_empty() {
            return synthetic::synthetic_phases(self.dt);
        }
        self.cycle
            .phases
            .iter()
            .map(|p| {
                let c = drivecycle::load_cycle(&self.resolve(&p.path), self.dt)?;
                drivecycle::extract_phase(&c, p.start_s, p.end_s, p.label)
            })
            .collect()
    }

    pub fn composite(&self, run_seed: u64) -> Result<CompositeCycleSpec> {
        CompositeCycleSpec::new(self.phases()?, self.cycle.seed.unwrap_or(run_seed))
    }

    pub fn evaluation_cycle(&self) -> Result<DriveCycle> {
        match &self.cycle.evaluation {
            Some(p) => drivecycle::load_cycle(&self.resolve(p), self.dt),
            None => Ok(self.composite(0)?.canonical_cycle()),
        }
    }

    pub fn training_reward(&self) -> Result<RewardSpec> {
        self.reward.resolve(self.initial_soc, self.r_ind)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.episodes, 80);
        assert_eq!(c.seeds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c = ExperimentConfig::from_json(r#"{"mode":"single","episodes":3}"#, Path::new("."))
            .unwrap();
        assert_eq!(c.mode, TrainMode::Single);
        assert_eq!(c.episodes, 3);
        assert_eq!(c.r_ind, 0.2);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            r#"{"episodes":0}"#,
            r#"{"seeds":[]}"#,
            r#"{"r_ind":1.5}"#,
            r#"{"initial_soc":0.9}"#,
            r#"{"unknown_key":1}"#,
            r#"{"cycle":{"evaluation":"missing.csv"}}"#,
        ] {
            let e = ExperimentConfig::from_json(text, Path::new("/nonexistent")).unwrap_err();
            assert!(e.is_input_error(), "{text}: {e}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.r_ind = 0.4;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
