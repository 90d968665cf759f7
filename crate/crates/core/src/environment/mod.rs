//! Episode environment over a drive cycle.
//!
//! Observation is `[T_dem, SoC]`, where `T_dem` is the wheel torque demand
//! of the step about to be taken. Agents act through [`Action`]; the
//! environment maps commands to a powertrain mode, simulates one step and
//! returns every reward channel so single- and multi-agent training can
//! share one implementation.

pub mod actions;
pub mod metrics;
pub mod reward;
pub mod trace;

use std::sync::Arc;

use serde::Serialize;

pub use actions::{
    close_single_action, map_actions, Action, ActionMulti, ActionSingle, MappedAction,
};
pub use metrics::{fuel_l_per_100km, fuel_saving, soc_error, FUEL_DENSITY_KG_PER_L};
pub use reward::{
    handshake, reward_components, reward_single, soc_weight, RewardConfig, RewardSpec,
    DEFAULT_ALPHA,
};

use crate::drivecycle::{kinematics, DriveCycle};
use crate::powertrain::{DriveInput, Mode, Powertrain, PowertrainState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub t_dem: f64,
    pub soc: f64,
}

impl Observation {
    pub fn to_array(self) -> [f64; 2] {
        [self.t_dem, self.soc]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepInfo {
    pub p_loss_w: f64,
    /// Fuel burned during this step (g).
    pub fuel_g: f64,
    pub infeasible: bool,
    pub mode: Mode,
    /// SoC left its permitted window; the episode ended early.
    pub soc_violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutcome {
    pub observation_next: Observation,
    pub reward_single: f64,
    pub r_global: f64,
    pub r_local1: f64,
    pub r_local2: f64,
    pub r_m1: f64,
    pub r_m2: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeSummary {
    pub steps: usize,
    pub soc_initial: f64,
    pub soc_end: f64,
    pub fuel_g: f64,
    pub distance_m: f64,
    pub infeasible_steps: usize,
    pub loss_energy_j: f64,
    pub terminated_early: bool,
}

impl EpisodeSummary {
    pub fn fuel_l_per_100km(&self) -> Result<f64> {
        fuel_l_per_100km(self.fuel_g, self.distance_m)
    }

    pub fn soc_error_pct(&self) -> Result<f64> {
        soc_error(self.soc_initial, self.soc_end)
    }
}

pub struct Environment {
    powertrain: Arc<Powertrain>,
    cycle: DriveCycle,
    kinematics: Vec<(f64, f64)>,
    torque_demand: Vec<f64>,
    reward: RewardSpec,
    state: PowertrainState,
    cursor: usize,
    done: bool,
    soc_initial: f64,
    distance_m: f64,
    infeasible_steps: usize,
    loss_energy_j: f64,
    terminated_early: bool,
}

impl Environment {
    pub fn new(
        powertrain: Arc<Powertrain>,
        cycle: DriveCycle,
        reward: RewardSpec,
        initial_soc: f64,
    ) -> Result<Self> {
        cycle.validate()?;
        reward.validate()?;
        if cycle.is_empty() {
            return Err(Error::Argument("cannot run an empty cycle".into()));
        }
        let b = &powertrain.battery;
        if !(b.soc_min..=b.soc_max).contains(&initial_soc) {
            return Err(Error::Argument(format!(
                "initial SoC {initial_soc} outside [{}, {}]",
                b.soc_min, b.soc_max
            )));
        }
        let kinematics = kinematics(&cycle);
        let torque_demand = kinematics
            .iter()
            .zip(&cycle.grades)
            .map(|(&(v, a), &g)| crate::powertrain::demand(v, a, g, &powertrain.vehicle).torque_nm)
            .collect();
        Ok(Self {
            powertrain,
            cycle,
            kinematics,
            torque_demand,
            reward,
            state: PowertrainState::initial(initial_soc),
            cursor: 0,
            done: false,
            soc_initial: initial_soc,
            distance_m: 0.0,
            infeasible_steps: 0,
            loss_energy_j: 0.0,
            terminated_early: false,
        })
    }

    pub fn observation(&self) -> Observation {
        Observation {
            t_dem: self.torque_demand.get(self.cursor).copied().unwrap_or(0.0),
            soc: self.state.soc,
        }
    }

    pub fn state(&self) -> &PowertrainState {
        &self.state
    }

    pub fn reward_spec(&self) -> &RewardSpec {
        &self.reward
    }

    pub fn cycle(&self) -> &DriveCycle {
        &self.cycle
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Usage("step called on a finished episode".into()));
        }
        let k = self.cursor;
        let pt = &*self.powertrain;
        let (speed, accel) = self.kinematics[k];
        let drive = DriveInput {
            time_s: k as f64 * self.cycle.dt,
            speed_mps: speed,
            accel_mps2: accel,
            grade_rad: self.cycle.grades[k],
            dt_s: self.cycle.dt,
        };
        let t_dem = self.torque_demand[k];
        let cmd = match action {
            Action::Single(a) => close_single_action(a.u_mot1, t_dem, &pt.vehicle),
            Action::Multi(a) => a.clamped(),
        };
        let mapped = map_actions(cmd.u_mot1, cmd.u_mot2, t_dem, &pt.vehicle);
        let next = match mapped.mode {
            Mode::Series => pt.step_series(&self.state, &drive, t_dem, cmd.u_mot1)?,
            Mode::Parallel => {
                pt.step_parallel(&self.state, &drive, t_dem, cmd.u_mot1, cmd.u_mot2)?
            }
            Mode::RegenBrake => pt.step_regen(&self.state, &drive, t_dem, cmd.u_mot1)?,
        };

        let spec = &self.reward;
        let soc = next.soc;
        let mut single = reward_single(next.p_loss_w, soc, spec);
        let mut parts = reward_components(next.p_loss_w, next.loss_eng_w, soc, spec);
        let b = &pt.battery;
        let soc_violation = soc < b.soc_min || soc > b.soc_max;
        if soc_violation {
            single -= spec.termination_penalty;
            parts.local1 -= spec.termination_penalty;
            parts.local2 -= spec.termination_penalty;
        }
        let (r_m1, r_m2) = handshake(parts.global, parts.local1, parts.local2, spec.r_ind);

        let fuel_g = next.fuel_rate_gps * drive.dt_s;
        self.distance_m += speed * drive.dt_s;
        self.loss_energy_j += next.p_loss_w * drive.dt_s;
        if next.infeasible {
            self.infeasible_steps += 1;
        }
        self.cursor += 1;
        self.done = soc_violation || self.cursor == self.kinematics.len();
        self.terminated_early = soc_violation;
        let info = StepInfo {
            p_loss_w: next.p_loss_w,
            fuel_g,
            infeasible: next.infeasible,
            mode: next.mode,
            soc_violation,
        };
        self.state = next;
        Ok(StepOutcome {
            observation_next: self.observation(),
            reward_single: single,
            r_global: parts.global,
            r_local1: parts.local1,
            r_local2: parts.local2,
            r_m1,
            r_m2,
            done: self.done,
            info,
        })
    }

    pub fn summary(&self) -> EpisodeSummary {
        EpisodeSummary {
            steps: self.cursor,
            soc_initial: self.soc_initial,
            soc_end: self.state.soc,
            fuel_g: self.state.cumulative_fuel_g,
            distance_m: self.distance_m,
            infeasible_steps: self.infeasible_steps,
            loss_energy_j: self.loss_energy_j,
            terminated_early: self.terminated_early,
        }
    }
}
