use serde::{Deserialize, Serialize};

use crate::powertrain::{Mode, VehicleConfig};

/// Single-agent action: MG1 generation fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSingle {
    pub u_mot1: f64,
}

/// Multi-agent action: MG1 generation fraction and MG2 torque fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionMulti {
    pub u_mot1: f64,
    pub u_mot2: f64,
}

impl ActionMulti {
    pub fn clamped(self) -> Self {
        Self {
            u_mot1: self.u_mot1.clamp(0.0, 1.0),
            u_mot2: self.u_mot2.clamp(-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    Single(ActionSingle),
    Multi(ActionMulti),
}

/// Mode and shaft torques implied by a pair of commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedAction {
    pub mode: Mode,
    pub t_mot1: f64,
    pub t_mot2: f64,
    pub t_eng: f64,
    /// Engine torque passed to the gearbox, engine-shaft referred.
    pub t_gb: f64,
    pub u_eng: f64,
}

/// Turn `(u_mot1, u_mot2)` and a wheel torque demand into a mode and torques.
///
/// Braking demands select regenerative braking. Otherwise the engine covers
/// whatever wheel torque MG2 leaves uncovered; a zero residual means series
/// operation, a positive one closes the clutch.
pub fn map_actions(u_mot1: f64, u_mot2: f64, t_dem: f64, cfg: &VehicleConfig) -> MappedAction {
    let u_mot1 = u_mot1.clamp(0.0, 1.0);
    let u_mot2 = u_mot2.clamp(-1.0, 1.0);
    let t_mot1 = u_mot1 * cfg.mot1_torque_max_nm;
    let (mode, t_gb, t_mot2) = if t_dem < 0.0 {
        let t_mot2 = (t_dem / cfg.ratio_i2).max(-cfg.mot2_torque_max_nm);
        (Mode::RegenBrake, 0.0, t_mot2)
    } else {
        let residual_wheel = (t_dem - u_mot2 * cfg.mot2_torque_max_nm * cfg.ratio_i2).max(0.0);
        let t_gb = residual_wheel / cfg.ratio_i1;
        if t_gb > 0.0 {
            (Mode::Parallel, t_gb, u_mot2 * cfg.mot2_torque_max_nm)
        } else {
            (Mode::Series, 0.0, t_dem / cfg.ratio_i2)
        }
    };
    let t_eng = t_mot1 + t_gb;
    MappedAction {
        mode,
        t_mot1,
        t_mot2,
        t_eng,
        t_gb,
        u_eng: (t_eng / cfg.eng_torque_max_nm).clamp(0.0, 1.0),
    }
}

/// Complete a single-agent command with the MG2 fraction that covers the
/// wheel demand on its own (engine pass-through taken as zero).
pub fn close_single_action(u_mot1: f64, t_dem: f64, cfg: &VehicleConfig) -> ActionMulti {
    let engine_wheel_contrib = 0.0;
    let u_mot2 =
        ((t_dem - engine_wheel_contrib) / (cfg.mot2_torque_max_nm * cfg.ratio_i2)).clamp(-1.0, 1.0);
    ActionMulti {
        u_mot1: u_mot1.clamp(0.0, 1.0),
        u_mot2,
    }
}
