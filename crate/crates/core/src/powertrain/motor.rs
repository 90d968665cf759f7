use serde::{Deserialize, Serialize};

use super::map::Map2d;
use super::mech_power_w;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotorSpec {
    /// Efficiency over (rpm, |N·m|), each value in (0, 1].
    pub efficiency_map: Map2d,
    pub torque_max: f64,
    pub speed_max: f64,
}

impl MotorSpec {
    pub fn validate(&self) -> Result<()> {
        let m = &self.efficiency_map;
        if !(m.min_value() > 0.0 && m.max_value() <= 1.0) {
            return Err(Error::Config(format!(
                "efficiency map values must lie in (0, 1], found [{}, {}]",
                m.min_value(),
                m.max_value()
            )));
        }
        if !(self.torque_max > 0.0 && self.speed_max > 0.0) {
            return Err(Error::Config(
                "motor torque_max and speed_max must be > 0".into(),
            ));
        }
        let (n, t) = (m.speeds(), m.torques());
        if n[0] > 0.0
            || n[n.len() - 1] < self.speed_max
            || t[0] > 0.0
            || t[t.len() - 1] < self.torque_max
        {
            return Err(Error::Config(
                "efficiency map must cover 0..speed_max and 0..torque_max".into(),
            ));
        }
        Ok(())
    }

    pub fn efficiency(&self, speed_rpm: f64, torque_nm: f64) -> f64 {
        self.efficiency_map.lookup(speed_rpm.abs(), torque_nm.abs())
    }
}

/// MG1 electrical output in W. MG1 is driven by the engine, so the
/// electrical side sees the mechanical input scaled by η₁.
pub fn mg1_power(speed_rpm: f64, torque_nm: f64, spec: &MotorSpec) -> f64 {
    if torque_nm == 0.0 {
        return 0.0;
    }
    mech_power_w(speed_rpm, torque_nm) * spec.efficiency(speed_rpm, torque_nm)
}

/// MG2 electrical power in W, positive when drawn from the battery.
///
/// Traction (`T > 0`) draws mech/η₂; regeneration (`T ≤ 0`) returns mech·η₂.
pub fn mg2_power(speed_rpm: f64, torque_nm: f64, spec: &MotorSpec) -> Result<f64> {
    if torque_nm == 0.0 {
        return Ok(0.0);
    }
    let eta = spec.efficiency(speed_rpm, torque_nm);
    if !(eta > 0.0) {
        return Err(Error::Config(format!(
            "MG2 efficiency is {eta} at {speed_rpm} rpm, {torque_nm} N·m"
        )));
    }
    let mech = mech_power_w(speed_rpm, torque_nm);
    Ok(if torque_nm > 0.0 {
        mech / eta
    } else {
        mech * eta
    })
}
