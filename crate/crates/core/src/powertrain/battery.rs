use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constant-parameter equivalent-circuit battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatterySpec {
    pub ocv_v: f64,
    pub resistance_ohm: f64,
    pub capacity_ah: f64,
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            ocv_v: 350.0,
            resistance_ohm: 0.15,
            capacity_ah: 54.3,
            soc_min: 0.20,
            soc_max: 0.80,
        }
    }
}

impl BatterySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.ocv_v > 0.0 && self.resistance_ohm > 0.0 && self.capacity_ah > 0.0) {
            return Err(Error::Config(
                "battery ocv_v, resistance_ohm and capacity_ah must be > 0".into(),
            ));
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(Error::Config(format!(
                "battery SoC window must satisfy 0 <= min < max <= 1, got [{}, {}]",
                self.soc_min, self.soc_max
            )));
        }
        Ok(())
    }

    /// Largest terminal power the circuit can deliver, U²/(4·R_int).
    pub fn max_discharge_power(&self) -> f64 {
        self.ocv_v * self.ocv_v / (4.0 * self.resistance_ohm)
    }

    pub fn capacity_coulombs(&self) -> f64 {
        self.capacity_ah * 3600.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub current_a: f64,
    pub soc_next: f64,
    pub loss_w: f64,
}

/// Battery current, next SoC and resistive loss for a terminal power
/// (positive = discharge) held for `dt_s`.
pub fn battery_step(power_w: f64, soc: f64, dt_s: f64, spec: &BatterySpec) -> Result<BatteryStep> {
    let u = spec.ocv_v;
    let r = spec.resistance_ohm;
    let disc = u * u - 4.0 * r * power_w;
    if disc < 0.0 {
        return Err(Error::PowerLimitExceeded {
            requested_w: power_w,
            limit_w: spec.max_discharge_power(),
        });
    }
    // (U − √D)/(2R) rewritten as 2P/(U + √D) to avoid cancellation at small P.
    let current_a = 2.0 * power_w / (u + disc.sqrt());
    Ok(BatteryStep {
        current_a,
        soc_next: soc - current_a * dt_s / spec.capacity_coulombs(),
        loss_w: r * current_a * current_a,
    })
}
