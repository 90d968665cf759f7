use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vehicle-level constants: road load, wheel/gear geometry and component
/// torque limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleConfig {
    pub mass_kg: f64,
    pub gravity: f64,
    pub rolling_coeff: f64,
    pub air_density: f64,
    pub frontal_area_m2: f64,
    pub drag_coeff: f64,
    /// Wheel radius in metres (distinct from the battery's internal resistance).
    pub wheel_radius_m: f64,
    /// Engine/MG1 shaft to wheels.
    pub ratio_i1: f64,
    /// MG2 shaft to wheels.
    pub ratio_i2: f64,
    pub mot1_torque_max_nm: f64,
    pub mot2_torque_max_nm: f64,
    pub eng_torque_max_nm: f64,
    /// Clutch-closed engine operating range (rpm).
    pub engine_speed_range: (f64, f64),
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            mass_kg: 1500.0,
            gravity: 9.81,
            rolling_coeff: 0.015,
            air_density: 1.206,
            frontal_area_m2: 2.2,
            drag_coeff: 0.30,
            wheel_radius_m: 0.31,
            ratio_i1: 3.0,
            ratio_i2: 4.0,
            mot1_torque_max_nm: 120.0,
            mot2_torque_max_nm: 250.0,
            eng_torque_max_nm: 150.0,
            engine_speed_range: (800.0, 5000.0),
        }
    }
}

impl VehicleConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("gravity", self.gravity),
            ("rolling_coeff", self.rolling_coeff),
            ("air_density", self.air_density),
            ("frontal_area_m2", self.frontal_area_m2),
            ("drag_coeff", self.drag_coeff),
            ("wheel_radius_m", self.wheel_radius_m),
            ("ratio_i1", self.ratio_i1),
            ("ratio_i2", self.ratio_i2),
            ("mot1_torque_max_nm", self.mot1_torque_max_nm),
            ("mot2_torque_max_nm", self.mot2_torque_max_nm),
            ("eng_torque_max_nm", self.eng_torque_max_nm),
            ("engine_speed_range.min", self.engine_speed_range.0),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "{key} must be finite and > 0, got {value}"
                )));
            }
        }
        let (lo, hi) = self.engine_speed_range;
        if !(hi.is_finite() && hi > lo) {
            return Err(Error::Config(format!(
                "engine_speed_range must satisfy min < max, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    /// Wheel speed in rpm for a vehicle speed in m/s.
    pub fn wheel_rpm(&self, speed_mps: f64) -> f64 {
        speed_mps / self.wheel_radius_m * 60.0 / (2.0 * std::f64::consts::PI)
    }
}

/// Road-load demand at the wheels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Demand {
    pub force_n: f64,
    pub power_w: f64,
    /// Wheel-referred torque.
    pub torque_nm: f64,
}

/// Longitudinal force, power and wheel torque demand. The grade term uses
/// the small-angle form `m·g·grade`.
pub fn demand(speed_mps: f64, accel_mps2: f64, grade_rad: f64, cfg: &VehicleConfig) -> Demand {
    let m = cfg.mass_kg;
    let g = cfg.gravity;
    let force_n = m * g * cfg.rolling_coeff
        + 0.5 * cfg.air_density * cfg.frontal_area_m2 * cfg.drag_coeff * speed_mps * speed_mps
        + m * g * grade_rad
        + m * accel_mps2;
    Demand {
        force_n,
        power_w: force_n * speed_mps,
        torque_nm: force_n * cfg.wheel_radius_m,
    }
}
