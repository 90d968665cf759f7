//! Reproducible stand-in component maps: a Willans-line engine and a smooth
//! efficiency bowl for the motor/generators.

use serde::{Deserialize, Serialize};

use super::engine::{EngineSpec, LinePoint, GASOLINE_HEAT_VALUE_J_PER_KG};
use super::map::Map2d;
use super::motor::MotorSpec;
use super::{mech_power_w, VehicleConfig};
use crate::Result;

/// `m_f = (P_mech/η_ind + k1·n + k2·n²) / H_f`, reported in g/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WillansEngine {
    pub indicated_efficiency: f64,
    /// Friction power per rpm (W/rpm).
    pub friction_linear: f64,
    /// Friction power per rpm² (W/rpm²).
    pub friction_quadratic: f64,
    pub heat_value: f64,
    pub speed_step_rpm: f64,
    pub torque_step_nm: f64,
}

impl Default for WillansEngine {
    fn default() -> Self {
        Self {
            indicated_efficiency: 0.40,
            friction_linear: 1.0,
            friction_quadratic: 2.8e-4,
            heat_value: GASOLINE_HEAT_VALUE_J_PER_KG,
            speed_step_rpm: 250.0,
            torque_step_nm: 10.0,
        }
    }
}

impl WillansEngine {
    pub fn friction_power_w(&self, speed_rpm: f64) -> f64 {
        self.friction_linear * speed_rpm + self.friction_quadratic * speed_rpm * speed_rpm
    }

    pub fn fuel_rate_gps(&self, speed_rpm: f64, torque_nm: f64) -> f64 {
        let fuel_power = mech_power_w(speed_rpm, torque_nm) / self.indicated_efficiency
            + self.friction_power_w(speed_rpm);
        fuel_power / self.heat_value * 1000.0
    }

    pub fn describe(&self) -> Vec<String> {
        vec![
            "generator: Willans line".to_string(),
            "formula: m_f[g/s] = (n*T/9550*1000/eta_ind + k1*n + k2*n^2) / H_f * 1000".to_string(),
            format!(
                "parameters: eta_ind={} k1={} W/rpm k2={} W/rpm^2 H_f={} J/kg",
                self.indicated_efficiency, self.friction_linear, self.friction_quadratic, self.heat_value
            ),
            "axes: rows = engine speed (rpm), columns = engine torque (N*m), body = fuel rate (g/s)"
                .to_string(),
        ]
    }

    pub fn fuel_map(&self, speed_max: f64, torque_max: f64) -> Result<Map2d> {
        Map2d::from_fn(
            axis(speed_max, self.speed_step_rpm),
            axis(torque_max, self.torque_step_nm),
            |n, t| self.fuel_rate_gps(n, t),
        )
    }
}

/// `0, step, 2·step, …, max` with `max` always included.
fn axis(max: f64, step: f64) -> Vec<f64> {
    let count = (max / step).ceil() as usize;
    let mut v: Vec<f64> = (0..count).map(|k| k as f64 * step).collect();
    v.push(max);
    v
}

/// Minimum-fuel speed for each power, found by scanning the fuel map on a
/// 1 rpm grid over the operating range, subject to the torque limit.
pub fn derive_optimal_line(
    fuel_map: &Map2d,
    speed_range: (f64, f64),
    torque_max: f64,
    points: usize,
) -> Vec<LinePoint> {
    let (n_lo, n_hi) = speed_range;
    let p_max = mech_power_w(n_hi, torque_max);
    let p_min = p_max / points as f64;
    let mut line: Vec<LinePoint> = Vec::with_capacity(points);
    for k in 0..points {
        let p = p_min + (p_max - p_min) * k as f64 / (points - 1) as f64;
        let mut best: Option<(f64, f64)> = None;
        let mut n = n_lo;
        while n <= n_hi + 1e-9 {
            let t = p * 9550.0 / (1000.0 * n);
            if t <= torque_max * (1.0 + 1e-12) {
                let fuel = fuel_map.lookup(n, t);
                if best.is_none_or(|(f, _)| fuel < f) {
                    best = Some((fuel, n));
                }
            }
            n += 1.0;
        }
        let speed_rpm = best.map_or(n_hi, |(_, n)| n);
        line.push(LinePoint {
            power_w: p,
            speed_rpm,
        });
    }
    line
}

pub fn default_engine(vehicle: &VehicleConfig) -> Result<EngineSpec> {
    willans_engine(&WillansEngine::default(), vehicle)
}

pub fn willans_engine(gen: &WillansEngine, vehicle: &VehicleConfig) -> Result<EngineSpec> {
    let fuel_map = gen.fuel_map(vehicle.engine_speed_range.1, vehicle.eng_torque_max_nm)?;
    let optimal_line = derive_optimal_line(
        &fuel_map,
        vehicle.engine_speed_range,
        vehicle.eng_torque_max_nm,
        24,
    );
    Ok(EngineSpec {
        fuel_map,
        optimal_line,
        fuel_heat_value: gen.heat_value,
    })
}

/// `η = clamp(η_peak − a·(n/n_max − x_n)² − b·(|T|/T_max − x_t)², η_floor, η_peak)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyBowl {
    pub peak: f64,
    pub floor: f64,
    pub speed_curvature: f64,
    pub torque_curvature: f64,
    pub peak_speed_frac: f64,
    pub peak_torque_frac: f64,
    pub speed_points: usize,
    pub torque_points: usize,
}

impl Default for EfficiencyBowl {
    fn default() -> Self {
        Self {
            peak: 0.95,
            floor: 0.70,
            speed_curvature: 0.30,
            torque_curvature: 0.25,
            peak_speed_frac: 0.40,
            peak_torque_frac: 0.45,
            speed_points: 21,
            torque_points: 11,
        }
    }
}

impl EfficiencyBowl {
    pub fn efficiency(
        &self,
        speed_rpm: f64,
        torque_nm: f64,
        speed_max: f64,
        torque_max: f64,
    ) -> f64 {
        let x = speed_rpm.abs() / speed_max - self.peak_speed_frac;
        let y = torque_nm.abs() / torque_max - self.peak_torque_frac;
        (self.peak - self.speed_curvature * x * x - self.torque_curvature * y * y)
            .clamp(self.floor, self.peak)
    }

    pub fn describe(&self, name: &str, speed_max: f64, torque_max: f64) -> Vec<String> {
        vec![
            format!("generator: analytic efficiency bowl ({name})"),
            "formula: eta = clamp(peak - a*(n/n_max - xn)^2 - b*(|T|/T_max - xt)^2, floor, peak)"
                .to_string(),
            format!(
                "parameters: peak={} floor={} a={} b={} xn={} xt={} n_max={} rpm T_max={} N*m",
                self.peak,
                self.floor,
                self.speed_curvature,
                self.torque_curvature,
                self.peak_speed_frac,
                self.peak_torque_frac,
                speed_max,
                torque_max
            ),
            "axes: rows = shaft speed (rpm), columns = |torque| (N*m), body = efficiency"
                .to_string(),
        ]
    }

    pub fn motor(&self, speed_max: f64, torque_max: f64) -> Result<MotorSpec> {
        let lin = |max: f64, count: usize| -> Vec<f64> {
            (0..count)
                .map(|k| max * k as f64 / (count - 1) as f64)
                .collect()
        };
        let efficiency_map = Map2d::from_fn(
            lin(speed_max, self.speed_points),
            lin(torque_max, self.torque_points),
            |n, t| self.efficiency(n, t, speed_max, torque_max),
        )?;
        Ok(MotorSpec {
            efficiency_map,
            torque_max,
            speed_max,
        })
    }
}

pub const MG1_SPEED_MAX_RPM: f64 = 6000.0;
pub const MG2_SPEED_MAX_RPM: f64 = 10_000.0;

pub fn default_mg1(vehicle: &VehicleConfig) -> Result<MotorSpec> {
    EfficiencyBowl::default().motor(MG1_SPEED_MAX_RPM, vehicle.mot1_torque_max_nm)
}

pub fn default_mg2(vehicle: &VehicleConfig) -> Result<MotorSpec> {
    EfficiencyBowl::default().motor(MG2_SPEED_MAX_RPM, vehicle.mot2_torque_max_nm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powertrain::engine::engine_loss;

    #[test]
    fn willans_map_never_exceeds_unit_efficiency() {
        let vehicle = VehicleConfig::default();
        let spec = default_engine(&vehicle).unwrap();
        spec.validate(vehicle.engine_speed_range).unwrap();
        for n in (0..=5000).step_by(37) {
            for t in (0..=150).step_by(7) {
                let (n, t) = (n as f64, t as f64);
                let fuel = spec.fuel_map.lookup(n, t);
                assert!(fuel >= 0.0);
                assert!(engine_loss(fuel, n, t, spec.fuel_heat_value).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn line_runs_lugged_at_the_torque_limit() {
        let vehicle = VehicleConfig::default();
        let spec = default_engine(&vehicle).unwrap();
        for p in &spec.optimal_line {
            let n_boundary = (p.power_w * 9.55 / 150.0).max(800.0);
            assert!(p.speed_rpm >= n_boundary - 1e-9 && p.speed_rpm <= n_boundary + 1.0);
        }
    }

    #[test]
    fn bowl_bounds() {
        let bowl = EfficiencyBowl::default();
        let m = bowl.motor(10_000.0, 250.0).unwrap();
        m.validate().unwrap();
        assert!(m.efficiency_map.min_value() > 0.0);
        assert!(m.efficiency_map.max_value() <= 0.95);
    }

    #[test]
    fn axis_includes_max() {
        assert_eq!(axis(10.0, 4.0), vec![0.0, 4.0, 8.0, 10.0]);
        assert_eq!(axis(8.0, 4.0), vec![0.0, 4.0, 8.0]);
    }
}
