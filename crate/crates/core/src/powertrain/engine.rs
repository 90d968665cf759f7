use serde::{Deserialize, Serialize};

use super::map::Map2d;
use super::mech_power_w;
use crate::{Error, Result};

pub const GASOLINE_HEAT_VALUE_J_PER_KG: f64 = 43.5e6;

/// One point of the minimum-fuel operating line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub power_w: f64,
    pub speed_rpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    /// Fuel rate in g/s over (rpm, N·m).
    pub fuel_map: Map2d,
    /// Strictly increasing in power.
    pub optimal_line: Vec<LinePoint>,
    pub fuel_heat_value: f64,
}

impl EngineSpec {
    pub fn validate(&self, speed_range: (f64, f64)) -> Result<()> {
        if self.fuel_map.min_value() < 0.0 {
            return Err(Error::Config(
                "fuel map contains negative fuel rates".into(),
            ));
        }
        if !(self.fuel_heat_value > 0.0) {
            return Err(Error::Config("fuel_heat_value must be > 0".into()));
        }
        if self.optimal_line.is_empty() {
            return Err(Error::Config("optimal_line is empty".into()));
        }
        if self
            .optimal_line
            .windows(2)
            .any(|w| w[1].power_w <= w[0].power_w)
        {
            return Err(Error::Config(
                "optimal_line powers must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = speed_range;
        if let Some(p) = self
            .optimal_line
            .iter()
            .find(|p| !(p.power_w > 0.0) || p.speed_rpm < lo || p.speed_rpm > hi)
        {
            return Err(Error::Config(format!(
                "optimal_line point ({} W, {} rpm) outside the engine operating range",
                p.power_w, p.speed_rpm
            )));
        }
        Ok(())
    }

    /// Highest power on the operating line.
    pub fn line_max_power(&self) -> f64 {
        self.optimal_line.last().map_or(0.0, |p| p.power_w)
    }
}

/// Fuel rate (g/s) from the 2-D map; exactly zero with the engine stopped.
pub fn engine_fuel_rate(speed_rpm: f64, torque_nm: f64, spec: &EngineSpec) -> f64 {
    if speed_rpm <= 0.0 && torque_nm <= 0.0 {
        return 0.0;
    }
    spec.fuel_map.lookup(speed_rpm, torque_nm).max(0.0)
}

/// Engine loss in W: fuel chemical power minus shaft power.
///
/// A clearly negative result means the fuel map implies an efficiency above
/// one and is reported as a model-validation error.
pub fn engine_loss(
    fuel_rate_gps: f64,
    speed_rpm: f64,
    torque_nm: f64,
    heat_value: f64,
) -> Result<f64> {
    let fuel_power = fuel_rate_gps / 1000.0 * heat_value;
    let loss = fuel_power - mech_power_w(speed_rpm, torque_nm);
    let tol = 1e-9 * fuel_power.abs().max(1.0);
    if loss < -tol {
        return Err(Error::ModelValidation(format!(
            "engine loss {loss} W < 0 at {speed_rpm} rpm, {torque_nm} N·m (fuel map efficiency > 1)"
        )));
    }
    Ok(loss.max(0.0))
}

/// Engine speed on the minimum-fuel line for a requested power.
/// Zero power means the engine is off; requests beyond the line are clamped.
pub fn optimal_engine_speed(power_w: f64, spec: &EngineSpec) -> f64 {
    if power_w <= 0.0 {
        return 0.0;
    }
    let line = &spec.optimal_line;
    let first = line[0];
    let last = line[line.len() - 1];
    if power_w <= first.power_w {
        return first.speed_rpm;
    }
    if power_w >= last.power_w {
        return last.speed_rpm;
    }
    let k = line.partition_point(|p| p.power_w <= power_w);
    let (a, b) = (line[k - 1], line[k]);
    let w = (power_w - a.power_w) / (b.power_w - a.power_w);
    a.speed_rpm + w * (b.speed_rpm - a.speed_rpm)
}

/// Speed at which the engine runs in series mode while loaded by `torque_nm`.
///
/// Finds the operating-line power `P` whose line speed `n(P)` satisfies
/// `P = n(P)·T/9550·1000`, so that torque, speed and power are mutually
/// consistent. Returns 0 for a non-positive torque.
pub fn series_engine_speed(torque_nm: f64, spec: &EngineSpec) -> f64 {
    if torque_nm <= 0.0 {
        return 0.0;
    }
    let residual = |p: f64| mech_power_w(optimal_engine_speed(p, spec), torque_nm) - p;
    let p_max = spec.line_max_power();
    if residual(p_max) >= 0.0 {
        return optimal_engine_speed(p_max, spec);
    }
    // residual(0+) = T·n_first > 0, residual(p_max) < 0
    let (mut lo, mut hi) = (0.0, p_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    optimal_engine_speed(0.5 * (lo + hi), spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powertrain::synthetic::{default_engine, WillansEngine};
    use crate::powertrain::VehicleConfig;

    #[test]
    fn stopped_engine_burns_nothing() {
        let spec = default_engine(&VehicleConfig::default()).unwrap();
        assert_eq!(engine_fuel_rate(0.0, 0.0, &spec), 0.0);
    }

    #[test]
    fn grid_nodes_return_stored_values() {
        let spec = default_engine(&VehicleConfig::default()).unwrap();
        let m = &spec.fuel_map;
        for i in (1..m.speeds().len()).step_by(3) {
            for j in 0..m.torques().len() {
                assert_eq!(
                    engine_fuel_rate(m.speeds()[i], m.torques()[j], &spec),
                    m.node(i, j)
                );
            }
        }
    }

    #[test]
    fn default_map_matches_willans_formula() {
        let spec = default_engine(&VehicleConfig::default()).unwrap();
        let w = WillansEngine::default();
        // hand evaluation: mech = 2000·100/9550 kW = 20 942.408 W,
        // friction = 1.0·2000 + 2.8e-4·2000² = 3120 W
        let expected = (2000.0 * 100.0 / 9550.0 * 1000.0 / 0.40 + 3120.0) / 43.5e6 * 1000.0;
        assert!((w.fuel_rate_gps(2000.0, 100.0) - expected).abs() < 1e-12);
        assert_eq!(
            engine_fuel_rate(2000.0, 100.0, &spec),
            w.fuel_rate_gps(2000.0, 100.0)
        );
    }

    #[test]
    fn engine_loss_examples() {
        assert_eq!(engine_loss(0.0, 0.0, 0.0, 43.5e6).unwrap(), 0.0);
        let l = engine_loss(1.0, 2000.0, 100.0, 43.5e6).unwrap();
        assert!((l - (43_500.0 - 2000.0 * 100.0 / 9550.0 * 1000.0)).abs() < 1e-9);
        assert!((l - 22_557.59).abs() < 0.01);
        assert!((engine_loss(1.0, 0.0, 0.0, 43.5e6).unwrap() - 43_500.0).abs() < 1e-9);
        // efficiency above one
        assert!(engine_loss(0.1, 3000.0, 150.0, 43.5e6).is_err());
    }

    fn toy_line() -> EngineSpec {
        EngineSpec {
            fuel_map: Map2d::new(vec![0.0, 5000.0], vec![0.0, 150.0], vec![0.0; 4]).unwrap(),
            optimal_line: vec![
                LinePoint {
                    power_w: 5_000.0,
                    speed_rpm: 1000.0,
                },
                LinePoint {
                    power_w: 20_000.0,
                    speed_rpm: 2000.0,
                },
                LinePoint {
                    power_w: 60_000.0,
                    speed_rpm: 4000.0,
                },
            ],
            fuel_heat_value: 43.5e6,
        }
    }

    #[test]
    fn operating_line_interpolation() {
        let spec = toy_line();
        assert_eq!(optimal_engine_speed(0.0, &spec), 0.0);
        assert_eq!(optimal_engine_speed(20_000.0, &spec), 2000.0);
        assert_eq!(optimal_engine_speed(60_000.0, &spec), 4000.0);
        // (40 000 − 20 000)/(60 000 − 20 000) = 0.5 → 3000 rpm
        assert!((optimal_engine_speed(40_000.0, &spec) - 3000.0).abs() < 1e-9);
        assert!((optimal_engine_speed(10_000.0, &spec) - (1000.0 + 1000.0 / 3.0)).abs() < 1e-9);
        assert_eq!(optimal_engine_speed(1e6, &spec), 4000.0);
        assert_eq!(optimal_engine_speed(100.0, &spec), 1000.0);
    }

    #[test]
    fn series_speed_is_self_consistent() {
        let spec = toy_line();
        for t in [10.0, 40.0, 90.0, 140.0] {
            let n = series_engine_speed(t, &spec);
            let p = mech_power_w(n, t);
            assert!(
                (optimal_engine_speed(p, &spec) - n).abs() < 1e-6,
                "T={t}: n={n}"
            );
        }
        assert_eq!(series_engine_speed(0.0, &spec), 0.0);
    }
}
