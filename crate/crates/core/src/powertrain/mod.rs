//! Quasi-static energy-flow model of the multi-mode hybrid powertrain.
//!
//! Units throughout: powers in W, torques in N·m, shaft speeds in rpm,
//! fuel rate in g/s, SoC as a fraction. The conventional `n·T/9550` shaft
//! power formula yields kW and is converted to W by [`mech_power_w`].
//!
//! Sign conventions: MG1 torque is the load it places on the engine shaft
//! (positive = generating), MG2 torque is positive when driving the wheels,
//! battery power is positive when discharging.

pub mod battery;
pub mod engine;
pub mod map;
pub mod motor;
pub mod synthetic;
pub mod vehicle;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use battery::{battery_step, BatterySpec, BatteryStep};
pub use engine::{
    engine_fuel_rate, engine_loss, optimal_engine_speed, series_engine_speed, EngineSpec, LinePoint,
};
pub use map::{lookup2d, Map2d};
pub use motor::{mg1_power, mg2_power, MotorSpec};
pub use vehicle::{demand, Demand, VehicleConfig};

use crate::Result;

/// Shaft power in W from speed (rpm) and torque (N·m).
pub fn mech_power_w(speed_rpm: f64, torque_nm: f64) -> f64 {
    speed_rpm * torque_nm / 9550.0 * 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Series,
    Parallel,
    RegenBrake,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Series => "series",
            Mode::Parallel => "parallel",
            Mode::RegenBrake => "regen",
        }
    }
}

/// Per-timestep physical state after a step has been applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowertrainState {
    pub time_s: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub grade_rad: f64,
    pub soc: f64,
    pub mode: Mode,
    pub n_eng: f64,
    pub n_mot1: f64,
    pub n_mot2: f64,
    pub t_eng: f64,
    pub t_mot1: f64,
    pub t_mot2: f64,
    /// Engine shaft power (W).
    pub p_eng: f64,
    /// MG1 electrical output (W).
    pub p_mot1: f64,
    /// MG2 electrical input (W).
    pub p_mot2: f64,
    pub p_batt: f64,
    pub i_batt: f64,
    pub fuel_rate_gps: f64,
    pub cumulative_fuel_g: f64,
    pub loss_eng_w: f64,
    pub loss_batt_w: f64,
    pub p_loss_w: f64,
    /// Engine torque passed through the clutch to the gearbox (engine shaft).
    pub t_gb: f64,
    pub wheel_torque_demand_nm: f64,
    /// Torque actually produced by the powertrain and brakes at the wheels.
    pub wheel_torque_delivered_nm: f64,
    pub friction_brake_nm: f64,
    /// Some command was saturated at a component limit this step.
    pub infeasible: bool,
}

impl PowertrainState {
    pub fn initial(soc: f64) -> Self {
        Self {
            time_s: 0.0,
            speed_mps: 0.0,
            accel_mps2: 0.0,
            grade_rad: 0.0,
            soc,
            mode: Mode::Series,
            n_eng: 0.0,
            n_mot1: 0.0,
            n_mot2: 0.0,
            t_eng: 0.0,
            t_mot1: 0.0,
            t_mot2: 0.0,
            p_eng: 0.0,
            p_mot1: 0.0,
            p_mot2: 0.0,
            p_batt: 0.0,
            i_batt: 0.0,
            fuel_rate_gps: 0.0,
            cumulative_fuel_g: 0.0,
            loss_eng_w: 0.0,
            loss_batt_w: 0.0,
            p_loss_w: 0.0,
            t_gb: 0.0,
            wheel_torque_demand_nm: 0.0,
            wheel_torque_delivered_nm: 0.0,
            friction_brake_nm: 0.0,
            infeasible: false,
        }
    }
}

/// Total power loss, engine plus battery.
pub fn power_loss(state: &PowertrainState) -> f64 {
    state.loss_eng_w + state.loss_batt_w
}

/// Kinematic inputs for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveInput {
    pub time_s: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub grade_rad: f64,
    pub dt_s: f64,
}

/// Everything needed to simulate the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Powertrain {
    pub vehicle: VehicleConfig,
    pub engine: EngineSpec,
    pub mg1: MotorSpec,
    pub mg2: MotorSpec,
    pub battery: BatterySpec,
}

/// Where to take component maps from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSources {
    /// Fuel-rate CSV; the synthetic Willans map when absent.
    pub engine_fuel_map: Option<std::path::PathBuf>,
    pub mg1_efficiency_map: Option<std::path::PathBuf>,
    pub mg2_efficiency_map: Option<std::path::PathBuf>,
}

struct Shafts {
    n_eng: f64,
    t_eng: f64,
    n_mot1: f64,
    t_mot1: f64,
    n_mot2: f64,
    t_mot2: f64,
    t_gb: f64,
}

impl Powertrain {
    pub fn synthetic(vehicle: VehicleConfig, battery: BatterySpec) -> Result<Self> {
        let pt = Self {
            engine: synthetic::default_engine(&vehicle)?,
            mg1: synthetic::default_mg1(&vehicle)?,
            mg2: synthetic::default_mg2(&vehicle)?,
            vehicle,
            battery,
        };
        pt.validate()?;
        Ok(pt)
    }

    /// Build from configuration, loading any CSV maps that are named and
    /// synthesising the rest. `base_dir` resolves relative map paths.
    pub fn from_sources(
        vehicle: VehicleConfig,
        battery: BatterySpec,
        maps: &MapSources,
        base_dir: &Path,
    ) -> Result<Self> {
        vehicle.validate()?;
        let resolve = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let engine = match &maps.engine_fuel_map {
            Some(p) => {
                let fuel_map = Map2d::read_csv(&resolve(p))?;
                let optimal_line = synthetic::derive_optimal_line(
                    &fuel_map,
                    vehicle.engine_speed_range,
                    vehicle.eng_torque_max_nm,
                    24,
                );
                EngineSpec {
                    fuel_map,
                    optimal_line,
                    fuel_heat_value: engine::GASOLINE_HEAT_VALUE_J_PER_KG,
                }
            }
            None => synthetic::default_engine(&vehicle)?,
        };
        let motor = |path: &Option<std::path::PathBuf>,
                     torque_max: f64,
                     default: MotorSpec|
         -> Result<MotorSpec> {
            match path {
                Some(p) => {
                    let efficiency_map = Map2d::read_csv(&resolve(p))?;
                    let speeds = efficiency_map.speeds();
                    Ok(MotorSpec {
                        speed_max: speeds[speeds.len() - 1],
                        efficiency_map,
                        torque_max,
                    })
                }
                None => Ok(default),
            }
        };
        let mg1 = motor(
            &maps.mg1_efficiency_map,
            vehicle.mot1_torque_max_nm,
            synthetic::default_mg1(&vehicle)?,
        )?;
        let mg2 = motor(
            &maps.mg2_efficiency_map,
            vehicle.mot2_torque_max_nm,
            synthetic::default_mg2(&vehicle)?,
        )?;
        let pt = Self {
            vehicle,
            engine,
            mg1,
            mg2,
            battery,
        };
        pt.validate()?;
        Ok(pt)
    }

    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        self.engine.validate(self.vehicle.engine_speed_range)?;
        self.mg1.validate()?;
        self.mg2.validate()?;
        self.battery.validate()
    }

    pub fn demand(&self, drive: &DriveInput) -> Demand {
        demand(
            drive.speed_mps,
            drive.accel_mps2,
            drive.grade_rad,
            &self.vehicle,
        )
    }

    /// Clutch open: MG2 alone drives the wheels, the engine turns MG1 on the
    /// operating line with MG1 torque `u_mot1·T_mot1_max`.
    pub fn step_series(
        &self,
        prev: &PowertrainState,
        drive: &DriveInput,
        t_dem: f64,
        u_mot1: f64,
    ) -> Result<PowertrainState> {
        let v = &self.vehicle;
        let wheel_rpm = v.wheel_rpm(drive.speed_mps);
        let mut infeasible = false;
        let mut t_mot2 = t_dem / v.ratio_i2;
        if t_mot2.abs() > v.mot2_torque_max_nm {
            t_mot2 = t_mot2.signum() * v.mot2_torque_max_nm;
            infeasible = true;
        }
        let gen = self.series_generation(u_mot1);
        let shafts = Shafts {
            t_gb: 0.0,
            n_mot2: wheel_rpm * v.ratio_i2,
            t_mot2,
            ..gen
        };
        let delivered = v.ratio_i2 * t_mot2;
        self.finish(
            prev,
            drive,
            Mode::Series,
            shafts,
            t_dem,
            delivered,
            0.0,
            infeasible,
        )
    }

    /// Braking demand: MG2 regenerates up to its torque limit, friction
    /// brakes absorb the remainder, the engine/MG1 set follows `u_mot1` as in
    /// series generation.
    pub fn step_regen(
        &self,
        prev: &PowertrainState,
        drive: &DriveInput,
        t_dem: f64,
        u_mot1: f64,
    ) -> Result<PowertrainState> {
        let v = &self.vehicle;
        let wheel_rpm = v.wheel_rpm(drive.speed_mps);
        let t_mot2 = (t_dem / v.ratio_i2).max(-v.mot2_torque_max_nm).min(0.0);
        let friction = t_dem - v.ratio_i2 * t_mot2;
        let gen = self.series_generation(u_mot1);
        let shafts = Shafts {
            t_gb: 0.0,
            n_mot2: wheel_rpm * v.ratio_i2,
            t_mot2,
            ..gen
        };
        self.finish(
            prev,
            drive,
            Mode::RegenBrake,
            shafts,
            t_dem,
            t_dem,
            friction,
            false,
        )
    }

    /// Clutch closed: engine speed is tied to the wheels through `i_1`, MG2
    /// supplies `u_mot2·T_mot2_max` and the engine covers the residual
    /// through the gearbox while also loading MG1 with `u_mot1·T_mot1_max`.
    ///
    /// If the tied engine speed leaves the operating range the step falls
    /// back to series operation and is flagged infeasible.
    pub fn step_parallel(
        &self,
        prev: &PowertrainState,
        drive: &DriveInput,
        t_dem: f64,
        u_mot1: f64,
        u_mot2: f64,
    ) -> Result<PowertrainState> {
        let v = &self.vehicle;
        let (i1, i2) = (v.ratio_i1, v.ratio_i2);
        let wheel_rpm = v.wheel_rpm(drive.speed_mps);
        let n_eng = wheel_rpm * i1;
        let (n_lo, n_hi) = v.engine_speed_range;
        if !(n_lo..=n_hi).contains(&n_eng) {
            let mut s = self.step_series(prev, drive, t_dem, u_mot1)?;
            s.infeasible = true;
            return Ok(s);
        }

        let mut infeasible = false;
        let mut t_gb = (t_dem - u_mot2.clamp(-1.0, 1.0) * v.mot2_torque_max_nm * i2).max(0.0) / i1;
        if t_gb > v.eng_torque_max_nm {
            t_gb = v.eng_torque_max_nm;
            infeasible = true;
        }
        let mut t_mot1 = u_mot1.clamp(0.0, 1.0) * v.mot1_torque_max_nm;
        if t_mot1 + t_gb > v.eng_torque_max_nm {
            t_mot1 = v.eng_torque_max_nm - t_gb;
            infeasible = true;
        }
        let t_eng = t_mot1 + t_gb;
        let mut t_mot2 = (t_dem - i1 * t_gb) / i2;
        let mut shortfall = 0.0;
        if t_mot2.abs() > v.mot2_torque_max_nm {
            let sat = t_mot2.signum() * v.mot2_torque_max_nm;
            shortfall = i2 * (t_mot2 - sat);
            t_mot2 = sat;
            infeasible = true;
        }
        let shafts = Shafts {
            n_eng,
            t_eng,
            n_mot1: n_eng,
            t_mot1,
            n_mot2: wheel_rpm * i2,
            t_mot2,
            t_gb,
        };
        self.finish(
            prev,
            drive,
            Mode::Parallel,
            shafts,
            t_dem,
            t_dem - shortfall,
            0.0,
            infeasible,
        )
    }

    /// Engine and MG1 locked together off the wheels (series generation).
    fn series_generation(&self, u_mot1: f64) -> Shafts {
        let t_mot1 = u_mot1.clamp(0.0, 1.0) * self.vehicle.mot1_torque_max_nm;
        let n = series_engine_speed(t_mot1, &self.engine);
        Shafts {
            n_eng: n,
            t_eng: t_mot1,
            n_mot1: n,
            t_mot1,
            n_mot2: 0.0,
            t_mot2: 0.0,
            t_gb: 0.0,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        prev: &PowertrainState,
        drive: &DriveInput,
        mode: Mode,
        s: Shafts,
        t_dem: f64,
        delivered: f64,
        friction: f64,
        mut infeasible: bool,
    ) -> Result<PowertrainState> {
        let fuel_rate_gps = engine_fuel_rate(s.n_eng, s.t_eng, &self.engine);
        let loss_eng_w = engine_loss(fuel_rate_gps, s.n_eng, s.t_eng, self.engine.fuel_heat_value)?;
        let p_eng = mech_power_w(s.n_eng, s.t_eng);
        let p_mot1 = mg1_power(s.n_mot1, s.t_mot1, &self.mg1);
        let p_mot2 = mg2_power(s.n_mot2, s.t_mot2, &self.mg2)?;

        let mut p_batt = p_mot2 - p_mot1;
        let limit = self.battery.max_discharge_power();
        if p_batt > limit {
            p_batt = limit;
            infeasible = true;
        }
        let b = battery_step(p_batt, prev.soc, drive.dt_s, &self.battery)?;
        let mut soc = b.soc_next;
        if !(0.0..=1.0).contains(&soc) {
            soc = soc.clamp(0.0, 1.0);
            infeasible = true;
        }

        Ok(PowertrainState {
            time_s: drive.time_s,
            speed_mps: drive.speed_mps,
            accel_mps2: drive.accel_mps2,
            grade_rad: drive.grade_rad,
            soc,
            mode,
            n_eng: s.n_eng,
            n_mot1: s.n_mot1,
            n_mot2: s.n_mot2,
            t_eng: s.t_eng,
            t_mot1: s.t_mot1,
            t_mot2: s.t_mot2,
            p_eng,
            p_mot1,
            p_mot2,
            p_batt,
            i_batt: b.current_a,
            fuel_rate_gps,
            cumulative_fuel_g: prev.cumulative_fuel_g + fuel_rate_gps * drive.dt_s,
            loss_eng_w,
            loss_batt_w: b.loss_w,
            p_loss_w: loss_eng_w + b.loss_w,
            t_gb: s.t_gb,
            wheel_torque_demand_nm: t_dem,
            wheel_torque_delivered_nm: delivered,
            friction_brake_nm: friction,
            infeasible,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt() -> Powertrain {
        Powertrain::synthetic(VehicleConfig::default(), BatterySpec::default()).unwrap()
    }

    fn drive(v: f64) -> DriveInput {
        DriveInput {
            time_s: 1.0,
            speed_mps: v,
            accel_mps2: 0.0,
            grade_rad: 0.0,
            dt_s: 1.0,
        }
    }

    #[test]
    fn idle_series_step_changes_nothing() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        let s = pt.step_series(&prev, &drive(0.0), 0.0, 0.0).unwrap();
        assert_eq!((s.t_eng, s.t_mot1, s.t_mot2), (0.0, 0.0, 0.0));
        assert_eq!(s.fuel_rate_gps, 0.0);
        assert_eq!(s.soc, 0.4);
        assert_eq!(s.p_loss_w, 0.0);
    }

    #[test]
    fn series_splits_demand_through_mg2_ratio() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        let s = pt.step_series(&prev, &drive(10.0), 300.0, 0.5).unwrap();
        assert_eq!(s.t_mot2, 75.0);
        assert_eq!(s.n_eng, s.n_mot1);
        assert_eq!(s.p_eng, mech_power_w(s.n_mot1, s.t_mot1));
        assert!(s.n_eng >= 800.0);
        assert!((s.p_batt - (s.p_mot2 - s.p_mot1)).abs() < 1e-9);
        assert!(!s.infeasible);
    }

    #[test]
    fn parallel_degenerate_balance() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        // u_mot2 = 0 ⇒ the engine covers everything: T_eng = T_dem / i_1
        let s = pt
            .step_parallel(&prev, &drive(20.0), 300.0, 0.0, 0.0)
            .unwrap();
        assert_eq!(s.mode, Mode::Parallel);
        assert_eq!(s.t_mot1, 0.0);
        assert_eq!(s.t_mot2, 0.0);
        assert!((s.t_eng - 100.0).abs() < 1e-12);
        assert_eq!(s.n_eng, s.n_mot1);
    }

    #[test]
    fn parallel_hand_balance() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        // T_dem = 600, u_mot2·250 = 75 ⇒ i_2·T_mot2 = 300, i_1·(T_eng − T_mot1) = 300
        let s = pt
            .step_parallel(&prev, &drive(20.0), 600.0, 0.2, 0.3)
            .unwrap();
        assert!((s.t_mot2 - 75.0).abs() < 1e-12);
        assert!((s.t_eng - s.t_mot1 - 100.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_below_idle_speed_falls_back_to_series() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        let s = pt
            .step_parallel(&prev, &drive(2.0), 600.0, 0.0, 0.3)
            .unwrap();
        assert_eq!(s.mode, Mode::Series);
        assert!(s.infeasible);
    }

    #[test]
    fn regen_caps_motor_and_brakes_the_rest() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        let s = pt.step_regen(&prev, &drive(15.0), -1600.0, 0.0).unwrap();
        assert_eq!(s.t_mot2, -250.0);
        assert!((s.friction_brake_nm + 600.0).abs() < 1e-9);
        assert!(s.p_mot2 < 0.0);
        assert!(s.soc > 0.4);
    }

    #[test]
    fn engine_off_battery_only_loss() {
        let pt = pt();
        let prev = PowertrainState::initial(0.4);
        let s = pt.step_series(&prev, &drive(15.0), 400.0, 0.0).unwrap();
        assert_eq!(s.loss_eng_w, 0.0);
        assert_eq!(power_loss(&s), s.loss_batt_w);
        assert!((s.loss_batt_w - 0.15 * s.i_batt * s.i_batt).abs() < 1e-12);
    }

    #[test]
    fn power_loss_sums_components() {
        let mut s = PowertrainState::initial(0.4);
        assert_eq!(power_loss(&s), 0.0);
        s.loss_eng_w = 22_557.6;
        s.loss_batt_w = 125.5;
        assert!((power_loss(&s) - 22_683.1).abs() < 1e-9);
    }

    #[test]
    fn charge_bookkeeping_over_a_trajectory() {
        let pt = pt();
        let mut s = PowertrainState::initial(0.5);
        let mut throughput = 0.0;
        for k in 0..200 {
            let v = 5.0 + (k as f64 * 0.1).sin().abs() * 20.0;
            let t_dem = 500.0 * (k as f64 * 0.37).sin();
            let d = drive(v);
            s = if t_dem < 0.0 {
                pt.step_regen(&s, &d, t_dem, 0.3).unwrap()
            } else {
                pt.step_series(&s, &d, t_dem, 0.2).unwrap()
            };
            throughput += s.i_batt * d.dt_s;
        }
        let expected = 0.5 - throughput / (54.3 * 3600.0);
        assert!((s.soc - expected).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]

        #[test]
        fn step_invariants(
            v in 0.0f64..40.0,
            t_dem in -2000.0f64..2000.0,
            u1 in 0.0f64..=1.0,
            u2 in -1.0f64..=1.0,
            soc in 0.25f64..0.75,
        ) {
            let pt = pt();
            let prev = PowertrainState::initial(soc);
            let d = drive(v);
            let s = if t_dem < 0.0 {
                pt.step_regen(&prev, &d, t_dem, u1).unwrap()
            } else {
                pt.step_parallel(&prev, &d, t_dem, u1, u2).unwrap()
            };
            prop_assert!(s.loss_batt_w >= 0.0 && s.loss_eng_w >= 0.0);
            prop_assert!(s.fuel_rate_gps >= 0.0);
            prop_assert_eq!(s.p_loss_w, s.loss_eng_w + s.loss_batt_w);
            prop_assert!((0.0..=1.0).contains(&s.soc));
            if s.t_mot2 <= 0.0 { prop_assert!(s.p_mot2 <= 0.0); }
            match s.mode {
                Mode::Series | Mode::RegenBrake => {
                    prop_assert_eq!(s.n_eng, s.n_mot1);
                    prop_assert_eq!(s.p_eng, mech_power_w(s.n_mot1, s.t_mot1));
                }
                Mode::Parallel => {
                    prop_assert_eq!(s.n_eng, s.n_mot1);
                    let (i1, i2) = (pt.vehicle.ratio_i1, pt.vehicle.ratio_i2);
                    let produced = i1 * (s.t_eng - s.t_mot1) + i2 * s.t_mot2;
                    let target = s.wheel_torque_delivered_nm;
                    prop_assert!((produced - target).abs() <= 1e-9 * target.abs().max(1.0));
                    if !s.infeasible {
                        prop_assert!((produced - t_dem).abs() <= 1e-9 * t_dem.abs().max(1.0));
                    }
                }
            }
        }
    }
}
