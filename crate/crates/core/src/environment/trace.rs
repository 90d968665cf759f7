//! Per-step CSV trace.

use std::io::Write;

use super::StepOutcome;
use crate::powertrain::PowertrainState;
use crate::{Error, Result};

pub const TRACE_SCHEMA: &str = "# schema: mmhev-trace/1";

const COLUMNS: &[&str] = &[
    "time_s",
    "speed_mps",
    "accel_mps2",
    "mode",
    "t_dem_nm",
    "t_eng_nm",
    "n_eng_rpm",
    "t_mot1_nm",
    "n_mot1_rpm",
    "t_mot2_nm",
    "n_mot2_rpm",
    "p_batt_w",
    "i_batt_a",
    "soc",
    "fuel_rate_gps",
    "p_loss_w",
    "reward_single",
    "r_global",
    "r_local1",
    "r_local2",
    "r_m1",
    "r_m2",
    "infeasible",
];

pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W) -> Result<Self> {
        let io = |e| Error::io("<trace>", e);
        writeln!(out, "{TRACE_SCHEMA}").map_err(io)?;
        writeln!(out, "{}", COLUMNS.join(",")).map_err(io)?;
        Ok(Self { out })
    }

    pub fn record(&mut self, s: &PowertrainState, o: &StepOutcome) -> Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.time_s,
            s.speed_mps,
            s.accel_mps2,
            s.mode.as_str(),
            s.wheel_torque_demand_nm,
            s.t_eng,
            s.n_eng,
            s.t_mot1,
            s.n_mot1,
            s.t_mot2,
            s.n_mot2,
            s.p_batt,
            s.i_batt,
            s.soc,
            s.fuel_rate_gps,
            s.p_loss_w,
            o.reward_single,
            o.r_global,
            o.r_local1,
            o.r_local2,
            o.r_m1,
            o.r_m2,
            u8::from(s.infeasible)
        )
        .map_err(|e| Error::io("<trace>", e))
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(self.out)
    }
}
