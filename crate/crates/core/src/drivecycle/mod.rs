//! Speed traces, phase extraction and randomized composite learning cycles.

pub mod synthetic;

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// Maximum length of the start/end taper applied to extracted phases.
pub const PHASE_TAPER_S: f64 = 5.0;
/// Standstill gap inserted between concatenated phases.
pub const SEPARATOR_S: f64 = 2.0;

const CYCLE_RNG_STREAM: u64 = 0xC1C1E;

/// Uniformly sampled speed trace. Sample `k` sits at `k·dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub name: String,
    pub dt: f64,
    pub speeds: Vec<f64>,
    pub grades: Vec<f64>,
}

impl DriveCycle {
    pub fn new(
        name: impl Into<String>,
        dt: f64,
        speeds: Vec<f64>,
        grades: Option<Vec<f64>>,
    ) -> Result<Self> {
        let grades = grades.unwrap_or_else(|| vec![0.0; speeds.len()]);
        let c = Self {
            name: name.into(),
            dt,
            speeds,
            grades,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Argument(format!(
                "cycle dt must be > 0, got {}",
                self.dt
            )));
        }
        if self.speeds.len() != self.grades.len() {
            return Err(Error::Argument("speeds and grades differ in length".into()));
        }
        if let Some(v) = self.speeds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Argument(format!(
                "cycle speed {v} is negative or non-finite"
            )));
        }
        if self.grades.iter().any(|g| !g.is_finite()) {
            return Err(Error::Argument("cycle grade is non-finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.speeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.speeds.is_empty()
    }

    /// Driving time covered by the samples, `len·dt`.
    pub fn duration_s(&self) -> f64 {
        self.len() as f64 * self.dt
    }

    /// Distance driven when each sample's speed is held for `dt`.
    pub fn distance_m(&self) -> f64 {
        self.speeds.iter().sum::<f64>() * self.dt
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,speed_mps,grade_rad\n");
        for (k, (v, g)) in self.speeds.iter().zip(&self.grades).enumerate() {
            let _ = writeln!(out, "{},{v},{g}", k as f64 * self.dt);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhaseLabel {
    LowSpeedRural,
    MaxAccelRTS95,
    MediumSpeedUDDS,
    HighSpeedWLTP,
}

impl PhaseLabel {
    pub const ALL: [PhaseLabel; 4] = [
        PhaseLabel::LowSpeedRural,
        PhaseLabel::MaxAccelRTS95,
        PhaseLabel::MediumSpeedUDDS,
        PhaseLabel::HighSpeedWLTP,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclePhase {
    pub label: PhaseLabel,
    pub trace: DriveCycle,
}

/// The four phases plus the seed that drives per-episode permutations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeCycleSpec {
    pub phases: Vec<CyclePhase>,
    pub seed: u64,
}

impl CompositeCycleSpec {
    pub fn new(phases: Vec<CyclePhase>, seed: u64) -> Result<Self> {
        let s = Self { phases, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases.len() != 4 {
            return Err(Error::Config(format!(
                "composite cycle needs exactly 4 phases, got {}",
                self.phases.len()
            )));
        }
        for label in PhaseLabel::ALL {
            let n = self.phases.iter().filter(|p| p.label == label).count();
            if n != 1 {
                return Err(Error::Config(format!("phase {label:?} appears {n} times")));
            }
        }
        let dt = self.phases[0].trace.dt;
        if self
            .phases
            .iter()
            .any(|p| p.trace.dt != dt || p.trace.len() < 2)
        {
            return Err(Error::Config(
                "phases must share one dt and have at least 2 samples".into(),
            ));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.phases[0].trace.dt
    }

    fn concat(&self, order: &[usize], name: String) -> DriveCycle {
        let dt = self.dt();
        let gap = (SEPARATOR_S / dt).round() as usize;
        let mut speeds = Vec::new();
        let mut grades = Vec::new();
        for (k, &i) in order.iter().enumerate() {
            if k > 0 {
                speeds.extend(std::iter::repeat_n(0.0, gap));
                grades.extend(std::iter::repeat_n(0.0, gap));
            }
            speeds.extend_from_slice(&self.phases[i].trace.speeds);
            grades.extend_from_slice(&self.phases[i].trace.grades);
        }
        DriveCycle {
            name,
            dt,
            speeds,
            grades,
        }
    }

    /// Phases in label order; the fixed evaluation cycle.
    pub fn canonical_cycle(&self) -> DriveCycle {
        let order: Vec<usize> = PhaseLabel::ALL
            .iter()
            .map(|l| self.phases.iter().position(|p| p.label == *l).unwrap_or(0))
            .collect();
        self.concat(&order, "composite-canonical".to_string())
    }
}

/// Index order of the phases used for `episode_index`.
pub fn phase_order(spec: &CompositeCycleSpec, episode_index: u64) -> [usize; 4] {
    let mut order = [0, 1, 2, 3];
    let mut rng = rng::stream(spec.seed, &[CYCLE_RNG_STREAM, episode_index]);
    order.shuffle(&mut rng);
    order
}

/// Random permutation of the four phases, deterministic in
/// `(spec.seed, episode_index)`, joined by standstill separators.
pub fn build_learning_cycle(spec: &CompositeCycleSpec, episode_index: u64) -> DriveCycle {
    let order = phase_order(spec, episode_index);
    spec.concat(&order, format!("learning-s{}-e{episode_index}", spec.seed))
}

/// Per-sample `(speed, acceleration)` with forward-difference acceleration;
/// the last sample has zero acceleration.
pub fn kinematics(cycle: &DriveCycle) -> Vec<(f64, f64)> {
    let v = &cycle.speeds;
    (0..v.len())
        .map(|k| {
            let a = if k + 1 < v.len() {
                (v[k + 1] - v[k]) / cycle.dt
            } else {
                0.0
            };
            (v[k], a)
        })
        .collect()
}

/// Slice `[start_s, end_s)` out of a cycle and taper both ends to standstill.
pub fn extract_phase(
    cycle: &DriveCycle,
    start_s: f64,
    end_s: f64,
    label: PhaseLabel,
) -> Result<CyclePhase> {
    let duration = cycle.duration_s();
    if !(start_s >= 0.0 && start_s < end_s && end_s <= duration + 1e-9 * duration.max(1.0)) {
        return Err(Error::Argument(format!(
            "phase window [{start_s}, {end_s}) outside cycle of {duration} s"
        )));
    }
    let eps = 1e-9;
    let first = ((start_s / cycle.dt) - eps).ceil().max(0.0) as usize;
    let last = (((end_s / cycle.dt) - eps).ceil() as usize).min(cycle.len());
    if last <= first + 1 {
        return Err(Error::Argument(format!(
            "phase window [{start_s}, {end_s}) holds fewer than 2 samples"
        )));
    }
    let mut speeds = cycle.speeds[first..last].to_vec();
    let grades = cycle.grades[first..last].to_vec();
    let n = speeds.len();
    let ramp = ((PHASE_TAPER_S / cycle.dt).floor() as usize)
        .min((n - 1) / 2)
        .max(1);
    for i in 0..ramp.min(n) {
        let w = i as f64 / ramp as f64;
        speeds[i] *= w;
        speeds[n - 1 - i] *= w;
    }
    Ok(CyclePhase {
        label,
        trace: DriveCycle::new(
            format!("{}:{label:?}", cycle.name),
            cycle.dt,
            speeds,
            Some(grades),
        )?,
    })
}

/// Read a two- or three-column CSV (`time, speed[, grade]`) and resample it
/// to a uniform `dt` by linear interpolation.
///
/// The speed column header selects the unit: anything containing `km`
/// (e.g. `speed_kmh`, `speed (km/h)`) is km/h, otherwise m/s.
pub fn load_cycle(path: &Path, dt: f64) -> Result<DriveCycle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map_or_else(|| "cycle".to_string(), |s| s.to_string_lossy().into_owned());
    parse_cycle(&text, dt, &name, &path.display().to_string())
}

pub fn parse_cycle(text: &str, dt: f64, name: &str, origin: &str) -> Result<DriveCycle> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!("dt must be > 0, got {dt}")));
    }
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, "empty cycle file"))?;
    let cols: Vec<String> = header
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    if cols.len() < 2 || cols[0].parse::<f64>().is_ok() {
        return Err(Error::parse(
            origin,
            "missing header row `time,speed[,grade]`",
        ));
    }
    let speed_scale = if cols[1].contains("km") {
        1.0 / 3.6
    } else {
        1.0
    };

    let mut times = Vec::new();
    let mut raw_speeds = Vec::new();
    let mut raw_grades = Vec::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            let cell = cells.get(i).ok_or_else(|| {
                Error::parse(origin, format!("line {line_no}: missing column {}", i + 1))
            })?;
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(origin, format!("line {line_no}: bad number {cell:?}")))
        };
        let t = num(0)?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(Error::parse(
                    origin,
                    format!("line {line_no}: time {t} is not increasing"),
                ));
            }
        }
        times.push(t);
        raw_speeds.push(num(1)? * speed_scale);
        raw_grades.push(if cols.len() > 2 { num(2)? } else { 0.0 });
    }
    if times.is_empty() {
        return Err(Error::parse(origin, "cycle file has no samples"));
    }

    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let count = (span / dt + 1e-9).floor() as usize + 1;
    let mut speeds = Vec::with_capacity(count);
    let mut grades = Vec::with_capacity(count);
    let mut j = 0;
    for k in 0..count {
        let t = t0 + k as f64 * dt;
        while j + 1 < times.len() && times[j + 1] <= t + 1e-9 * dt {
            j += 1;
        }
        let (v, g) = if (t - times[j]).abs() <= 1e-9 * dt || j + 1 == times.len() {
            (raw_speeds[j], raw_grades[j])
        } else {
            let w = (t - times[j]) / (times[j + 1] - times[j]);
            (
                raw_speeds[j] + w * (raw_speeds[j + 1] - raw_speeds[j]),
                raw_grades[j] + w * (raw_grades[j + 1] - raw_grades[j]),
            )
        };
        speeds.push(v.max(0.0));
        grades.push(g);
    }
    DriveCycle::new(name, dt, speeds, Some(grades))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn spec(seed: u64) -> CompositeCycleSpec {
        CompositeCycleSpec::new(synthetic::synthetic_phases(1.0).unwrap(), seed).unwrap()
    }

    #[test]
    fn constant_file() {
        let c = parse_cycle("time_s,speed_mps\n0,10\n5,10\n10,10\n", 1.0, "c", "mem").unwrap();
        assert_eq!(c.len(), 11);
        assert!(c.speeds.iter().all(|&v| v == 10.0));
    }

    #[test]
    fn kmh_header_converts() {
        let c = parse_cycle("time,speed_kmh\n0,36\n1,36\n", 1.0, "c", "mem").unwrap();
        assert!((c.speeds[0] - 10.0).abs() < 1e-12);
        let c = parse_cycle("time,speed (km/h)\n0,36\n1,72\n", 1.0, "c", "mem").unwrap();
        assert!((c.speeds[1] - 20.0).abs() < 1e-12);
    }

    #[test]
    fn irregular_timestamps_interpolate() {
        let c = parse_cycle("t,v\n0,0\n0.5,2\n3,7\n4,3\n", 1.0, "c", "mem").unwrap();
        // t=1: between (0.5,2) and (3,7): 2 + 0.5/2.5·5 = 3
        // t=2: 2 + 1.5/2.5·5 = 5; t=3: 7; t=4: 3
        let expected = [0.0, 3.0, 5.0, 7.0, 3.0];
        assert_eq!(c.len(), expected.len());
        for (got, want) in c.speeds.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_files() {
        assert!(parse_cycle("", 1.0, "c", "mem").is_err());
        assert!(parse_cycle("t,v\n", 1.0, "c", "mem").is_err());
        assert!(parse_cycle("t,v\n0,1\n2,1\n1,1\n", 1.0, "c", "mem").is_err());
        assert!(parse_cycle("t,v\n0,1\n1,x\n", 1.0, "c", "mem").is_err());
        assert!(parse_cycle("0,1\n1,1\n", 1.0, "c", "mem").is_err());
    }

    #[test]
    fn negative_speeds_clamped() {
        let c = parse_cycle("t,v\n0,-1\n1,2\n", 1.0, "c", "mem").unwrap();
        assert_eq!(c.speeds, vec![0.0, 2.0]);
    }

    proptest! {
        #[test]
        fn uniform_input_is_identity(vs in proptest::collection::vec(0.0f64..40.0, 2..60), dt in prop_oneof![Just(0.1), Just(0.5), Just(1.0)]) {
            let mut text = String::from("time_s,speed_mps\n");
            for (k, v) in vs.iter().enumerate() {
                text.push_str(&format!("{},{v}\n", k as f64 * dt));
            }
            let c = parse_cycle(&text, dt, "c", "mem").unwrap();
            prop_assert_eq!(c.speeds, vs);
        }

        #[test]
        fn telescoping_acceleration(vs in proptest::collection::vec(0.0f64..40.0, 2..80)) {
            let c = DriveCycle::new("r", 0.5, vs.clone(), None).unwrap();
            let kin = kinematics(&c);
            let sum: f64 = kin.iter().map(|(_, a)| a * c.dt).sum();
            prop_assert!((sum - (vs[vs.len() - 1] - vs[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn kinematics_examples() {
        let c = DriveCycle::new("k", 1.0, vec![0.0, 1.0, 2.0], None).unwrap();
        assert_eq!(kinematics(&c), vec![(0.0, 1.0), (1.0, 1.0), (2.0, 0.0)]);
        let c = DriveCycle::new("k", 1.0, vec![5.0; 4], None).unwrap();
        assert!(kinematics(&c).iter().all(|&(_, a)| a == 0.0));
    }

    #[test]
    fn extract_full_window_tapers_ends() {
        let c = DriveCycle::new("hold", 1.0, vec![20.0; 60], None).unwrap();
        let p = extract_phase(&c, 0.0, c.duration_s(), PhaseLabel::HighSpeedWLTP).unwrap();
        assert_eq!(p.trace.len(), 60);
        assert_eq!(p.trace.speeds[0], 0.0);
        assert_eq!(p.trace.speeds[59], 0.0);
        // 5 s ramp: 0, 4, 8, 12, 16, then 20
        assert_eq!(&p.trace.speeds[..6], &[0.0, 4.0, 8.0, 12.0, 16.0, 20.0]);
        assert_eq!(&p.trace.speeds[54..], &[20.0, 16.0, 12.0, 8.0, 4.0, 0.0]);
    }

    #[test]
    fn extract_rejects_degenerate_windows() {
        let c = DriveCycle::new("hold", 1.0, vec![20.0; 60], None).unwrap();
        assert!(extract_phase(&c, 10.0, 11.0, PhaseLabel::LowSpeedRural).is_err());
        assert!(extract_phase(&c, 10.0, 10.0, PhaseLabel::LowSpeedRural).is_err());
        assert!(extract_phase(&c, -1.0, 10.0, PhaseLabel::LowSpeedRural).is_err());
        assert!(extract_phase(&c, 0.0, 61.0, PhaseLabel::LowSpeedRural).is_err());
        let p = extract_phase(&c, 10.0, 12.0, PhaseLabel::LowSpeedRural).unwrap();
        assert_eq!(p.trace.speeds, vec![0.0, 0.0]);
    }

    #[test]
    fn learning_cycle_is_deterministic() {
        let s = spec(3);
        assert_eq!(build_learning_cycle(&s, 0), build_learning_cycle(&s, 0));
        assert_eq!(build_learning_cycle(&s, 17), build_learning_cycle(&s, 17));
    }

    #[test]
    fn learning_cycle_length_bookkeeping() {
        let s = spec(0);
        let c = build_learning_cycle(&s, 5);
        let phases: f64 = s.phases.iter().map(|p| p.trace.duration_s()).sum();
        assert!((c.duration_s() - (phases + 3.0 * SEPARATOR_S)).abs() < 1e-9);
    }

    #[test]
    fn permutations_are_uniform() {
        let s = spec(11);
        let draws = 10_000u64;
        let mut counts: HashMap<[usize; 4], u64> = HashMap::new();
        for e in 0..draws {
            *counts.entry(phase_order(&s, e)).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = draws as f64 / 24.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // χ²(23) upper 0.1% point
        assert!(chi2 < 49.73, "chi2 = {chi2}");
    }

    #[test]
    fn composite_is_continuous() {
        let s = spec(2);
        let max_phase_step = s
            .phases
            .iter()
            .flat_map(|p| p.trace.speeds.windows(2).map(|w| (w[1] - w[0]).abs()))
            .fold(0.0, f64::max);
        for e in 0..24 {
            let c = build_learning_cycle(&s, e);
            let worst = c
                .speeds
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .fold(0.0, f64::max);
            assert!(worst <= max_phase_step + 1e-12);
        }
    }

    #[test]
    fn spec_requires_four_distinct_labels() {
        let mut phases = synthetic::synthetic_phases(1.0).unwrap();
        phases[1].label = PhaseLabel::LowSpeedRural;
        assert!(CompositeCycleSpec::new(phases.clone(), 0).is_err());
        phases.pop();
        assert!(CompositeCycleSpec::new(phases, 0).is_err());
    }
}
