//! Bundled ramp/hold phases standing in for the four standard-cycle
//! segments. Each phase is 120 s long and starts and ends at standstill.

use super::{extract_phase, CyclePhase, DriveCycle, PhaseLabel};
use crate::Result;

pub const PHASE_LENGTH_S: f64 = 120.0;

/// `(time s, speed m/s)` knots joined by straight lines.
fn knots(label: PhaseLabel) -> &'static [(f64, f64)] {
    match label {
        // Rural road around 40–50 km/h.
        PhaseLabel::LowSpeedRural => &[
            (0.0, 0.0),
            (15.0, 11.0),
            (40.0, 13.0),
            (55.0, 9.0),
            (75.0, 14.0),
            (100.0, 12.0),
            (115.0, 0.0),
            (120.0, 0.0),
        ],
        // Hard launches and re-accelerations.
        PhaseLabel::MaxAccelRTS95 => &[
            (0.0, 0.0),
            (10.0, 22.0),
            (25.0, 28.0),
            (40.0, 16.0),
            (48.0, 31.0),
            (70.0, 32.0),
            (90.0, 18.0),
            (98.0, 26.0),
            (112.0, 0.0),
            (120.0, 0.0),
        ],
        // Urban stop-and-go.
        PhaseLabel::MediumSpeedUDDS => &[
            (0.0, 0.0),
            (12.0, 8.0),
            (25.0, 12.0),
            (35.0, 5.0),
            (42.0, 0.0),
            (50.0, 0.0),
            (62.0, 10.0),
            (80.0, 15.0),
            (95.0, 9.0),
            (110.0, 6.0),
            (117.0, 0.0),
            (120.0, 0.0),
        ],
        // Motorway up to 130 km/h.
        PhaseLabel::HighSpeedWLTP => &[
            (0.0, 0.0),
            (20.0, 20.0),
            (40.0, 30.0),
            (70.0, 36.0),
            (90.0, 35.0),
            (105.0, 25.0),
            (118.0, 0.0),
            (120.0, 0.0),
        ],
    }
}

fn sample(points: &[(f64, f64)], t: f64) -> f64 {
    let k = points
        .partition_point(|p| p.0 <= t)
        .clamp(1, points.len() - 1);
    let (a, b) = (points[k - 1], points[k]);
    let w = ((t - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
    a.1 + w * (b.1 - a.1)
}

pub fn synthetic_trace(label: PhaseLabel, dt: f64) -> Result<DriveCycle> {
    let pts = knots(label);
    let n = (PHASE_LENGTH_S / dt).round() as usize;
    let speeds = (0..n).map(|k| sample(pts, k as f64 * dt)).collect();
    DriveCycle::new(format!("synthetic-{label:?}"), dt, speeds, None)
}

/// The four bundled phases, passed through [`extract_phase`] so they carry
/// the same end taper as phases cut from real cycles.
pub fn synthetic_phases(dt: f64) -> Result<Vec<CyclePhase>> {
    PhaseLabel::ALL
        .iter()
        .map(|&label| {
            let trace = synthetic_trace(label, dt)?;
            extract_phase(&trace, 0.0, trace.duration_s(), label)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_are_120_s_and_start_stop_at_rest() {
        for p in synthetic_phases(1.0).unwrap() {
            assert_eq!(p.trace.len(), 120);
            assert_eq!(p.trace.speeds[0], 0.0);
            assert_eq!(p.trace.speeds[119], 0.0);
        }
    }

    #[test]
    fn knot_interpolation() {
        let pts = knots(PhaseLabel::LowSpeedRural);
        assert_eq!(sample(pts, 15.0), 11.0);
        assert!((sample(pts, 7.5) - 5.5).abs() < 1e-12);
    }
}
