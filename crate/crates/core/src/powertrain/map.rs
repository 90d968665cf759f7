//! Rectangular 2-D lookup tables over (shaft speed, torque).
//!
//! CSV layout: optional `#` comment lines, then a header row whose first
//! cell is a label and whose remaining cells are the torque breakpoints,
//! then one row per speed breakpoint (speed first, then values).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const CORNER_LABEL: &str = "speed_rpm\\torque_nm";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMap2d", into = "RawMap2d")]
pub struct Map2d {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    /// Row-major, `speeds.len()` rows by `torques.len()` columns.
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMap2d {
    speeds: Vec<f64>,
    torques: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RawMap2d> for Map2d {
    type Error = Error;

    fn try_from(raw: RawMap2d) -> Result<Self> {
        let values = raw.values.into_iter().flatten().collect();
        Map2d::new(raw.speeds, raw.torques, values)
    }
}

impl From<Map2d> for RawMap2d {
    fn from(map: Map2d) -> Self {
        let values = map
            .values
            .chunks(map.torques.len())
            .map(<[f64]>::to_vec)
            .collect();
        RawMap2d {
            speeds: map.speeds,
            torques: map.torques,
            values,
        }
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::Config(format!(
            "{name} axis needs at least 2 breakpoints, got {}",
            axis.len()
        )));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(format!("{name} axis has non-finite entries")));
    }
    if let Some(w) = axis.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{name} axis is not strictly increasing at index {}",
            w + 1
        )));
    }
    Ok(())
}

/// Cell index and interpolation weight for `x` on a strictly increasing axis.
/// Values outside the axis are clamped to the boundary.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 1;
    if x <= axis[0] || x.is_nan() {
        return (0, 0.0);
    }
    if x >= axis[last] {
        return (last - 1, 1.0);
    }
    let upper = axis.partition_point(|&a| a <= x);
    let i = upper - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

impl Map2d {
    pub fn new(speeds: Vec<f64>, torques: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_axis("speed", &speeds)?;
        check_axis("torque", &torques)?;
        if values.len() != speeds.len() * torques.len() {
            return Err(Error::Config(format!(
                "map body has {} values, expected {}x{}",
                values.len(),
                speeds.len(),
                torques.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("map body has non-finite values".into()));
        }
        Ok(Self {
            speeds,
            torques,
            values,
        })
    }

    /// Tabulate `f(speed, torque)` on the given breakpoints.
    pub fn from_fn(
        speeds: Vec<f64>,
        torques: Vec<f64>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = speeds
            .iter()
            .flat_map(|&n| torques.iter().map(move |&t| (n, t)))
            .map(|(n, t)| f(n, t))
            .collect();
        Self::new(speeds, torques, values)
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn torques(&self) -> &[f64] {
        &self.torques
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, speed_idx: usize, torque_idx: usize) -> f64 {
        self.values[speed_idx * self.torques.len() + torque_idx]
    }

    /// Apply `f` to every stored value, keeping the axes.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.speeds.clone(),
            self.torques.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Bilinear interpolation with boundary clamping.
    pub fn lookup(&self, speed: f64, torque: f64) -> f64 {
        let (i, t) = locate(&self.speeds, speed);
        let (j, u) = locate(&self.torques, torque);
        let v00 = self.node(i, j);
        let v10 = self.node(i + 1, j);
        let v01 = self.node(i, j + 1);
        let v11 = self.node(i + 1, j + 1);
        // Weighted form reproduces node values exactly at t, u ∈ {0, 1}.
        (1.0 - t) * (1.0 - u) * v00 + t * (1.0 - u) * v10 + (1.0 - t) * u * v01 + t * u * v11
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            for line in c.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        out.push_str(CORNER_LABEL);
        for t in &self.torques {
            let _ = write!(out, ",{t}");
        }
        out.push('\n');
        for (row, n) in self.values.chunks(self.torques.len()).zip(&self.speeds) {
            let _ = write!(out, "{n}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, origin: &str) -> Result<Self> {
        let mut rows = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse = |line_no: usize, cell: &str| -> Result<f64> {
            cell.trim().parse::<f64>().map_err(|e| {
                Error::parse(
                    origin,
                    format!("line {}: bad number {cell:?}: {e}", line_no + 1),
                )
            })
        };

        let (hdr_no, header) = rows
            .next()
            .ok_or_else(|| Error::parse(origin, "empty map file"))?;
        let torques = header
            .split(',')
            .skip(1)
            .map(|c| parse(hdr_no, c))
            .collect::<Result<Vec<_>>>()?;

        let mut speeds = Vec::new();
        let mut values = Vec::new();
        for (line_no, line) in rows {
            let mut cells = line.split(',');
            let speed = parse(line_no, cells.next().unwrap_or_default())?;
            let body = cells
                .map(|c| parse(line_no, c))
                .collect::<Result<Vec<_>>>()?;
            if body.len() != torques.len() {
                return Err(Error::parse(
                    origin,
                    format!(
                        "line {}: {} values, expected {}",
                        line_no + 1,
                        body.len(),
                        torques.len()
                    ),
                ));
            }
            speeds.push(speed);
            values.extend(body);
        }
        Self::new(speeds, torques, values)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text, &path.display().to_string())
    }

    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        std::fs::write(path, self.to_csv(comments)).map_err(|e| Error::io(path, e))
    }
}

/// Bilinear lookup with clamping; see [`Map2d::lookup`].
pub fn lookup2d(table: &Map2d, x: f64, y: f64) -> f64 {
    table.lookup(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_square() -> Map2d {
        Map2d::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0, 1.0]).unwrap()
    }

    fn sample() -> Map2d {
        Map2d::from_fn(
            vec![0.0, 500.0, 1500.0, 4000.0],
            vec![-10.0, 0.0, 25.0, 80.0, 120.0],
            |n, t| 0.3 + 1e-4 * n + 2e-3 * t + 1e-7 * n * t + 1e-6 * t * t,
        )
        .unwrap()
    }

    #[test]
    fn node_identity() {
        let m = sample();
        for (i, &n) in m.speeds().iter().enumerate() {
            for (j, &t) in m.torques().iter().enumerate() {
                assert_eq!(m.lookup(n, t), m.node(i, j));
            }
        }
    }

    #[test]
    fn cell_midpoint_is_corner_mean() {
        let m = unit_square();
        assert_eq!(m.lookup(0.5, 0.5), 0.5);
        let m = Map2d::new(vec![0.0, 2.0], vec![0.0, 4.0], vec![1.0, 3.0, 5.0, 11.0]).unwrap();
        assert!((m.lookup(1.0, 2.0) - 5.0).abs() < 1e-15);
    }

    /// Independent clamp-then-interpolate reference: find the cell by linear scan.
    fn oracle(m: &Map2d, x: f64, y: f64) -> f64 {
        let xs = m.speeds();
        let ys = m.torques();
        let x = x.clamp(xs[0], xs[xs.len() - 1]);
        let y = y.clamp(ys[0], ys[ys.len() - 1]);
        let mut i = 0;
        while i + 2 < xs.len() && x > xs[i + 1] {
            i += 1;
        }
        let mut j = 0;
        while j + 2 < ys.len() && y > ys[j + 1] {
            j += 1;
        }
        let fx = (x - xs[i]) / (xs[i + 1] - xs[i]);
        let fy = (y - ys[j]) / (ys[j + 1] - ys[j]);
        let lo = m.node(i, j) + fx * (m.node(i + 1, j) - m.node(i, j));
        let hi = m.node(i, j + 1) + fx * (m.node(i + 1, j + 1) - m.node(i, j + 1));
        lo + fy * (hi - lo)
    }

    #[test]
    fn outside_grid_clamps_to_boundary() {
        let m = sample();
        for &(x, y) in &[
            (-100.0, 50.0),
            (9000.0, 50.0),
            (1000.0, -500.0),
            (1000.0, 1e4),
            (-1.0, -1.0),
            (1e9, 1e9),
        ] {
            let got = m.lookup(x, y);
            assert!((got - oracle(&m, x, y)).abs() < 1e-12, "({x},{y})");
        }
        assert_eq!(m.lookup(-1.0, -20.0), m.node(0, 0));
        assert_eq!(m.lookup(1e5, 1e5), m.node(3, 4));
    }

    #[test]
    fn rejects_malformed_axes() {
        assert!(Map2d::new(vec![0.0], vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Map2d::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(Map2d::new(vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(Map2d::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let m = Map2d::from_fn(vec![0.0, 1.0 / 3.0, 7.5e3], vec![0.1, 0.2, 1e-9], |n, t| {
            (n + 1.0).ln() * t.sqrt() + 1.0 / 7.0
        });
        // torque axis above is non-monotone on purpose
        assert!(m.is_err());
        let m = Map2d::from_fn(vec![0.0, 1.0 / 3.0, 7.5e3], vec![1e-9, 0.1, 0.2], |n, t| {
            (n + 1.0).ln() * t.sqrt() + 1.0 / 7.0
        })
        .unwrap();
        let text = m.to_csv(&["generator: test".to_string()]);
        let back = Map2d::from_csv(&text, "mem").unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_csv(&["generator: test".to_string()]), text);
    }

    #[test]
    fn csv_errors() {
        assert!(Map2d::from_csv("", "mem").is_err());
        assert!(Map2d::from_csv("x,0,1\n0,1\n1,1,1\n", "mem").is_err());
        assert!(Map2d::from_csv("x,0,1\n0,1,abc\n1,1,1\n", "mem").is_err());
    }

    proptest! {
        #[test]
        fn matches_oracle_anywhere(x in -1000.0f64..6000.0, y in -50.0f64..200.0) {
            let m = sample();
            prop_assert!((m.lookup(x, y) - oracle(&m, x, y)).abs() < 1e-12);
        }
    }
}
