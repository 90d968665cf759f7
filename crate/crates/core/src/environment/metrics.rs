//! Trip-level metrics: relative SoC error, fuel saving and fuel volume.

use crate::{Error, Result};

/// Gasoline density used to turn grams into litres.
pub const FUEL_DENSITY_KG_PER_L: f64 = 0.745;

/// `|SoC_end − SoC_initial| / SoC_initial · 100`.
pub fn soc_error(soc_initial: f64, soc_end: f64) -> Result<f64> {
    if soc_initial == 0.0 {
        return Err(Error::Argument("initial SoC must be non-zero".into()));
    }
    Ok((soc_end - soc_initial).abs() / soc_initial * 100.0)
}

/// `|fuel_multi − fuel_single| / fuel_single · 100`.
pub fn fuel_saving(fuel_single: f64, fuel_multi: f64) -> Result<f64> {
    if fuel_single == 0.0 {
        return Err(Error::Argument(
            "single-agent fuel consumption must be non-zero".into(),
        ));
    }
    Ok((fuel_multi - fuel_single).abs() / fuel_single * 100.0)
}

pub fn fuel_l_per_100km(fuel_g: f64, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::Argument(format!(
            "cycle distance must be > 0, got {distance_m} m"
        )));
    }
    let litres = fuel_g / 1000.0 / FUEL_DENSITY_KG_PER_L;
    Ok(litres / (distance_m / 100_000.0))
}
