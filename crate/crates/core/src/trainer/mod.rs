//! Experiment orchestration: training loops, the independence-ratio sweep,
//! evaluation at fixed initial SoC and report tables.

mod config;
mod metrics;
mod policy;
mod run;
mod sweep;

pub use config::{CycleConfig, ExperimentConfig, PhaseSource, TrainMode};
pub use metrics::{
    compare, compare_table, evaluate, metrics_csv, parse_metrics, render_table, rows_csv,
    Comparison, MetricsRow, METRICS_COLUMNS,
};
pub use policy::{rollout, Policy, PolicyCheckpoint, POLICY_FORMAT, POLICY_FORMAT_VERSION};
pub use run::{train, EpisodeRecord, RunLog, TrainOutcome, RUN_LOG_COLUMNS};
pub use sweep::{
    curve_csv, moving_average, sweep_rind, write_run, write_sweep, write_timing, CellEntry,
    Manifest, SweepCell, MANIFEST_FORMAT, MANIFEST_VERSION, SMOOTHING_WINDOW,
};

#[cfg(test)]
mod tests;
