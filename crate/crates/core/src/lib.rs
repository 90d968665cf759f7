//! Simulation and training harness for energy management of a multi-mode
//! plug-in hybrid electric vehicle.
//!
//! The crate is organised bottom-up:
//!
//! - [`powertrain`]: quasi-static energy-flow model (vehicle demand, engine,
//!   MG1/MG2, equivalent-circuit battery, series/parallel/regen steps).
//! - [`drivecycle`]: speed traces, phase extraction and randomized composite
//!   learning cycles.
//! - [`environment`]: observation/action mapping, single-agent and
//!   hand-shaking multi-agent rewards, episode stepping and trip metrics.
//! - [`neural`]: dense networks with hand-written backpropagation and Adam.
//! - [`ddpg`]: actor-critic agents with replay and soft target updates.
//! - [`trainer`]: training loops, independence-ratio sweeps, evaluation and
//!   reporting.

pub mod ddpg;
pub mod drivecycle;
pub mod environment;
pub mod error;
pub mod neural;
pub mod powertrain;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
