//! Experiment orchestration for the vortex stability laboratory.
//!
//! An experiment samples a radial monotone profile `ζ`, perturbs it, evaluates
//! the explicit stability bounds for the measured perturbation size, evolves
//! the perturbed vorticity and records `‖ω(t) − ζ‖_{J_p}` over time. The
//! result is a [`StabilityReport`] with a verdict for every bound.

pub mod config;
pub mod error;
pub mod experiment;
pub mod report;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{HarnessError, Result, Stage};
pub use experiment::{run_experiment, run_with_snapshots, sweep, write_outputs};
pub use report::{StabilityReport, SweepReport, SCHEMA_VERSION};
