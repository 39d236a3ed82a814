//! Pseudo-spectral 2D Euler solver in vorticity form.
//!
//! The truncated plane `[-L, L)²` is treated as a periodic box. Velocity is
//! recovered spectrally from the stream function, with the uniform
//! background that periodicity forces on the vorticity compensated by a
//! solid-body rotation about the vorticity centroid. Time stepping is RK4
//! with a CFL-limited step and optional 2/3-rule dealiasing.

mod diagnostics;
mod fft;
mod solver;

pub use diagnostics::{
    conservation_report, write_conservation_csv, Baselines, ConservationRecord, DIST_LADDER_POINTS,
};
pub use solver::{
    evolve, spectral_divergence, step, velocity_from_vorticity, EulerSolver, FarFieldCorrection,
    FlowState, Observer, SolverConfig, StepInfo, Velocity,
};
