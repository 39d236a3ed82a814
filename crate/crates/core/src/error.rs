use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("moment order must be a positive even integer, got {0}")]
    InvalidMoment(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("field is not radially non-increasing: ‖f - f*‖₁ = {deviation:.3e} > {tolerance:.3e}")]
    NotRadial { deviation: f64, tolerance: f64 },

    #[error("annulus radii out of order: inner {inner} > outer {outer}")]
    InvalidAnnulus { inner: f64, outer: f64 },

    #[error("support overflow: f(0.9 L) = {edge_value:.3e} exceeds 1e-8 of the peak {peak:.3e}")]
    SupportOverflow { edge_value: f64, peak: f64 },

    #[error("mass outside the safe disk B(0.8 L): fraction {fraction:.3e} > {limit:.1e}")]
    OutsideSafeZone { fraction: f64, limit: f64 },

    #[error("no ladder radius up to {max_radius} meets epsilon {epsilon:.3e} (tail impulse {tail_impulse:.3e}, sixth-moment tail {sixth_tail:.3e})")]
    TailRadius {
        epsilon: f64,
        max_radius: f64,
        tail_impulse: f64,
        sixth_tail: f64,
    },

    #[error("exponent p = {0} too large for the L^p bound (limit 16)")]
    ExponentTooLarge(f64),

    #[error("solver blow-up at t = {t:.6} (step {step}): {reason}")]
    Blowup { t: f64, step: usize, reason: String },

    #[error("bad field file: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
