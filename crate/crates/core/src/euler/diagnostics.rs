use std::io::Write;

use serde::{Deserialize, Serialize};

use super::FlowState;
use crate::error::Result;
use crate::field::ScalarField;

/// Number of thresholds on which the distribution function is tracked.
pub const DIST_LADDER_POINTS: usize = 16;

/// Conserved quantities of the initial vorticity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub l1: f64,
    pub l2: f64,
    pub impulse: f64,
    pub sup: f64,
    /// Thresholds `α_k = ‖ω₀‖_∞ (k + ½) / 16`.
    pub ladder: Vec<f64>,
    /// `|{ω₀ > α_k}|`.
    pub measures: Vec<f64>,
    /// `∫_{Ω△D} ||x|² - 1|` when the initial data is a patch.
    pub patch_q: Option<f64>,
}

fn superlevel_measure(f: &ScalarField, alpha: f64) -> f64 {
    f.values().iter().filter(|&&v| v > alpha).count() as f64 * f.spec().cell_area()
}

impl Baselines {
    pub fn of(omega: &ScalarField, track_patch: bool) -> Self {
        let sup = omega.sup_norm();
        let ladder: Vec<f64> = (0..DIST_LADDER_POINTS)
            .map(|k| sup * (k as f64 + 0.5) / DIST_LADDER_POINTS as f64)
            .collect();
        let measures = ladder
            .iter()
            .map(|&a| superlevel_measure(omega, a))
            .collect();
        Self {
            l1: omega.lp_norm(1.0).expect("p = 1"),
            l2: omega.lp_norm(2.0).expect("p = 2"),
            impulse: omega.angular_impulse(),
            sup,
            ladder,
            measures,
            patch_q: track_patch.then(|| omega.patch_conserved_quantity()),
        }
    }
}

/// Drift of the conserved quantities relative to their initial values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservationRecord {
    pub t: f64,
    pub l1: f64,
    pub l2: f64,
    pub impulse: f64,
    pub l1_drift: f64,
    pub l2_drift: f64,
    pub impulse_drift: f64,
    /// `max_k |μ_t(α_k) - μ₀(α_k)| / μ₀(α₀)`.
    pub dist_drift: f64,
    pub patch_q: Option<f64>,
    pub patch_q_drift: Option<f64>,
    pub boundary_mass: f64,
    /// `max(0, -min ω) / ‖ω₀‖_∞`.
    pub negativity: f64,
}

fn relative(now: f64, base: f64) -> f64 {
    if base == 0.0 {
        now.abs()
    } else {
        (now - base).abs() / base.abs()
    }
}

pub fn conservation_report(state: &FlowState) -> ConservationRecord {
    let omega = &state.omega;
    let b = &state.baselines;
    let l1 = omega.lp_norm(1.0).expect("p = 1");
    let l2 = omega.lp_norm(2.0).expect("p = 2");
    let impulse = omega.angular_impulse();
    let scale = b.measures.first().copied().unwrap_or(0.0);
    let dist_drift = b
        .ladder
        .iter()
        .zip(&b.measures)
        .map(|(&a, &m0)| (superlevel_measure(omega, a) - m0).abs())
        .fold(0.0, f64::max)
        / if scale > 0.0 { scale } else { 1.0 };
    let patch_q = b.patch_q.map(|_| omega.patch_conserved_quantity());
    let patch_q_drift = b.patch_q.zip(patch_q).map(|(q0, q)| relative(q, q0));
    let negativity = if b.sup > 0.0 {
        (-omega.min()).max(0.0) / b.sup
    } else {
        0.0
    };
    ConservationRecord {
        t: state.t,
        l1,
        l2,
        impulse,
        l1_drift: relative(l1, b.l1),
        l2_drift: relative(l2, b.l2),
        impulse_drift: relative(impulse, b.impulse),
        dist_drift,
        patch_q,
        patch_q_drift,
        boundary_mass: omega.boundary_mass_fraction(),
        negativity,
    }
}

/// CSV log with columns `t,L1,L2,J,dist_drift,patch_q,boundary_mass`.
pub fn write_conservation_csv<W: Write>(records: &[ConservationRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "t",
        "L1",
        "L2",
        "J",
        "dist_drift",
        "patch_q",
        "boundary_mass",
    ])?;
    for r in records {
        out.write_record([
            r.t.to_string(),
            r.l1.to_string(),
            r.l2.to_string(),
            r.impulse.to_string(),
            r.dist_drift.to_string(),
            r.patch_q.map(|q| q.to_string()).unwrap_or_default(),
            r.boundary_mass.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
