//! Stability reports and their JSON / CSV serializations.
//!
//! All per-exponent vectors (`lp`, `jp`, `running_max`, `perturbation`,
//! `bounds`) are aligned with `config.norms.p_list`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vsl_core::bounds::{evaluate_bounds, BoundSet, PerturbationSize, ProfileParams};
use vsl_core::euler::ConservationRecord;
use vsl_core::ScalarField;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result, Stage};

/// Version of the report layout; bumped on any incompatible change.
pub const SCHEMA_VERSION: u32 = 1;

/// `ω(t) − ζ` measured in every norm of the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub l1: f64,
    pub l2: f64,
    /// `J(|ω − ζ|)`.
    pub j: f64,
    /// `‖ω − ζ‖_p` per exponent.
    pub lp: Vec<f64>,
    /// `‖ω − ζ‖_{J_p}` per exponent.
    pub jp: Vec<f64>,
}

impl Deviation {
    pub fn measure(
        omega: &ScalarField,
        zeta: &ScalarField,
        p_list: &[f64],
    ) -> vsl_core::Result<Self> {
        let diff = omega.sub(zeta)?.abs();
        let j = diff.angular_impulse();
        let lp = p_list
            .iter()
            .map(|&p| diff.lp_norm(p))
            .collect::<vsl_core::Result<Vec<_>>>()?;
        let jp = lp.iter().map(|v| v + j).collect();
        Ok(Self {
            l1: diff.lp_norm(1.0)?,
            l2: diff.lp_norm(2.0)?,
            j,
            lp,
            jp,
        })
    }

    /// Componentwise maximum.
    pub fn max_with(&mut self, other: &Deviation) {
        self.l1 = self.l1.max(other.l1);
        self.l2 = self.l2.max(other.l2);
        self.j = self.j.max(other.j);
        for (a, b) in self.lp.iter_mut().zip(&other.lp) {
            *a = a.max(*b);
        }
        for (a, b) in self.jp.iter_mut().zip(&other.jp) {
            *a = a.max(*b);
        }
    }
}

/// One snapshot of the time series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub t: f64,
    pub step: usize,
    pub deviation: Deviation,
    pub conservation: ConservationRecord,
}

/// Comparison of a measured supremum with its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub p: f64,
    /// One of `l1`, `j`, `lp`, `jp_total`.
    pub quantity: String,
    pub measured_sup: f64,
    pub bound: f64,
    /// Discretization allowance added in `holds_with_slack`.
    pub slack: f64,
    /// `measured_sup <= bound`.
    pub holds: bool,
    /// `measured_sup <= bound + slack`.
    pub holds_with_slack: bool,
}

/// Where and how the report was produced. Contains nothing that varies
/// between identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub h: f64,
    pub seed: u64,
}

impl Provenance {
    pub fn of(config: &ExperimentConfig) -> Self {
        let n = config.grid.n;
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            n,
            half_width: config.grid.half_width,
            h: 2.0 * config.grid.half_width / n as f64,
            seed: config.run.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub profile_params: ProfileParams,
    /// Measured size of `ω₀ − ζ` per exponent.
    pub perturbation: Vec<PerturbationSize>,
    pub clipped_mass: f64,
    /// Final simulated time. Suprema are taken over `[0, horizon]` only.
    pub horizon: f64,
    pub steps: usize,
    pub snapshots: Vec<SnapshotRecord>,
    /// Maximum of every deviation over all steps, not only snapshots.
    pub running_max: Deviation,
    /// Evaluated bounds per exponent; empty when bounds are disabled.
    pub bounds: Vec<BoundSet>,
    pub verdicts: Vec<VerdictRecord>,
    /// Slack used for `holds_with_slack`.
    pub slack: f64,
    pub provenance: Provenance,
}

/// Bounds for every measured perturbation size.
pub fn evaluate_all(params: &ProfileParams, sizes: &[PerturbationSize]) -> Result<Vec<BoundSet>> {
    sizes
        .iter()
        .map(|sz| evaluate_bounds(params, sz).map_err(|e| HarnessError::stage(Stage::Bounds, e)))
        .collect()
}

fn verdict(p: f64, quantity: &str, measured_sup: f64, bound: f64, slack: f64) -> VerdictRecord {
    VerdictRecord {
        p,
        quantity: quantity.to_string(),
        measured_sup,
        bound,
        slack,
        holds: measured_sup <= bound,
        holds_with_slack: measured_sup <= bound + slack,
    }
}

/// Verdicts for the measured suprema against the bounds.
pub fn derive_verdicts(sup: &Deviation, bounds: &[BoundSet], slack: f64) -> Vec<VerdictRecord> {
    bounds
        .iter()
        .enumerate()
        .flat_map(|(k, b)| {
            [
                verdict(b.p, "l1", sup.l1, b.l1, slack),
                verdict(b.p, "j", sup.j, b.j, slack),
                verdict(b.p, "lp", sup.lp[k], b.lp, slack),
                verdict(b.p, "jp_total", sup.jp[k], b.jp_total, slack),
            ]
        })
        .collect()
}

impl StabilityReport {
    /// Supremum over the stored snapshots and the running maximum.
    pub fn measured_sup(&self) -> Deviation {
        let mut sup = self.running_max.clone();
        for s in &self.snapshots {
            sup.max_with(&s.deviation);
        }
        sup
    }

    /// Recomputes bounds and verdicts from the stored parameters and series.
    pub fn recompute_verdicts(&self) -> Result<Vec<VerdictRecord>> {
        if !self.config.bounds.enabled {
            return Ok(Vec::new());
        }
        let bounds = evaluate_all(&self.profile_params, &self.perturbation)?;
        Ok(derive_verdicts(&self.measured_sup(), &bounds, self.slack))
    }

    /// True when every strict verdict holds.
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    /// `sup_t ‖ω(t) − ζ‖_{J_p}` for exponent `p`, if it was measured.
    pub fn sup_jp(&self, p: f64) -> Option<f64> {
        let k = self.config.norms.p_list.iter().position(|&q| q == p)?;
        Some(self.measured_sup().jp[k])
    }

    pub fn bound_for(&self, p: f64) -> Option<&BoundSet> {
        self.bounds.iter().find(|b| b.p == p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(HarnessError::Config(format!(
                "report schema version {} is not supported (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Time series with one row per snapshot:
    /// `t,step,L1_dev,L2_dev,J_dev,Lp_dev_p<p>...,Jp_dev_p<p>...,L1_drift,L2_drift,J_drift,dist_drift,patch_q_drift,boundary_mass`.
    pub fn write_timeseries_csv<W: Write>(&self, w: W) -> Result<()> {
        let p_list = &self.config.norms.p_list;
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["t", "step", "L1_dev", "L2_dev", "J_dev"]
            .map(String::from)
            .to_vec();
        header.extend(p_list.iter().map(|p| format!("Lp_dev_p{p}")));
        header.extend(p_list.iter().map(|p| format!("Jp_dev_p{p}")));
        header.extend(
            [
                "L1_drift",
                "L2_drift",
                "J_drift",
                "dist_drift",
                "patch_q_drift",
                "boundary_mass",
            ]
            .map(String::from),
        );
        out.write_record(&header)?;
        for s in &self.snapshots {
            let d = &s.deviation;
            let c = &s.conservation;
            let mut row = vec![
                s.t.to_string(),
                s.step.to_string(),
                d.l1.to_string(),
                d.l2.to_string(),
                d.j.to_string(),
            ];
            row.extend(d.lp.iter().map(f64::to_string));
            row.extend(d.jp.iter().map(f64::to_string));
            row.extend([
                c.l1_drift.to_string(),
                c.l2_drift.to_string(),
                c.impulse_drift.to_string(),
                c.dist_drift.to_string(),
                c.patch_q_drift.map(|q| q.to_string()).unwrap_or_default(),
                c.boundary_mass.to_string(),
            ]);
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Outcome of one configuration in a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<StabilityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<Stage>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub runs: Vec<SweepEntry>,
}

impl SweepReport {
    pub fn new(results: Vec<Result<StabilityReport>>) -> Self {
        let runs = results
            .into_iter()
            .enumerate()
            .map(|(index, r)| match r {
                Ok(report) => SweepEntry {
                    index,
                    report: Some(report),
                    error: None,
                    stage: None,
                },
                Err(e) => SweepEntry {
                    index,
                    report: None,
                    stage: e.stage_label(),
                    error: Some(e.to_string()),
                },
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            runs,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.runs
            .iter()
            .all(|r| r.report.as_ref().is_some_and(StabilityReport::all_hold))
    }
}
