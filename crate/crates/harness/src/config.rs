//! Experiment configuration documents.
//!
//! A configuration is a single JSON object:
//!
//! ```json
//! {
//!   "grid": { "n": 256, "L": 4.0 },
//!   "profile": { "kind": "mollified-patch", "radius": 1.0 },
//!   "perturbation": { "kind": "boundary-wobble", "mode": 3, "amplitude": 0.02 },
//!   "solver": { "cfl": 0.5, "dealias": true, "snapshot_stride": 50 },
//!   "run": { "t_end": 20.0, "seed": 1 },
//!   "norms": { "p_list": [1.0, 2.0] },
//!   "bounds": { "enabled": true, "epsilon": 0.01 }
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use vsl_core::euler::SolverConfig;
use vsl_core::profiles::PerturbationSpec;
use vsl_core::{GridSpec, RadialProfile};

use crate::error::{HarnessError, Stage};

/// Default ramp width of mollified patches, in cells.
pub const DEFAULT_RAMP_CELLS: f64 = 3.0;

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

/// Base profile. Mollified patches take their ramp width either directly
/// or as a number of cells (default 3).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    SharpPatch {
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    MollifiedPatch {
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        width: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ramp_cells: Option<f64>,
    },
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
}

impl ProfileConfig {
    pub fn resolve(&self, spec: &GridSpec) -> RadialProfile {
        match self {
            ProfileConfig::SharpPatch { radius, amplitude } => RadialProfile::SharpPatch {
                radius: *radius,
                amplitude: *amplitude,
            },
            ProfileConfig::MollifiedPatch {
                radius,
                amplitude,
                width,
                ramp_cells,
            } => RadialProfile::MollifiedPatch {
                radius: *radius,
                amplitude: *amplitude,
                width: width.unwrap_or(ramp_cells.unwrap_or(DEFAULT_RAMP_CELLS) * spec.h()),
            },
            ProfileConfig::Gaussian { amplitude, scale } => RadialProfile::Gaussian {
                amplitude: *amplitude,
                scale: *scale,
            },
            ProfileConfig::PiecewiseLinear { knots } => RadialProfile::PiecewiseLinear {
                knots: knots.clone(),
            },
        }
    }

    /// Patch profiles get the symmetric-difference diagnostic.
    pub fn is_patch(&self) -> bool {
        matches!(
            self,
            ProfileConfig::SharpPatch { .. } | ProfileConfig::MollifiedPatch { .. }
        )
    }
}

fn default_cfl() -> f64 {
    0.5
}

fn default_stride() -> usize {
    50
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<f64>,
    #[serde(default)]
    pub project_initial: bool,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            cfl: default_cfl(),
            dealias: true,
            filter: None,
            project_initial: false,
            snapshot_stride: default_stride(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub t_end: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_p_list() -> Vec<f64> {
    vec![2.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
}

impl Default for NormsConfig {
    fn default() -> Self {
        Self {
            p_list: default_p_list(),
        }
    }
}

fn default_epsilon() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    /// Tail tolerance used to pick `R` for profiles without compact support.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            epsilon: default_epsilon(),
        }
    }
}

fn identity() -> PerturbationSpec {
    PerturbationSpec::Identity
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub profile: ProfileConfig,
    #[serde(default = "identity")]
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub solver: SolverSection,
    pub run: RunConfig,
    #[serde(default)]
    pub norms: NormsConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, HarnessError> {
        GridSpec::new(self.grid.n, self.grid.half_width)
            .map_err(|e| HarnessError::stage(Stage::Config, e))
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.solver.cfl,
            dealias: self.solver.dealias,
            filter: self.solver.filter,
            project_initial: self.solver.project_initial,
            t_end: self.run.t_end,
            snapshot_stride: self.solver.snapshot_stride,
            reverse: false,
        }
    }

    /// Largest exponent requested; the tail radius is chosen for it.
    pub fn max_p(&self) -> f64 {
        self.norms.p_list.iter().copied().fold(1.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let spec = self.grid_spec()?;
        self.profile
            .resolve(&spec)
            .validate()
            .map_err(|e| HarnessError::stage(Stage::Config, e))?;
        self.solver_config()
            .validate()
            .map_err(|e| HarnessError::stage(Stage::Config, e))?;
        if self.norms.p_list.is_empty() {
            return Err(HarnessError::Config(
                "norms.p_list must not be empty".into(),
            ));
        }
        if let Some(p) = self
            .norms
            .p_list
            .iter()
            .find(|p| !(**p >= 1.0 && p.is_finite()))
        {
            return Err(HarnessError::Config(format!(
                "norms.p_list entry {p} is not a finite p >= 1"
            )));
        }
        if self.bounds.epsilon.is_nan() || self.bounds.epsilon <= 0.0 {
            return Err(HarnessError::Config(
                "bounds.epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Reads either a single configuration or an array of them.
pub fn load_configs(path: &Path) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))?;
    let configs: Vec<ExperimentConfig> = match value {
        serde_json::Value::Array(items) => items
            .into_iter()
            .map(serde_json::from_value)
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::Config(e.to_string()))?,
        other => {
            vec![serde_json::from_value(other).map_err(|e| HarnessError::Config(e.to_string()))?]
        }
    };
    for c in &configs {
        c.validate()?;
    }
    Ok(configs)
}
