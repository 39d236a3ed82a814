use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pipeline stage in which an experiment failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Profile,
    TailRadius,
    Perturbation,
    Bounds,
    Solver,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Profile => "profile",
            Stage::TailRadius => "tail-radius",
            Stage::Perturbation => "perturbation",
            Stage::Bounds => "bounds",
            Stage::Solver => "solver",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("[{stage}] {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: vsl_core::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl HarnessError {
    pub fn stage(stage: Stage, source: vsl_core::Error) -> Self {
        HarnessError::Stage { stage, source }
    }

    /// The failing stage, if the error came from the pipeline.
    pub fn stage_label(&self) -> Option<Stage> {
        match self {
            HarnessError::Config(_) => Some(Stage::Config),
            HarnessError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
