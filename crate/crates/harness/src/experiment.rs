//! Experiment pipeline: profile, perturbation, bounds, evolution, report.

use std::path::{Path, PathBuf};

use log::{debug, info};
use rayon::prelude::*;
use vsl_core::euler::{conservation_report, EulerSolver, FlowState, Observer, StepInfo};
use vsl_core::profiles::{make_profile, perturb};
use vsl_core::rearrange::slack;
use vsl_core::{Error, ScalarField};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result, Stage};
use crate::report::{
    derive_verdicts, evaluate_all, Deviation, Provenance, SnapshotRecord, StabilityReport,
    SCHEMA_VERSION,
};

/// Records deviations from `ζ` at every snapshot and keeps a running
/// maximum over every step.
pub struct DeviationTracker<'a> {
    zeta: &'a ScalarField,
    p_list: &'a [f64],
    snapshots: Vec<SnapshotRecord>,
    running_max: Option<Deviation>,
    last: Option<(usize, Deviation)>,
    snapshot_dir: Option<PathBuf>,
}

impl<'a> DeviationTracker<'a> {
    pub fn new(zeta: &'a ScalarField, p_list: &'a [f64]) -> Self {
        Self {
            zeta,
            p_list,
            snapshots: Vec::new(),
            running_max: None,
            last: None,
            snapshot_dir: None,
        }
    }

    /// Also writes every snapshot as `snapshot_<index>.vsf` into `dir`.
    pub fn with_snapshot_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.snapshot_dir = Some(dir.into());
        self
    }

    fn track(&mut self, state: &FlowState) -> vsl_core::Result<Deviation> {
        if let Some((step, d)) = &self.last {
            if *step == state.steps {
                return Ok(d.clone());
            }
        }
        let d = Deviation::measure(&state.omega, self.zeta, self.p_list)?;
        match &mut self.running_max {
            Some(m) => m.max_with(&d),
            None => self.running_max = Some(d.clone()),
        }
        self.last = Some((state.steps, d.clone()));
        Ok(d)
    }

    pub fn snapshots(&self) -> &[SnapshotRecord] {
        &self.snapshots
    }

    pub fn into_parts(self) -> (Vec<SnapshotRecord>, Option<Deviation>) {
        (self.snapshots, self.running_max)
    }
}

impl Observer for DeviationTracker<'_> {
    fn on_step(&mut self, state: &FlowState, _info: &StepInfo) -> vsl_core::Result<()> {
        self.track(state).map(|_| ())
    }

    fn on_snapshot(&mut self, state: &FlowState) -> vsl_core::Result<()> {
        let deviation = self.track(state)?;
        if let Some(dir) = &self.snapshot_dir {
            state
                .omega
                .save_vsf(dir.join(format!("snapshot_{:05}.vsf", self.snapshots.len())))?;
        }
        let conservation = conservation_report(state);
        debug!(
            "t = {:.4} step {}: J_p deviation {:?}, L1 drift {:.2e}",
            state.t, state.steps, deviation.jp, conservation.l1_drift
        );
        self.snapshots.push(SnapshotRecord {
            t: state.t,
            step: state.steps,
            deviation,
            conservation,
        });
        Ok(())
    }
}

fn profile_stage(e: Error) -> HarnessError {
    match e {
        Error::TailRadius { .. } => HarnessError::stage(Stage::TailRadius, e),
        other => HarnessError::stage(Stage::Profile, other),
    }
}

/// Runs one experiment end to end.
pub fn run_experiment(config: &ExperimentConfig) -> Result<StabilityReport> {
    run_with_snapshots(config, None)
}

/// As [`run_experiment`], additionally writing VSF snapshots into `dir`.
pub fn run_with_snapshots(
    config: &ExperimentConfig,
    dir: Option<&Path>,
) -> Result<StabilityReport> {
    config.validate()?;
    let spec = config.grid_spec()?;
    let profile = config.profile.resolve(&spec);
    let p_list = &config.norms.p_list;

    let (zeta, params) = make_profile(&profile, &spec, config.bounds.epsilon, config.max_p())
        .map_err(profile_stage)?;
    info!(
        "profile: M = {:.6}, alpha = {:.6}, R = {:.6}, T(R) = {:.3e}",
        params.m, params.alpha, params.radius, params.tail_impulse
    );
    let perturbed = perturb(
        &profile,
        &zeta,
        &config.perturbation,
        p_list,
        config.run.seed,
    )
    .map_err(|e| HarnessError::stage(Stage::Perturbation, e))?;
    let bounds = if config.bounds.enabled {
        evaluate_all(&params, &perturbed.sizes)?
    } else {
        Vec::new()
    };

    let solver = EulerSolver::new(spec, config.solver_config())
        .map_err(|e| HarnessError::stage(Stage::Solver, e))?;
    let state = FlowState::new(perturbed.omega0, config.profile.is_patch());
    let mut tracker = DeviationTracker::new(&zeta, p_list);
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        tracker = tracker.with_snapshot_dir(dir);
    }
    let final_state = solver
        .evolve(state, &mut [&mut tracker])
        .map_err(|e| match e {
            Error::Io(io) => HarnessError::Io(io),
            other => HarnessError::stage(Stage::Solver, other),
        })?;
    info!(
        "reached t = {:.4} after {} steps",
        final_state.t, final_state.steps
    );

    let (snapshots, running_max) = tracker.into_parts();
    let running_max = running_max.expect("the initial snapshot is always recorded");
    let grid_slack = slack(&zeta);
    let mut report = StabilityReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        profile_params: params,
        perturbation: perturbed.sizes,
        clipped_mass: perturbed.clipped_mass,
        horizon: final_state.t,
        steps: final_state.steps,
        snapshots,
        running_max,
        bounds,
        verdicts: Vec::new(),
        slack: grid_slack,
        provenance: Provenance::of(config),
    };
    report.verdicts = derive_verdicts(&report.measured_sup(), &report.bounds, grid_slack);
    Ok(report)
}

/// Runs independent experiments concurrently; results keep the input order.
pub fn sweep(configs: &[ExperimentConfig]) -> Vec<Result<StabilityReport>> {
    configs.par_iter().map(run_experiment).collect()
}

/// Writes `report` as JSON to `path`, the time series next to it as
/// `<stem>.csv`, and the conservation log as `<stem>_conservation.csv`.
pub fn write_outputs(report: &StabilityReport, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    report.save(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    let timeseries = path.with_file_name(format!("{stem}.csv"));
    report.write_timeseries_csv(std::fs::File::create(timeseries)?)?;
    let records: Vec<_> = report
        .snapshots
        .iter()
        .map(|s| s.conservation.clone())
        .collect();
    let log = path.with_file_name(format!("{stem}_conservation.csv"));
    vsl_core::euler::write_conservation_csv(&records, std::fs::File::create(log)?)
        .map_err(|e| HarnessError::stage(Stage::Output, e))?;
    Ok(())
}
