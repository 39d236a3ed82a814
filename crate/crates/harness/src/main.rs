use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;
use vsl_core::bounds::{evaluate_bounds, tail_radius_for, PerturbationSize, ProfileParams};
use vsl_core::rearrange::symmetric_rearrangement;
use vsl_core::{RadialProfile, ScalarField};
use vsl_harness::config::load_configs;
use vsl_harness::verify::{verify_suite, Level};
use vsl_harness::{run_with_snapshots, sweep, write_outputs, SweepReport};

/// Largest radius searched when choosing `R` for a non-compact profile.
const BOUND_MAX_RADIUS: f64 = 1e3;

#[derive(Parser)]
#[command(
    name = "vsl",
    version,
    about = "Stability laboratory for radial monotone Euler vorticities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NamedProfile {
    /// Indicator of the unit disk.
    Disk,
    /// `exp(-r²)`.
    Gaussian,
    /// `(1 - r)₊`.
    Cone,
}

impl NamedProfile {
    fn profile(self) -> RadialProfile {
        match self {
            NamedProfile::Disk => RadialProfile::unit_disk(),
            NamedProfile::Gaussian => RadialProfile::unit_gaussian(),
            NamedProfile::Cone => RadialProfile::unit_cone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Symmetric-decreasing rearrangement of a VSF1 field.
    Rearrange { input: PathBuf, output: PathBuf },
    /// Norms and impulse of a VSF1 field, as JSON.
    Functionals {
        input: PathBuf,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        p: Vec<f64>,
    },
    /// Evaluates the stability bounds for a perturbation size, as JSON.
    Bound {
        #[arg(long, value_enum, default_value = "disk")]
        profile: NamedProfile,
        /// `‖ω₀ − ζ‖₁`; majorized by `π δ_p + δ_J` when omitted.
        #[arg(long)]
        eps1: Option<f64>,
        /// `J(|ω₀ − ζ|)`.
        #[arg(long = "eps-j", visible_alias = "epsJ", default_value_t = 0.0)]
        eps_j: f64,
        /// `‖ω₀ − ζ‖_p`.
        #[arg(long = "eps-p", visible_alias = "epsP", default_value_t = 0.0)]
        eps_p: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Tail tolerance used to choose `R` for non-compact profiles.
        #[arg(long, default_value_t = 1e-2)]
        epsilon: f64,
    },
    /// Runs a configuration, writing VSF1 snapshots, the report and CSV logs.
    Evolve {
        config: PathBuf,
        #[arg(long, default_value = "vsl-run")]
        out_dir: PathBuf,
    },
    /// Runs a configuration (or an array of them concurrently) and writes the report.
    Experiment {
        config: PathBuf,
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
    },
    /// Runs the self-check suites.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        level: Level,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("VSL_THREADS") {
        let threads: usize = value
            .parse()
            .with_context(|| format!("VSL_THREADS = {value:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn functionals(path: &Path, p_list: &[f64]) -> anyhow::Result<serde_json::Value> {
    let f = ScalarField::load_vsf(path).with_context(|| format!("reading {}", path.display()))?;
    let impulse = f.abs().angular_impulse();
    let mut lp = BTreeMap::new();
    let mut jp = BTreeMap::new();
    for &p in p_list {
        lp.insert(p.to_string(), f.lp_norm(p)?);
        jp.insert(p.to_string(), f.jp_norm(p)?);
    }
    Ok(json!({
        "n": f.spec().n(),
        "L": f.spec().half_width(),
        "integral": f.quadrature(),
        "sup": f.sup_norm(),
        "impulse": impulse,
        "lp": lp,
        "jp": jp,
        "boundary_mass": f.boundary_mass_fraction(),
    }))
}

fn bound(
    named: NamedProfile,
    eps1: Option<f64>,
    eps_j: f64,
    eps_p: f64,
    p: f64,
    epsilon: f64,
) -> anyhow::Result<serde_json::Value> {
    let profile = named.profile();
    let radius = tail_radius_for(&profile, epsilon, p, BOUND_MAX_RADIUS)?;
    let params = ProfileParams::of_profile(&profile, radius)?;
    let size = match eps1 {
        Some(eps1) => PerturbationSize {
            p,
            eps1,
            eps_j,
            eps_p,
        },
        None => PerturbationSize::from_jp(p, eps_p, eps_j),
    };
    let bounds = evaluate_bounds(&params, &size)?;
    Ok(json!({ "profile_params": params, "perturbation": size, "bounds": bounds }))
}

fn experiment(config: &Path, out: &Path) -> anyhow::Result<bool> {
    let configs = load_configs(config)?;
    if configs.len() == 1 {
        let report = run_with_snapshots(&configs[0], None)?;
        write_outputs(&report, out)?;
        for v in report.verdicts.iter().filter(|v| !v.holds) {
            warn!(
                "p = {}: {} sup {:.4e} exceeds bound {:.4e}",
                v.p, v.quantity, v.measured_sup, v.bound
            );
        }
        info!("report written to {}", out.display());
        return Ok(report.all_hold());
    }
    let results = sweep(&configs);
    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report")
        .to_string();
    for (k, r) in results.iter().enumerate() {
        match r {
            Ok(report) => {
                write_outputs(report, &out.with_file_name(format!("{stem}_{k:03}.json")))?
            }
            Err(e) => warn!("run {k} failed: {e}"),
        }
    }
    let summary = SweepReport::new(results);
    std::fs::write(out, serde_json::to_string_pretty(&summary)? + "\n")?;
    info!(
        "sweep of {} runs written to {}",
        summary.runs.len(),
        out.display()
    );
    Ok(summary.all_hold())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Rearrange { input, output } => {
            let f = ScalarField::load_vsf(&input)
                .with_context(|| format!("reading {}", input.display()))?;
            symmetric_rearrangement(&f)
                .save_vsf(&output)
                .with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Functionals { input, p } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&functionals(&input, &p)?)?
            );
        }
        Command::Bound {
            profile,
            eps1,
            eps_j,
            eps_p,
            p,
            epsilon,
        } => {
            println!(
                "{}",
                serde_json::to_string_pretty(&bound(profile, eps1, eps_j, eps_p, p, epsilon)?)?
            );
        }
        Command::Evolve { config, out_dir } => {
            let configs = load_configs(&config)?;
            if configs.len() != 1 {
                bail!("evolve takes a single configuration; use `experiment` for sweeps");
            }
            let report = run_with_snapshots(&configs[0], Some(&out_dir))?;
            write_outputs(&report, &out_dir.join("report.json"))?;
            println!(
                "t = {} after {} steps, {} snapshots in {}",
                report.horizon,
                report.steps,
                report.snapshots.len(),
                out_dir.display()
            );
        }
        Command::Experiment { config, out } => {
            if !experiment(&config, &out)? {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Verify { level } => {
            let outcomes = verify_suite(level);
            for c in &outcomes {
                println!(
                    "{} {:<26} {:>7.1}s  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.seconds,
                    c.detail
                );
            }
            if !outcomes.iter().all(|c| c.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
