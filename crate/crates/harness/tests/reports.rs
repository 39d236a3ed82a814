use vsl_harness::config::ProfileConfig;
use vsl_harness::report::{derive_verdicts, Deviation};
use vsl_harness::{
    run_experiment, sweep, write_outputs, ExperimentConfig, HarnessError, StabilityReport, Stage,
    SweepReport,
};

fn config(extra: &str) -> ExperimentConfig {
    let mut base: serde_json::Value = serde_json::from_str(
        r#"{
            "grid": { "n": 64, "L": 4.0 },
            "profile": { "kind": "mollified-patch", "radius": 1.0, "width": 0.1 },
            "perturbation": { "kind": "boundary-wobble", "mode": 3, "amplitude": 0.05 },
            "solver": { "snapshot_stride": 5 },
            "run": { "t_end": 0.5, "seed": 7 },
            "norms": { "p_list": [1.0, 2.0] }
        }"#,
    )
    .unwrap();
    let patch: serde_json::Value = serde_json::from_str(extra).unwrap();
    for (k, v) in patch.as_object().unwrap() {
        base[k] = v.clone();
    }
    ExperimentConfig::from_json(&base.to_string()).unwrap()
}

#[test]
fn reports_are_deterministic() {
    let cfg = config("{}");
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn report_round_trips_and_verdicts_recompute() {
    let report = run_experiment(&config("{}")).unwrap();
    let back = StabilityReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.recompute_verdicts().unwrap(), report.verdicts);
    assert_eq!(report.verdicts.len(), 8);
    assert_eq!(report.bounds.len(), 2);
    assert!(report.all_hold());
    for v in &report.verdicts {
        assert_eq!(v.holds, v.measured_sup <= v.bound);
        assert_eq!(v.holds_with_slack, v.measured_sup <= v.bound + v.slack);
    }
}

#[test]
fn future_schema_versions_are_rejected() {
    let report = run_experiment(&config(r#"{ "run": { "t_end": 0.0 } }"#)).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    value["schema_version"] = 99.into();
    assert!(matches!(
        StabilityReport::from_json(&value.to_string()),
        Err(HarnessError::Config(_))
    ));
}

#[test]
fn running_max_dominates_the_initial_deviation() {
    let report = run_experiment(&config("{}")).unwrap();
    let first = &report.snapshots[0];
    assert_eq!(first.t, 0.0);
    let sup = report.measured_sup();
    assert!(sup.l1 >= first.deviation.l1 && sup.j >= first.deviation.j);
    for k in 0..2 {
        assert!(sup.jp[k] >= first.deviation.jp[k]);
        assert!(report.sup_jp([1.0, 2.0][k]).unwrap() >= first.deviation.jp[k]);
    }
    let size = &report.perturbation[1];
    assert!((first.deviation.jp[1] - (size.eps_p + size.eps_j)).abs() <= 1e-12);
}

#[test]
fn zero_horizon_report_has_one_snapshot() {
    let report = run_experiment(&config(r#"{ "run": { "t_end": 0.0, "seed": 7 } }"#)).unwrap();
    assert_eq!(report.steps, 0);
    assert_eq!(report.snapshots.len(), 1);
    assert_eq!(report.running_max, report.snapshots[0].deviation);
}

#[test]
fn csv_outputs_have_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out/run.json");
    let report = run_experiment(&config("{}")).unwrap();
    write_outputs(&report, &path).unwrap();
    assert_eq!(StabilityReport::load(&path).unwrap(), report);

    let mut rdr = csv::Reader::from_path(dir.path().join("out/run.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "t",
            "step",
            "L1_dev",
            "L2_dev",
            "J_dev",
            "Lp_dev_p1",
            "Lp_dev_p2",
            "Jp_dev_p1",
            "Jp_dev_p2",
            "L1_drift",
            "L2_drift",
            "J_drift",
            "dist_drift",
            "patch_q_drift",
            "boundary_mass"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), report.snapshots.len());
    let last_t: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!((last_t - 0.5).abs() < 1e-12);
    assert!(dir.path().join("out/run_conservation.csv").exists());
}

#[test]
fn sweep_keeps_input_order_and_labels_failures() {
    let ok_a = config("{}");
    let ok_b = config(r#"{ "run": { "t_end": 0.2, "seed": 3 } }"#);
    let overflow = config(r#"{ "profile": { "kind": "gaussian", "scale": 3.0 } }"#);
    let tail = config(
        r#"{ "grid": { "n": 64, "L": 6.0 }, "profile": { "kind": "gaussian" }, "bounds": { "epsilon": 0.001 }, "norms": { "p_list": [2.0] } }"#,
    );
    let far = config(r#"{ "perturbation": { "kind": "translate", "shift": [3.0, 0.0] } }"#);
    let results = sweep(&[ok_a.clone(), overflow, ok_b.clone(), tail, far]);
    assert_eq!(results[0].as_ref().unwrap().config, ok_a);
    assert_eq!(results[2].as_ref().unwrap().config, ok_b);
    let stages: Vec<Option<Stage>> = results
        .iter()
        .map(|r| r.as_ref().err().and_then(HarnessError::stage_label))
        .collect();
    assert_eq!(
        stages,
        [
            None,
            Some(Stage::Profile),
            None,
            Some(Stage::TailRadius),
            Some(Stage::Perturbation)
        ]
    );
    let summary = SweepReport::new(results);
    assert!(!summary.all_hold());
    assert_eq!(summary.runs[3].stage, Some(Stage::TailRadius));
    assert!(summary.runs[1]
        .error
        .as_deref()
        .unwrap()
        .starts_with("[profile]"));
    let json = serde_json::to_string(&summary).unwrap();
    assert!(json.contains(r#""stage":"tail-radius""#));
    assert_eq!(serde_json::from_str::<SweepReport>(&json).unwrap(), summary);
}

#[test]
fn malformed_configs_are_config_errors() {
    for text in [
        r#"{ "grid": { "n": 64, "L": 4.0 }, "profile": { "kind": "gaussian" }, "run": { "t_end": 1.0 }, "colour": 1 }"#,
        r#"{ "grid": { "n": 60, "L": 4.0 }, "profile": { "kind": "gaussian" }, "run": { "t_end": 1.0 } }"#,
        r#"{ "grid": { "n": 64, "L": 4.0 }, "profile": { "kind": "gaussian" }, "run": { "t_end": 1.0 }, "norms": { "p_list": [0.5] } }"#,
        r#"{ "grid": { "n": 64, "L": 4.0 }, "profile": { "kind": "gaussian" }, "run": { "t_end": 1.0 }, "solver": { "cfl": 2.0 } }"#,
    ] {
        let err = ExperimentConfig::from_json(text).unwrap_err();
        assert_eq!(err.stage_label(), Some(Stage::Config), "{text}: {err}");
    }
}

#[test]
fn verdicts_compare_strictly_and_with_slack() {
    let report = run_experiment(&config("{}")).unwrap();
    let sup = report.measured_sup();
    let mut bounds = report.bounds.clone();
    bounds[0].jp_total = sup.jp[0] - 0.5 * report.slack;
    let verdicts = derive_verdicts(&sup, &bounds, report.slack);
    let v = verdicts
        .iter()
        .find(|v| v.p == 1.0 && v.quantity == "jp_total")
        .unwrap();
    assert!(!v.holds && v.holds_with_slack);
    let empty = Deviation {
        l1: 0.0,
        l2: 0.0,
        j: 0.0,
        lp: vec![0.0, 0.0],
        jp: vec![0.0, 0.0],
    };
    assert!(derive_verdicts(&empty, &report.bounds, 0.0)
        .iter()
        .all(|v| v.holds));
}

#[test]
fn disabling_dealiasing_degrades_sharp_patch_enstrophy() {
    let worst_l2_drift = |dealias: bool| {
        let mut cfg = config(
            r#"{ "grid": { "n": 256, "L": 4.0 }, "profile": { "kind": "sharp-patch", "radius": 1.0 },
                 "perturbation": { "kind": "identity" }, "run": { "t_end": 5.0, "seed": 1 },
                 "solver": { "snapshot_stride": 20 }, "norms": { "p_list": [2.0] } }"#,
        );
        assert!(matches!(cfg.profile, ProfileConfig::SharpPatch { .. }));
        cfg.solver.dealias = dealias;
        let report = run_experiment(&cfg).unwrap();
        report
            .snapshots
            .iter()
            .map(|s| s.conservation.l2_drift)
            .fold(0.0, f64::max)
    };
    let with = worst_l2_drift(true);
    let without = worst_l2_drift(false);
    // Truncation keeps the enstrophy of a sharp patch markedly better conserved.
    assert!(
        without > 3.0 * with,
        "dealiased {with:.3e}, aliased {without:.3e}"
    );
}
