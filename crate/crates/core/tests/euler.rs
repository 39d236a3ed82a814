use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vsl_core::euler::{
    conservation_report, evolve, velocity_from_vorticity, EulerSolver, FlowState, Observer,
    SolverConfig, StepInfo,
};
use vsl_core::field::sample_profile;
use vsl_core::random_fields::random_field;
use vsl_core::{Error, GridSpec, RadialProfile, ScalarField};

#[derive(Default)]
struct Counter {
    snapshots: Vec<f64>,
    steps: usize,
}

impl Observer for Counter {
    fn on_step(&mut self, _state: &FlowState, _info: &StepInfo) -> vsl_core::Result<()> {
        self.steps += 1;
        Ok(())
    }

    fn on_snapshot(&mut self, state: &FlowState) -> vsl_core::Result<()> {
        self.snapshots.push(state.t);
        Ok(())
    }
}

fn wobbled(profile: &RadialProfile, spec: GridSpec, a: f64) -> ScalarField {
    ScalarField::from_fn(spec, |x, y| {
        profile.eval((x * x + y * y).sqrt() / (1.0 + a * (3.0 * y.atan2(x)).cos()))
    })
}

#[test]
fn zero_horizon_gives_one_snapshot() {
    let spec = GridSpec::new(32, 4.0).unwrap();
    let omega = sample_profile(&RadialProfile::unit_gaussian(), &spec);
    let mut c = Counter::default();
    let out = evolve(
        FlowState::new(omega.clone(), false),
        &SolverConfig::new(0.0),
        &mut [&mut c],
    )
    .unwrap();
    assert_eq!(c.snapshots, vec![0.0]);
    assert_eq!(c.steps, 0);
    assert_eq!(out.omega, omega);
}

#[test]
fn long_stride_gives_initial_and_final_snapshots() {
    let spec = GridSpec::new(32, 4.0).unwrap();
    let omega = sample_profile(&RadialProfile::unit_gaussian(), &spec);
    let mut cfg = SolverConfig::new(1.0);
    cfg.snapshot_stride = 1_000_000;
    let mut c = Counter::default();
    let out = evolve(FlowState::new(omega, false), &cfg, &mut [&mut c]).unwrap();
    assert_eq!(c.snapshots.len(), 2);
    assert_eq!(c.snapshots[0], 0.0);
    assert!((c.snapshots[1] - 1.0).abs() < 1e-12);
    assert_eq!(c.steps, out.steps);
}

#[test]
fn stride_controls_snapshot_count() {
    let spec = GridSpec::new(32, 4.0).unwrap();
    let omega = sample_profile(&RadialProfile::unit_gaussian(), &spec);
    let mut cfg = SolverConfig::new(2.0);
    cfg.snapshot_stride = 3;
    let mut c = Counter::default();
    let out = evolve(FlowState::new(omega, false), &cfg, &mut [&mut c]).unwrap();
    let expected = 1 + out.steps / 3 + usize::from(!out.steps.is_multiple_of(3));
    assert_eq!(c.snapshots.len(), expected);
}

/// Velocity of `omega` at `(px, py)` by direct Biot-Savart summation.
fn biot_savart(omega: &ScalarField, px: f64, py: f64) -> (f64, f64) {
    let spec = omega.spec();
    let (mut u, mut v) = (0.0, 0.0);
    for ((x, y), w) in spec.centers().zip(omega.values()) {
        if *w == 0.0 {
            continue;
        }
        let (dx, dy) = (px - x, py - y);
        let r2 = dx * dx + dy * dy;
        u -= w * dy / r2;
        v += w * dx / r2;
    }
    let scale = spec.cell_area() / (2.0 * PI);
    (u * scale, v * scale)
}

#[test]
fn disk_velocity_matches_biot_savart() {
    let spec = GridSpec::new(256, 8.0).unwrap();
    let omega = ScalarField::disk_indicator(spec, (0.0, 0.0), 1.0);
    let vel = velocity_from_vorticity(&omega).unwrap();
    let n = spec.n();
    // Cell centers at distance close to 2 in eight directions.
    let k = (2.0 / spec.h()).round() as usize;
    let c = n / 2;
    let probes = [
        (c + k, c),
        (c - k - 1, c),
        (c, c + k),
        (c, c - k - 1),
        (c + k * 7 / 10, c + k * 7 / 10),
        (c - k * 7 / 10 - 1, c + k * 7 / 10),
        (c + k * 7 / 10, c - k * 7 / 10 - 1),
        (c - k * 7 / 10 - 1, c - k * 7 / 10 - 1),
    ];
    for (i, j) in probes {
        let (x, y) = (spec.center(i), spec.center(j));
        let r = x.hypot(y);
        let idx = spec.index(i, j);
        let (u, v) = (vel.u.values()[idx], vel.v.values()[idx]);
        let speed = (-y * u + x * v) / r;
        assert!(
            (speed - 0.25 * 2.0 / r).abs() <= 0.05 * 0.25,
            "r = {r}: {speed}"
        );
        let (bu, bv) = biot_savart(&omega, x, y);
        assert!(
            (u - bu).abs() + (v - bv).abs() <= 2e-3,
            "({x}, {y}): ({u}, {v}) vs ({bu}, {bv})"
        );
    }
}

#[test]
fn off_center_bump_conserves_impulse() {
    let spec = GridSpec::new(128, 6.0).unwrap();
    let omega = ScalarField::from_fn(spec, |x, y| {
        let (dx, dy) = (x - 1.0, y - 0.5);
        (-(dx * dx + dy * dy) / 0.5).exp()
    });
    let mut cfg = SolverConfig::new(10.0);
    cfg.snapshot_stride = 10;
    struct Worst(f64);
    impl Observer for Worst {
        fn on_step(&mut self, state: &FlowState, _info: &StepInfo) -> vsl_core::Result<()> {
            self.0 = self.0.max(conservation_report(state).impulse_drift);
            Ok(())
        }
    }
    let mut worst = Worst(0.0);
    evolve(FlowState::new(omega, false), &cfg, &mut [&mut worst]).unwrap();
    assert!(worst.0 <= 1e-4, "{}", worst.0);
}

#[test]
fn reversal_recovers_initial_data() {
    let spec = GridSpec::new(128, 4.0).unwrap();
    for profile in [
        RadialProfile::unit_gaussian(),
        RadialProfile::MollifiedPatch {
            radius: 1.0,
            amplitude: 1.0,
            width: 3.0 * spec.h(),
        },
    ] {
        let omega0 = wobbled(&profile, spec, 0.1);
        let forward = evolve(
            FlowState::new(omega0.clone(), false),
            &SolverConfig::new(2.0),
            &mut [],
        )
        .unwrap();
        let r = conservation_report(&forward);
        let drift = r.l1_drift.max(r.l2_drift).max(r.impulse_drift);
        let mut cfg = SolverConfig::new(2.0);
        cfg.reverse = true;
        let back = evolve(FlowState::new(forward.omega.clone(), false), &cfg, &mut []).unwrap();
        let l1 = omega0.lp_norm(1.0).unwrap();
        let error = back.omega.sub(&omega0).unwrap().lp_norm(1.0).unwrap() / l1;
        let moved = forward.omega.sub(&omega0).unwrap().lp_norm(1.0).unwrap() / l1;
        assert!(moved > 0.05, "the data must actually move: {moved}");
        assert!(
            error <= 10.0 * drift,
            "{profile:?}: error {error:.3e}, forward drift {drift:.3e}"
        );
    }
}

#[test]
fn blowup_is_detected() {
    let spec = GridSpec::new(32, 4.0).unwrap();
    let mut values = vec![0.0; spec.len()];
    values[spec.index(16, 16)] = f64::NAN;
    assert!(ScalarField::from_values(spec, values).is_err());
    let omega = ScalarField::from_fn(spec, |x, y| {
        if x.abs() < 0.2 && y.abs() < 1.0 {
            1e3
        } else {
            0.0
        }
    });
    let mut cfg = SolverConfig::new(5.0);
    cfg.cfl = 1.0;
    cfg.dealias = false;
    match evolve(FlowState::new(omega, false), &cfg, &mut []) {
        Ok(s) => assert!(s.omega.values().iter().all(|v| v.is_finite())),
        Err(e) => assert!(matches!(e, Error::Blowup { .. })),
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let spec = GridSpec::new(32, 4.0).unwrap();
    for cfg in [
        SolverConfig {
            cfl: 1.5,
            ..SolverConfig::new(1.0)
        },
        SolverConfig {
            cfl: 0.0,
            ..SolverConfig::new(1.0)
        },
        SolverConfig::new(-1.0),
        SolverConfig {
            snapshot_stride: 0,
            ..SolverConfig::new(1.0)
        },
        SolverConfig {
            filter: Some(-1.0),
            ..SolverConfig::new(1.0)
        },
    ] {
        assert!(EulerSolver::new(spec, cfg).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn periodic_velocity_is_divergence_free(seed in any::<u64>()) {
        let spec = GridSpec::new(64, 4.0).unwrap();
        let omega = random_field(&mut ChaCha8Rng::seed_from_u64(seed), spec);
        let solver = EulerSolver::new(spec, SolverConfig::new(1.0)).unwrap();
        let vel = solver.velocity(&omega).unwrap();
        let (u, v) = vel.periodic_part();
        prop_assert!(solver.spectral_divergence(&u, &v).unwrap() <= 1e-12);
    }

    #[test]
    fn evolution_is_deterministic(seed in any::<u64>()) {
        let spec = GridSpec::new(32, 4.0).unwrap();
        let omega = random_field(&mut ChaCha8Rng::seed_from_u64(seed), spec);
        let cfg = SolverConfig::new(0.3);
        let a = evolve(FlowState::new(omega.clone(), false), &cfg, &mut []);
        let b = evolve(FlowState::new(omega, false), &cfg, &mut []);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "runs disagree"),
        }
    }
}

#[test]
fn halving_the_cell_size_cuts_the_drift_fourfold() {
    let drift = |n: usize| {
        let spec = GridSpec::new(n, 4.0).unwrap();
        let omega0 = wobbled(&RadialProfile::unit_gaussian(), spec, 0.1);
        let out = evolve(
            FlowState::new(omega0, false),
            &SolverConfig::new(2.0),
            &mut [],
        )
        .unwrap();
        let r = conservation_report(&out);
        r.l1_drift.max(r.l2_drift).max(r.impulse_drift)
    };
    let (coarse, fine) = (drift(64), drift(128));
    assert!(
        coarse >= 4.0 * fine,
        "n = 64: {coarse:.3e}, n = 128: {fine:.3e}"
    );
}

#[test]
fn initial_projection_resets_the_baselines() {
    let spec = GridSpec::new(64, 4.0).unwrap();
    let omega = ScalarField::disk_indicator(spec, (0.0, 0.0), 1.0);
    let cfg = SolverConfig {
        project_initial: true,
        ..SolverConfig::new(0.0)
    };
    let solver = EulerSolver::new(spec, cfg.clone()).unwrap();
    let prepared = solver.prepare(FlowState::new(omega.clone(), true)).unwrap();
    assert_ne!(prepared.omega, omega);
    assert_eq!(prepared.baselines.l1, prepared.omega.lp_norm(1.0).unwrap());
    assert!(prepared.baselines.patch_q.is_some());
    let twice = solver.prepare(prepared.clone()).unwrap();
    assert!(
        twice.omega.sub(&prepared.omega).unwrap().sup_norm() < 1e-12,
        "projection is idempotent"
    );
    let r = conservation_report(&prepared);
    assert_eq!((r.l1_drift, r.l2_drift, r.impulse_drift), (0.0, 0.0, 0.0));

    let mut c = Counter::default();
    let out = evolve(FlowState::new(omega.clone(), true), &cfg, &mut [&mut c]).unwrap();
    assert_eq!(out.omega, prepared.omega);

    let raw = SolverConfig {
        dealias: false,
        ..cfg
    };
    let untouched = EulerSolver::new(spec, raw)
        .unwrap()
        .prepare(FlowState::new(omega.clone(), false))
        .unwrap();
    assert_eq!(untouched.omega, omega);
}
