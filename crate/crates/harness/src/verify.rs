//! Self-check suites behind `vsl verify`.
//!
//! Every suite returns a [`CheckOutcome`]; the sizes of the randomized
//! suites are set by [`SuiteSizes`] so the same code serves the quick
//! check, the full check and the acceptance tests.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use vsl_core::bounds::{
    bound_j, bound_l1, bound_lp, evaluate_bounds, PerturbationSize, ProfileParams,
};
use vsl_core::euler::{conservation_report, EulerSolver, FlowState, Observer, SolverConfig};
use vsl_core::field::{disk_impulse, indicator_tolerance, sample_profile};
use vsl_core::random_fields::{random_field, random_pair, random_unit_mass};
use vsl_core::rearrange::{
    cell_order, cutoff, flatten_annulus, golden_order_mismatch, nonexpansivity_check,
    rearrangement_deficit_check, slack, symmetric_rearrangement, Verdict,
};
use vsl_core::{GridSpec, RadialProfile, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Fast,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    fn timed(name: &str, run: impl FnOnce() -> (bool, String)) -> Self {
        let start = Instant::now();
        let (passed, detail) = run();
        Self {
            name: name.to_string(),
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// Sample counts and resolutions of the suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSizes {
    pub n: usize,
    pub fields: usize,
    pub pairs: usize,
    pub unit_mass: usize,
    pub flatten_cases: usize,
    pub solver_n: usize,
    pub solver_t_end: f64,
}

impl SuiteSizes {
    pub fn for_level(level: Level) -> Self {
        match level {
            Level::Fast => Self {
                n: 256,
                fields: 100,
                pairs: 100,
                unit_mass: 50,
                flatten_cases: 10_000,
                solver_n: 128,
                solver_t_end: 2.0,
            },
            Level::Full => Self {
                n: 256,
                fields: 1000,
                pairs: 1000,
                unit_mass: 500,
                flatten_cases: 10_000,
                solver_n: 512,
                solver_t_end: 10.0,
            },
        }
    }
}

const HALF_WIDTH: f64 = 4.0;

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn sorted_bits(values: impl Iterator<Item = f64>) -> Vec<u64> {
    let mut v: Vec<u64> = values.map(f64::to_bits).collect();
    v.sort_unstable();
    v
}

/// Equimeasurability, norm preservation, impulse decrease, idempotence and
/// cut-off commutation of the rearrangement on random fields.
pub fn rearrangement_suite(n: usize, count: usize, seed: u64) -> CheckOutcome {
    CheckOutcome::timed("rearrangement invariants", || {
        let spec = GridSpec::new(n, HALF_WIDTH).expect("valid grid");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut failures = Vec::new();
        let mut worst_norm = 0.0f64;
        for case in 0..count {
            let f = random_field(&mut rng, spec);
            let star = symmetric_rearrangement(&f);
            if sorted_bits(f.values().iter().map(|v| v.abs()))
                != sorted_bits(star.values().iter().copied())
            {
                failures.push(format!("case {case}: not equimeasurable"));
            }
            for q in [1.0, 2.0, 4.0] {
                let d = rel_diff(f.lp_norm(q).unwrap(), star.lp_norm(q).unwrap());
                worst_norm = worst_norm.max(d);
                if d > 1e-12 {
                    failures.push(format!("case {case}: L^{q} norm changed by {d:.2e}"));
                }
            }
            if star.angular_impulse() > f.angular_impulse() + slack(&f) {
                failures.push(format!("case {case}: impulse increased"));
            }
            if symmetric_rearrangement(&star) != star {
                failures.push(format!("case {case}: not idempotent"));
            }
            let m = rng.random_range(0.0..1.0) * f.sup_norm();
            let lhs = symmetric_rearrangement(&cutoff(&f, m).unwrap());
            let rhs = cutoff(&star, m).unwrap();
            if lhs != rhs {
                failures.push(format!("case {case}: cut-off does not commute"));
            }
        }
        let detail = if failures.is_empty() {
            format!("{count} fields at n = {n}; worst norm change {worst_norm:.1e}")
        } else {
            format!("{} failures, first: {}", failures.len(), failures[0])
        };
        (failures.is_empty(), detail)
    })
}

/// The rearrangement order on a 16 × 16 grid against the reference file.
pub fn golden_order_check() -> CheckOutcome {
    CheckOutcome::timed("golden cell order", || {
        let order = cell_order(&GridSpec::new(16, 1.0).expect("valid grid"));
        match golden_order_mismatch(&order) {
            None => (true, "n = 16 order matches".into()),
            Some(k) => (
                false,
                format!("order departs from the reference at position {k}"),
            ),
        }
    })
}

/// `‖g* − h*‖₁ <= ‖g − h‖₁` on random pairs.
pub fn nonexpansivity_suite(n: usize, count: usize, seed: u64) -> CheckOutcome {
    CheckOutcome::timed("nonexpansivity", || {
        let spec = GridSpec::new(n, HALF_WIDTH).expect("valid grid");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut violated, mut refused) = (0, 0);
        for _ in 0..count {
            let (g, h) = random_pair(&mut rng, spec);
            match nonexpansivity_check(&g, &h).expect("same grid").verdict {
                Verdict::Holds => {}
                Verdict::Violated => violated += 1,
                Verdict::Refused => refused += 1,
            }
        }
        (
            violated == 0 && refused == 0,
            format!("{count} pairs: {violated} violations, {refused} refused"),
        )
    })
}

/// `‖f − f*‖₁² <= 4π‖f‖_∞ (J(f) − J(f*))` on random fields and on the
/// off-center unit disk at distance 2, where the two sides are `4π²` and
/// `16π²`.
pub fn deficit_suite(n: usize, count: usize, seed: u64) -> CheckOutcome {
    CheckOutcome::timed("rearrangement deficit", || {
        let spec = GridSpec::new(n, HALF_WIDTH).expect("valid grid");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut violated = 0;
        for _ in 0..count {
            let f = random_field(&mut rng, spec);
            if !rearrangement_deficit_check(&f).ok() {
                violated += 1;
            }
        }
        let off = ScalarField::disk_indicator(spec, (2.0, 0.0), 1.0);
        let c = rearrangement_deficit_check(&off);
        let tol = indicator_tolerance(&spec, 4.0 * PI);
        let lhs_ok = (c.lhs - 4.0 * PI * PI).abs() <= 4.0 * PI * tol;
        let rhs_ok = (c.rhs - c.slack - 16.0 * PI * PI).abs() <= 32.0 * PI * tol;
        let passed = violated == 0 && c.ok() && lhs_ok && rhs_ok;
        (
            passed,
            format!(
                "{count} fields: {violated} violations; off-center disk lhs {:.6} (4π² = {:.6}), rhs {:.6} (16π² = {:.6})",
                c.lhs,
                4.0 * PI * PI,
                c.rhs - c.slack,
                16.0 * PI * PI
            ),
        )
    })
}

/// Flattening identity against `(πk/2n)(1 − k/n)(s_k² − s_{k+1}²)²`, and the
/// impulse difference of the two annuli computed from their radii.
pub fn flatten_suite(cases: usize, seed: u64) -> CheckOutcome {
    CheckOutcome::timed("annulus flattening", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        let mut worst_impulse = 0.0f64;
        for _ in 0..cases {
            let levels: u32 = rng.random_range(2..=64);
            let k: u32 = rng.random_range(1..levels);
            let inner = rng.random_range(0.0..2.0);
            let outer = inner + rng.random_range(1e-3..2.0);
            let (kf, nf) = (f64::from(k), f64::from(levels));
            let width = outer * outer - inner * inner;
            let closed = (PI * kf / (2.0 * nf)) * (1.0 - kf / nf) * width * width;
            let flat = flatten_annulus(inner, outer, kf / nf).expect("valid annulus");
            worst = worst.max(rel_diff(flat.deficit, closed));
            let before = (kf / nf) * (disk_impulse(outer) - disk_impulse(inner));
            let after = disk_impulse(flat.radius) - disk_impulse(inner);
            worst_impulse = worst_impulse.max(((before - after) - flat.deficit).abs() / before);
        }
        (
            worst <= 1e-12 && worst_impulse <= 1e-12,
            format!("{cases} cases: worst relative error {worst:.1e}, impulse identity {worst_impulse:.1e}"),
        )
    })
}

/// `J(ξ) >= π/2 − slack` for random `0 <= ξ <= 1` with `‖ξ‖₁ = π`.
pub fn minimality_suite(n: usize, count: usize, seed: u64) -> CheckOutcome {
    CheckOutcome::timed("impulse minimality", || {
        let spec = GridSpec::new(n, HALF_WIDTH).expect("valid grid");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sampled, mut violated) = (0, 0);
        let mut closest = f64::INFINITY;
        while sampled < count {
            let Some(xi) = random_unit_mass(&mut rng, spec) else {
                continue;
            };
            sampled += 1;
            let excess = xi.angular_impulse() - PI / 2.0;
            closest = closest.min(excess);
            if excess < -slack(&xi) {
                violated += 1;
            }
        }
        (
            violated == 0,
            format!("{count} samples: {violated} violations; smallest J(ξ) − π/2 = {closest:.4e}"),
        )
    })
}

/// Bound values recomputed independently in 40-digit arithmetic:
/// `(M, α, R, T, p, δ₁, δ_J, δ_p) -> (L1, J, Lp, Jp)`.
pub const BOUND_REGRESSION: [([f64; 8], [f64; 4]); 4] = [
    (
        [1.0, PI, 1.0, 0.0, 2.0, 0.041_415_926_535_897_93, 0.01, 0.01],
        [
            2.711_885_771_751_661,
            5.433_771_543_503_322,
            3.674_202_278_768_02,
            9.107_973_822_271_34,
        ],
    ),
    (
        [
            1.0,
            PI,
            2.5,
            0.043_969_078_860_371_26,
            1.0,
            0.02,
            0.03,
            0.02,
        ],
        [
            3.782_796_242_113_857_5,
            47.402_891_184_143_96,
            7.805_592_484_227_715,
            55.208_483_668_371_68,
        ],
    ),
    (
        [2.0, 5.5, 1.5, 0.0, 3.0, 0.005, 0.002, 0.04],
        [
            1.632_005_783_510_727,
            7.346_026_025_798_271,
            4.011_389_459_166_463,
            11.357_415_484_964_734,
        ],
    ),
    (
        [1.0, PI, 1.0, 0.05, 2.0, 0.0, 0.0, 0.0],
        [
            1.585_330_919_042_404_4,
            3.270_661_838_084_809,
            2.518_198_498_166_818,
            5.788_860_336_251_627,
        ],
    ),
];

/// `bound_L1(1_D, δ₁ = δ_J = 0.01)`.
pub const UNIT_DISK_L1_REFERENCE: f64 = 1.495_845_781_511_555;

/// `bound_Lp(1_D, p = 2, L1 = 1.4959, δ₁ = δ_p = 0.01)`.
pub const UNIT_DISK_LP_REFERENCE: f64 = 2.573_946_386_388_030_4;

/// Largest relative error of the bound evaluators against the table above.
pub fn bound_regression_error() -> f64 {
    let mut worst = 0.0f64;
    for ([m, alpha, radius, tail, p, eps1, eps_j, eps_p], expected) in BOUND_REGRESSION {
        let pp = ProfileParams {
            m,
            alpha,
            radius,
            tail_impulse: tail,
            sixth_moment: 0.0,
        };
        let sz = PerturbationSize {
            p,
            eps1,
            eps_j,
            eps_p,
        };
        let b = evaluate_bounds(&pp, &sz).expect("valid exponent");
        let got = [b.l1, b.j, b.lp, b.jp_total];
        for (g, e) in got.iter().zip(expected) {
            let err = if e == 0.0 { g.abs() } else { rel_diff(*g, e) };
            worst = worst.max(err);
        }
    }
    let disk = ProfileParams::unit_disk();
    let sz = PerturbationSize {
        p: 2.0,
        eps1: 0.01,
        eps_j: 0.01,
        eps_p: 0.01,
    };
    worst = worst.max(rel_diff(bound_l1(&disk, &sz), UNIT_DISK_L1_REFERENCE));
    worst = worst.max(rel_diff(bound_j(&disk, &sz, 1.4959), 3.0018));
    worst = worst.max(rel_diff(
        bound_lp(&disk, &sz, 1.4959).expect("p = 2"),
        UNIT_DISK_LP_REFERENCE,
    ));
    worst
}

pub fn bounds_check() -> CheckOutcome {
    CheckOutcome::timed("bound regression", || {
        let worst = bound_regression_error();
        (worst <= 1e-10, format!("worst relative error {worst:.1e}"))
    })
}

/// Largest drifts over a run, recorded at every step.
#[derive(Debug, Default)]
struct DriftMonitor {
    l1: f64,
    l2: f64,
    impulse: f64,
    dist: f64,
}

impl Observer for DriftMonitor {
    fn on_step(
        &mut self,
        state: &FlowState,
        _info: &vsl_core::euler::StepInfo,
    ) -> vsl_core::Result<()> {
        let r = conservation_report(state);
        self.l1 = self.l1.max(r.l1_drift);
        self.l2 = self.l2.max(r.l2_drift);
        self.impulse = self.impulse.max(r.impulse_drift);
        self.dist = self.dist.max(r.dist_drift);
        Ok(())
    }
}

/// Gaussian initial data on `[-6, 6)²`: drifts of `‖ω‖₁`, `‖ω‖₂`, `J(ω)` at
/// most `1e-4` and of the distribution function at most `1e-3`.
pub fn solver_conservation(n: usize, t_end: f64) -> CheckOutcome {
    CheckOutcome::timed("solver conservation", || {
        let spec = GridSpec::new(n, 6.0).expect("valid grid");
        let omega = sample_profile(&RadialProfile::unit_gaussian(), &spec);
        let solver = EulerSolver::new(spec, SolverConfig::new(t_end)).expect("valid config");
        let mut monitor = DriftMonitor::default();
        match solver.evolve(FlowState::new(omega, false), &mut [&mut monitor]) {
            Ok(_) => {
                let passed = monitor.l1 <= 1e-4
                    && monitor.l2 <= 1e-4
                    && monitor.impulse <= 1e-4
                    && monitor.dist <= 1e-3;
                (
                    passed,
                    format!(
                        "n = {n}, t = {t_end}: drifts L1 {:.1e}, L2 {:.1e}, J {:.1e}, distribution {:.1e}",
                        monitor.l1, monitor.l2, monitor.impulse, monitor.dist
                    ),
                )
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

/// A mollified unit patch stays within `1e-2` of itself in `J₂`.
pub fn patch_stationarity(n: usize, t_end: f64) -> CheckOutcome {
    CheckOutcome::timed("patch stationarity", || {
        let spec = GridSpec::new(n, HALF_WIDTH).expect("valid grid");
        let zeta = sample_profile(
            &RadialProfile::MollifiedPatch {
                radius: 1.0,
                amplitude: 1.0,
                width: 3.0 * spec.h(),
            },
            &spec,
        );
        let solver = EulerSolver::new(spec, SolverConfig::new(t_end)).expect("valid config");
        match solver.evolve(FlowState::new(zeta.clone(), true), &mut []) {
            Ok(state) => {
                let dev = state
                    .omega
                    .sub(&zeta)
                    .and_then(|d| d.jp_norm(2.0))
                    .unwrap_or(f64::NAN);
                (
                    dev <= 1e-2,
                    format!("n = {n}, t = {t_end}: J₂ deviation {dev:.2e}"),
                )
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

/// Runs every suite at the given level.
pub fn verify_suite(level: Level) -> Vec<CheckOutcome> {
    let s = SuiteSizes::for_level(level);
    vec![
        golden_order_check(),
        rearrangement_suite(s.n, s.fields, 1),
        nonexpansivity_suite(s.n, s.pairs, 2),
        deficit_suite(s.n, s.fields, 3),
        flatten_suite(s.flatten_cases, 4),
        minimality_suite(s.n, s.unit_mass, 5),
        bounds_check(),
        solver_conservation(s.solver_n, s.solver_t_end),
        patch_stationarity(s.solver_n.min(256), s.solver_t_end),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_table_matches() {
        assert!(
            bound_regression_error() <= 1e-10,
            "{}",
            bound_regression_error()
        );
    }

    #[test]
    fn small_suites_pass() {
        for c in [
            golden_order_check(),
            rearrangement_suite(64, 20, 11),
            nonexpansivity_suite(64, 20, 12),
            deficit_suite(128, 20, 13),
            flatten_suite(500, 14),
            minimality_suite(64, 20, 15),
        ] {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
