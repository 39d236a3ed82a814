use std::f64::consts::PI;

use proptest::prelude::*;
use vsl_core::bounds::{
    bound_j, bound_jp_total, bound_l1, bound_lp, evaluate_bounds, l1_from_jp, tail_radius_for,
    tails, PerturbationSize, ProfileParams, TAIL_LADDER_RATIO,
};
use vsl_core::{Error, RadialProfile};

fn params(m: f64, alpha: f64, radius: f64, tail: f64) -> ProfileParams {
    ProfileParams {
        m,
        alpha,
        radius,
        tail_impulse: tail,
        sixth_moment: 0.0,
    }
}

fn size(p: f64, eps1: f64, eps_j: f64, eps_p: f64) -> PerturbationSize {
    PerturbationSize {
        p,
        eps1,
        eps_j,
        eps_p,
    }
}

fn arb_params() -> impl Strategy<Value = ProfileParams> {
    (0.1f64..5.0, 0.1f64..10.0, 0.5f64..4.0, 0.0f64..1.0)
        .prop_map(|(m, a, r, t)| params(m, a, r, t))
}

fn arb_size() -> impl Strategy<Value = PerturbationSize> {
    (1.0f64..8.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
        .prop_map(|(p, e1, ej, ep)| size(p, e1, ej, ep))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn l1_bound_is_monotone(pp in arb_params(), sz in arb_size(), bump in 1e-6f64..1.0) {
        let base = bound_l1(&pp, &sz);
        let variants = [
            bound_l1(&pp, &PerturbationSize { eps1: sz.eps1 + bump, ..sz }),
            bound_l1(&pp, &PerturbationSize { eps_j: sz.eps_j + bump, ..sz }),
            bound_l1(&ProfileParams { tail_impulse: pp.tail_impulse + bump, ..pp }, &sz),
            bound_l1(&ProfileParams { m: pp.m + bump, ..pp }, &sz),
            bound_l1(&ProfileParams { alpha: pp.alpha + bump, ..pp }, &sz),
            bound_l1(&ProfileParams { radius: pp.radius + bump, ..pp }, &sz),
        ];
        for v in variants {
            prop_assert!(v >= base);
        }
    }

    #[test]
    fn total_bound_is_monotone(pp in arb_params(), p in 1.0f64..8.0, eps_p in 0.0f64..1.0, eps_j in 0.0f64..1.0, bump in 1e-6f64..1.0) {
        let total = |pp: &ProfileParams, ep: f64, ej: f64| {
            bound_jp_total(pp, &PerturbationSize::from_jp(p, ep, ej)).unwrap()
        };
        let base = total(&pp, eps_p, eps_j);
        prop_assert!(total(&pp, eps_p + bump, eps_j) >= base);
        prop_assert!(total(&pp, eps_p, eps_j + bump) >= base);
        let fatter = ProfileParams { tail_impulse: pp.tail_impulse + bump, ..pp };
        prop_assert!(total(&fatter, eps_p, eps_j) >= base);
    }

    #[test]
    fn total_bound_is_the_sum_of_its_parts(pp in arb_params(), sz in arb_size()) {
        let b = evaluate_bounds(&pp, &sz).unwrap();
        prop_assert_eq!(b.jp_total, b.lp + b.j);
        prop_assert!(b.jp_total >= b.lp && b.jp_total >= b.j);
        prop_assert_eq!(b.l1, bound_l1(&pp, &sz));
        prop_assert_eq!(b.j, bound_j(&pp, &sz, b.l1));
        prop_assert_eq!(b.lp, bound_lp(&pp, &sz, b.l1).unwrap());
    }

    #[test]
    fn first_power_reduces_to_a_linear_combination(pp in arb_params(), e1 in 0.0f64..1.0, ep in 0.0f64..1.0, l1 in 0.0f64..10.0) {
        let sz = size(1.0, e1, 0.0, ep);
        let expected = (pp.m + 1.0) * l1 + 8.0 * pp.m * e1 + 4.0 * ep;
        let got = bound_lp(&pp, &sz, l1).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn doubling_the_radius_quadruples_the_impulse_term(pp in arb_params(), sz in arb_size(), l1 in 0.0f64..10.0) {
        let twice = ProfileParams { radius: 2.0 * pp.radius, ..pp };
        let term = |pp: &ProfileParams| bound_j(pp, &sz, l1) - sz.eps_j - 2.0 * pp.tail_impulse;
        let (a, b) = (term(&pp), term(&twice));
        prop_assert!((b - 4.0 * a).abs() <= 1e-12 * b.max(1.0));
    }
}

#[test]
fn unperturbed_compact_profile_has_zero_bounds() {
    for p in [1.0, 2.0, 4.0, 16.0] {
        let b = evaluate_bounds(&ProfileParams::unit_disk(), &PerturbationSize::zero(p)).unwrap();
        assert_eq!((b.l1, b.j, b.lp, b.jp_total), (0.0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn bounds_vanish_continuously_with_the_perturbation() {
    let pp = ProfileParams::unit_disk();
    let mut prev = f64::INFINITY;
    for k in 1..12 {
        let eps = 10f64.powi(-k);
        let b = bound_jp_total(&pp, &PerturbationSize::from_jp(2.0, eps, eps)).unwrap();
        assert!(b < prev);
        prev = b;
    }
    // The square roots in the chain make the p = 2 bound decay like eps^(1/4).
    let ratio = |eps: f64| {
        bound_jp_total(&pp, &PerturbationSize::from_jp(2.0, eps, eps)).unwrap() / eps.powf(0.25)
    };
    let limit = ratio(1e-14);
    for k in 8..14 {
        let r = ratio(10f64.powi(-k));
        assert!(r >= limit && r <= 1.2 * limit, "k = {k}: {r} vs {limit}");
    }
}

#[test]
fn tail_only_term() {
    let pp = params(1.0, PI, 1.0, 0.05);
    let b = bound_l1(&pp, &PerturbationSize::zero(2.0));
    assert!((b - (8.0 * PI * 2.0 * 0.05f64).sqrt()).abs() < 1e-14);
}

#[test]
fn unit_disk_examples() {
    let pp = ProfileParams::unit_disk();
    let sz = size(2.0, 0.01, 0.01, 0.01);
    assert!((bound_l1(&pp, &sz) - 1.495_845_781_511_555).abs() < 1e-12);
    assert!((bound_j(&pp, &sz, 1.4959) - 3.0018).abs() < 1e-12);
    assert!((bound_lp(&pp, &sz, 1.4959).unwrap() - 2.573_946_386_388_030_4).abs() < 1e-12);
}

#[test]
fn jp_data_majorizes_l1() {
    let sz = PerturbationSize::from_jp(3.0, 0.02, 0.05);
    assert_eq!(sz.eps1, l1_from_jp(0.02, 0.05));
    assert!((sz.eps1 - (PI * 0.02 + 0.05)).abs() < 1e-16);
    assert!((sz.jp() - 0.07).abs() < 1e-16);
}

#[test]
fn exponent_guard() {
    let pp = ProfileParams::unit_disk();
    assert!(matches!(
        bound_lp(&pp, &size(17.0, 0.1, 0.1, 0.1), 1.0),
        Err(Error::ExponentTooLarge(_))
    ));
    assert!(matches!(
        bound_lp(&pp, &size(0.5, 0.1, 0.1, 0.1), 1.0),
        Err(Error::InvalidExponent(_))
    ));
    assert!(bound_lp(&pp, &size(16.0, 0.1, 0.1, 0.1), 1.0)
        .unwrap()
        .is_finite());
}

fn gaussian_tails(r: f64) -> (f64, f64) {
    let s = r * r;
    let e = (-s).exp();
    (
        PI * (1.0 + s) * e,
        PI * e * (s * s * s + 3.0 * s * s + 6.0 * s + 6.0),
    )
}

#[test]
fn gaussian_tails_match_incomplete_gamma() {
    for r in [0.5, 1.0, 2.0, 3.3, 5.0] {
        let (t, t6) = tails(&RadialProfile::unit_gaussian(), r);
        let (et, et6) = gaussian_tails(r);
        assert!((t - et).abs() <= 1e-12 * et, "r = {r}: {t} vs {et}");
        assert!((t6 - et6).abs() <= 1e-12 * et6, "r = {r}: {t6} vs {et6}");
    }
}

fn tail_conditions_hold(r: f64, eps: f64, p: f64) -> bool {
    let (t, t6) = gaussian_tails(r);
    t.powf(1.0 / (2.0 * p)) + t <= eps && t6.sqrt() <= eps
}

#[test]
fn gaussian_tail_radius_is_the_first_admissible_rung() {
    for (eps, p) in [(1e-3, 1.0), (1e-3, 2.0), (1e-2, 2.0), (1e-6, 1.0)] {
        let r = tail_radius_for(&RadialProfile::unit_gaussian(), eps, p, 100.0).unwrap();
        assert!(tail_conditions_hold(r, eps, p), "eps {eps}, p {p}: R = {r}");
        assert!(!tail_conditions_hold(r / TAIL_LADDER_RATIO, eps, p));
        let rungs = (r.ln() / TAIL_LADDER_RATIO.ln()).round();
        assert!((TAIL_LADDER_RATIO.powf(rungs) - r).abs() < 1e-9);
    }
}

#[test]
fn tail_radius_edge_cases() {
    assert_eq!(
        tail_radius_for(&RadialProfile::unit_disk(), 1e-9, 2.0, 10.0).unwrap(),
        1.0
    );
    let small = RadialProfile::SharpPatch {
        radius: 0.3,
        amplitude: 2.0,
    };
    assert_eq!(tail_radius_for(&small, 1e-3, 1.0, 10.0).unwrap(), 0.3);
    assert_eq!(
        tail_radius_for(&RadialProfile::unit_gaussian(), 1e6, 2.0, 10.0).unwrap(),
        1.0
    );
    assert!(matches!(
        tail_radius_for(&RadialProfile::unit_gaussian(), 1e-3, 2.0, 4.8),
        Err(Error::TailRadius { .. })
    ));
}
