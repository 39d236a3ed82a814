//! Explicit stability bounds.
//!
//! The constants are obtained by composing the elementary estimates of the
//! stability argument term by term, so every bound here is sufficient but not
//! sharp. With `δ₁ = ‖ω₀ − ζ‖₁`, `δ_J = J(|ω₀ − ζ|)`, `δ_p = ‖ω₀ − ζ‖_p`:
//!
//! ```text
//! L1  = 2δ₁ + 2√(Mα)√δ₁ + √(4π(M+1)) · √(2δ_J + 2R²δ₁ + 2T(R) + δ₁²/π + αδ₁/π)
//! J   = 2R²·L1 + δ_J + 2T(R)
//! Lp  = ((M+1)^p·L1 + 2^{3p}M^p·δ₁ + 2^{2p}δ_p^p)^{1/p}
//! Jp  = Lp + J
//! ```
//!
//! where `T(R) = ∫_{|x|>R} |x|² ζ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::RadialProfile;

/// Largest exponent accepted by [`bound_lp`]; `2^{3p}` overflows soon after.
pub const MAX_BOUND_EXPONENT: f64 = 16.0;

/// Ratio of consecutive radii in the tail-radius search.
pub const TAIL_LADDER_RATIO: f64 = 1.25;

/// Quantities of the base profile entering the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// `‖ζ‖_∞`.
    pub m: f64,
    /// `‖ζ‖₁`.
    pub alpha: f64,
    /// Truncation radius.
    pub radius: f64,
    /// `T(R) = ∫_{|x|>R} |x|² ζ`.
    pub tail_impulse: f64,
    /// `∫ |x|⁶ ζ`.
    pub sixth_moment: f64,
}

impl ProfileParams {
    /// Parameters of the unit disk indicator with `R = 1`.
    pub fn unit_disk() -> Self {
        Self {
            m: 1.0,
            alpha: PI,
            radius: 1.0,
            tail_impulse: 0.0,
            sixth_moment: PI / 4.0,
        }
    }

    /// Exact parameters of a radial profile, with tails evaluated by radial
    /// quadrature at `radius`.
    pub fn of_profile(profile: &RadialProfile, radius: f64) -> Result<Self> {
        profile.validate()?;
        Ok(Self {
            m: profile.peak(),
            alpha: radial_moment(profile, 0, 0.0),
            radius,
            tail_impulse: radial_moment(profile, 2, radius),
            sixth_moment: radial_moment(profile, 6, 0.0),
        })
    }
}

/// Size of an initial perturbation `ω₀ − ζ` measured in the norms of the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSize {
    pub p: f64,
    /// `‖ω₀ − ζ‖₁`.
    pub eps1: f64,
    /// `J(|ω₀ − ζ|)`.
    pub eps_j: f64,
    /// `‖ω₀ − ζ‖_p`.
    pub eps_p: f64,
}

impl PerturbationSize {
    pub fn zero(p: f64) -> Self {
        Self {
            p,
            eps1: 0.0,
            eps_j: 0.0,
            eps_p: 0.0,
        }
    }

    /// Size known only through `‖·‖_p` and `J`; the L¹ size is majorized by
    /// `‖g‖₁ <= π‖g‖_p + J(|g|)`.
    pub fn from_jp(p: f64, eps_p: f64, eps_j: f64) -> Self {
        Self {
            p,
            eps1: l1_from_jp(eps_p, eps_j),
            eps_j,
            eps_p,
        }
    }

    /// `‖ω₀ − ζ‖_{J_p} = δ_p + δ_J`.
    pub fn jp(&self) -> f64 {
        self.eps_p + self.eps_j
    }
}

/// `π‖g‖_p + J(|g|)`, an upper bound for `‖g‖₁` valid for every `p >= 1`.
pub fn l1_from_jp(lp: f64, impulse: f64) -> f64 {
    PI * lp + impulse
}

/// `π‖g‖_{J₂}`, an upper bound for `‖g‖₁`.
pub fn l1_from_j2(j2: f64) -> f64 {
    PI * j2
}

/// Uniform-in-time bound on `‖ω(t) − ζ‖₁`.
pub fn bound_l1(pp: &ProfileParams, sz: &PerturbationSize) -> f64 {
    let ProfileParams {
        m,
        alpha,
        radius,
        tail_impulse,
        ..
    } = *pp;
    let e1 = sz.eps1;
    let inner = 2.0 * sz.eps_j
        + 2.0 * radius * radius * e1
        + 2.0 * tail_impulse
        + e1 * e1 / PI
        + alpha * e1 / PI;
    2.0 * e1 + 2.0 * (m * alpha).sqrt() * e1.sqrt() + (4.0 * PI * (m + 1.0)).sqrt() * inner.sqrt()
}

/// Uniform-in-time bound on `J(|ω(t) − ζ|)` given an L¹ bound.
pub fn bound_j(pp: &ProfileParams, sz: &PerturbationSize, l1_bound: f64) -> f64 {
    2.0 * pp.radius * pp.radius * l1_bound + sz.eps_j + 2.0 * pp.tail_impulse
}

/// Uniform-in-time bound on `‖ω(t) − ζ‖_p` given an L¹ bound.
pub fn bound_lp(pp: &ProfileParams, sz: &PerturbationSize, l1_bound: f64) -> Result<f64> {
    let p = sz.p;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if p > MAX_BOUND_EXPONENT {
        return Err(Error::ExponentTooLarge(p));
    }
    let m = pp.m;
    let total = (m + 1.0).powf(p) * l1_bound
        + 2f64.powf(3.0 * p) * m.powf(p) * sz.eps1
        + 2f64.powf(2.0 * p) * sz.eps_p.powf(p);
    Ok(total.powf(1.0 / p))
}

/// All bounds for one perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub p: f64,
    pub l1: f64,
    pub j: f64,
    pub lp: f64,
    pub jp_total: f64,
}

pub fn evaluate_bounds(pp: &ProfileParams, sz: &PerturbationSize) -> Result<BoundSet> {
    let l1 = bound_l1(pp, sz);
    let j = bound_j(pp, sz, l1);
    let lp = bound_lp(pp, sz, l1)?;
    Ok(BoundSet {
        p: sz.p,
        l1,
        j,
        lp,
        jp_total: lp + j,
    })
}

/// Uniform-in-time bound on `‖ω(t) − ζ‖_{J_p}`.
pub fn bound_jp_total(pp: &ProfileParams, sz: &PerturbationSize) -> Result<f64> {
    evaluate_bounds(pp, sz).map(|b| b.jp_total)
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre(a: f64, b: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    half * GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&x, w)| w * (f(mid - half * x) + f(mid + half * x)))
        .sum::<f64>()
}

/// `∫_{|x|>r_min} |x|^k ζ(x) dx = 2π ∫_{r_min}^∞ r^{k+1} f(r) dr` by composite
/// Gauss-Legendre quadrature split at the profile's breakpoints.
pub fn radial_moment(profile: &RadialProfile, k: u32, r_min: f64) -> f64 {
    let r_max = profile.negligible_radius();
    if r_min >= r_max {
        return 0.0;
    }
    let mut cuts: Vec<f64> = vec![r_min, r_max];
    cuts.extend(
        profile
            .breakpoints()
            .into_iter()
            .filter(|&b| b > r_min && b < r_max),
    );
    if let RadialProfile::MollifiedPatch { radius, .. } = profile {
        if *radius > r_min && *radius < r_max {
            cuts.push(*radius);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let scale = match profile {
        RadialProfile::MollifiedPatch { width, .. } => *width,
        RadialProfile::Gaussian { scale, .. } => scale / 8.0,
        _ => f64::INFINITY,
    };
    let integrand = |r: f64| r.powi(k as i32 + 1) * profile.eval(r);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let panels = ((b - a) / scale).ceil().clamp(1.0, 20_000.0) as usize;
        let step = (b - a) / panels as f64;
        for q in 0..panels {
            let lo = a + q as f64 * step;
            let hi = if q + 1 == panels { b } else { lo + step };
            total += gauss_legendre(lo, hi, &integrand);
        }
    }
    2.0 * PI * total
}

/// Tails `(T(R), T₆(R))` with `T₆(R) = ∫_{|x|>R} |x|⁶ ζ`.
pub fn tails(profile: &RadialProfile, radius: f64) -> (f64, f64) {
    (
        radial_moment(profile, 2, radius),
        radial_moment(profile, 6, radius),
    )
}

/// Smallest radius `R` such that
/// `T(R)^{1/(2p)} + T(R) <= ε` and `T₆(R)^{1/2} <= ε`.
///
/// Compactly supported profiles return their support radius. Otherwise `R`
/// is searched over `1, 1.25, 1.25², ...` up to `max_radius`.
pub fn tail_radius_for(
    profile: &RadialProfile,
    epsilon: f64,
    p: f64,
    max_radius: f64,
) -> Result<f64> {
    profile.validate()?;
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tail tolerance {epsilon} must be positive"
        )));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    if let Some(r0) = profile.support_radius() {
        if r0 <= max_radius {
            return Ok(r0);
        }
    }
    let accept = |r: f64| {
        let (t, t6) = tails(profile, r);
        t.powf(1.0 / (2.0 * p)) + t <= epsilon && t6.sqrt() <= epsilon
    };
    let mut r = 1.0;
    while r <= max_radius {
        if accept(r) {
            return Ok(r);
        }
        r *= TAIL_LADDER_RATIO;
    }
    let (tail_impulse, sixth_tail) = tails(profile, max_radius);
    Err(Error::TailRadius {
        epsilon,
        max_radius,
        tail_impulse,
        sixth_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn unperturbed_bounds_vanish() {
        let pp = ProfileParams::unit_disk();
        for p in [1.0, 2.0, 3.5] {
            let b = evaluate_bounds(&pp, &PerturbationSize::zero(p)).unwrap();
            assert_eq!((b.l1, b.j, b.lp, b.jp_total), (0.0, 0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn tail_only_term() {
        let pp = ProfileParams {
            tail_impulse: 0.3,
            ..ProfileParams::unit_disk()
        };
        let l1 = bound_l1(&pp, &PerturbationSize::zero(2.0));
        assert!(close(l1, (8.0 * PI * 2.0 * 0.3f64).sqrt(), 1e-15));
    }

    #[test]
    fn p_one_reduces_to_linear_form() {
        let pp = ProfileParams {
            m: 2.5,
            ..ProfileParams::unit_disk()
        };
        let sz = PerturbationSize {
            p: 1.0,
            eps1: 0.03,
            eps_j: 0.02,
            eps_p: 0.03,
        };
        let l1 = 0.7;
        let expect = 3.5 * l1 + 8.0 * 2.5 * 0.03 + 4.0 * 0.03;
        assert!(close(bound_lp(&pp, &sz, l1).unwrap(), expect, 1e-14));
    }

    #[test]
    fn r_doubling_quadruples_impulse_term() {
        let pp = ProfileParams::unit_disk();
        let sz = PerturbationSize::zero(2.0);
        let far = ProfileParams { radius: 2.0, ..pp };
        assert!(close(
            bound_j(&far, &sz, 1.0),
            4.0 * bound_j(&pp, &sz, 1.0),
            1e-15
        ));
    }

    #[test]
    fn exponent_guard() {
        let pp = ProfileParams::unit_disk();
        assert!(matches!(
            bound_lp(&pp, &PerturbationSize::zero(17.0), 1.0),
            Err(Error::ExponentTooLarge(_))
        ));
        assert!(bound_lp(&pp, &PerturbationSize::zero(0.5), 1.0).is_err());
    }

    #[test]
    fn from_jp_uses_conversion() {
        let sz = PerturbationSize::from_jp(2.0, 0.01, 0.01);
        assert!(close(sz.eps1, 0.01 * PI + 0.01, 1e-15));
        assert!(close(sz.jp(), 0.02, 1e-15));
    }

    #[test]
    fn radial_moments_match_closed_forms() {
        let g = RadialProfile::unit_gaussian();
        assert!(close(radial_moment(&g, 0, 0.0), PI, 1e-13));
        assert!(close(radial_moment(&g, 2, 0.0), PI, 1e-13));
        assert!(close(radial_moment(&g, 6, 0.0), 6.0 * PI, 1e-13));
        let cone = RadialProfile::unit_cone();
        // 2π ∫₀¹ r³(1 - r) dr = π/10.
        assert!(close(radial_moment(&cone, 2, 0.0), PI / 10.0, 1e-14));
        let disk = RadialProfile::unit_disk();
        assert!(close(radial_moment(&disk, 6, 0.0), PI / 4.0, 1e-14));
        assert_eq!(radial_moment(&disk, 2, 1.0), 0.0);
        let params = ProfileParams::of_profile(&disk, 1.0).unwrap();
        assert!(close(params.alpha, PI, 1e-14));
        assert!(close(params.sixth_moment, PI / 4.0, 1e-14));
    }

    #[test]
    fn mollified_patch_moments() {
        let w = 0.05;
        let p = RadialProfile::MollifiedPatch {
            radius: 1.0,
            amplitude: 1.0,
            width: w,
        };
        // Fermi-Dirac integral: 2π∫ r/(1+e^{2(r-1)/w}) dr = π(1 + π²w²/12) + O(e^{-2/w}).
        let expect = PI * (1.0 + PI * PI * w * w / 12.0);
        assert!(close(radial_moment(&p, 0, 0.0), expect, 1e-12));
    }

    #[test]
    fn tail_radius_compact_and_huge() {
        assert_eq!(
            tail_radius_for(&RadialProfile::unit_cone(), 1e-9, 2.0, 3.0).unwrap(),
            1.0
        );
        assert_eq!(
            tail_radius_for(&RadialProfile::unit_gaussian(), 1e6, 2.0, 4.0).unwrap(),
            1.0
        );
        let err = tail_radius_for(&RadialProfile::unit_gaussian(), 1e-12, 2.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::TailRadius { .. }));
    }
}
