use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField, DENORMAL_FLOOR};
use crate::error::{Error, Result};

/// A nonnegative, radially non-increasing profile `ζ(x) = f(|x|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadialProfile {
    /// `amplitude · 1_{r < radius}`.
    SharpPatch { radius: f64, amplitude: f64 },
    /// Patch whose jump is replaced by `amplitude/2 · (1 - tanh((r - radius)/width))`,
    /// evaluated as `amplitude / (1 + exp(2 (r - radius)/width))` to keep the tail.
    MollifiedPatch {
        radius: f64,
        amplitude: f64,
        width: f64,
    },
    /// `amplitude · exp(-r²/scale²)`.
    Gaussian { amplitude: f64, scale: f64 },
    /// Linear interpolation between `(r, value)` knots, constant outside.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl RadialProfile {
    pub fn unit_disk() -> Self {
        RadialProfile::SharpPatch {
            radius: 1.0,
            amplitude: 1.0,
        }
    }

    pub fn unit_gaussian() -> Self {
        RadialProfile::Gaussian {
            amplitude: 1.0,
            scale: 1.0,
        }
    }

    /// `max(0, 1 - r)`.
    pub fn unit_cone() -> Self {
        RadialProfile::PiecewiseLinear {
            knots: vec![(0.0, 1.0), (1.0, 0.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        match self {
            RadialProfile::SharpPatch { radius, amplitude } => {
                if !(*radius > 0.0 && radius.is_finite())
                    || !(*amplitude >= 0.0 && amplitude.is_finite())
                {
                    return bad(format!(
                        "sharp patch radius {radius}, amplitude {amplitude}"
                    ));
                }
            }
            RadialProfile::MollifiedPatch {
                radius,
                amplitude,
                width,
            } => {
                if !(*radius > 0.0 && radius.is_finite())
                    || !(*amplitude >= 0.0 && amplitude.is_finite())
                    || !(*width > 0.0 && width.is_finite())
                {
                    return bad(format!(
                        "mollified patch radius {radius}, amplitude {amplitude}, width {width}"
                    ));
                }
            }
            RadialProfile::Gaussian { amplitude, scale } => {
                if !(*amplitude >= 0.0 && amplitude.is_finite())
                    || !(*scale > 0.0 && scale.is_finite())
                {
                    return bad(format!("gaussian amplitude {amplitude}, scale {scale}"));
                }
            }
            RadialProfile::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return bad("piecewise-linear profile needs at least one knot".into());
                }
                if knots
                    .iter()
                    .any(|(r, v)| !(r.is_finite() && v.is_finite() && *r >= 0.0 && *v >= 0.0))
                {
                    return bad("knots must be finite and nonnegative".into());
                }
                for w in knots.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return bad("knot radii must be strictly increasing".into());
                    }
                    if w[1].1 > w[0].1 {
                        return bad("knot values must be non-increasing".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Profile value at radius `r >= 0`.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::SharpPatch { radius, amplitude } => {
                if r < *radius {
                    *amplitude
                } else {
                    0.0
                }
            }
            RadialProfile::MollifiedPatch {
                radius,
                amplitude,
                width,
            } => amplitude / (1.0 + (2.0 * (r - radius) / width).exp()),
            RadialProfile::Gaussian { amplitude, scale } => {
                let s = r / scale;
                amplitude * (-s * s).exp()
            }
            RadialProfile::PiecewiseLinear { knots } => {
                let first = knots[0];
                if r <= first.0 {
                    return first.1;
                }
                for w in knots.windows(2) {
                    let ((r0, v0), (r1, v1)) = (w[0], w[1]);
                    if r <= r1 {
                        return v0 + (v1 - v0) * (r - r0) / (r1 - r0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    /// Peak value `f(0) = ‖ζ‖_∞`.
    pub fn peak(&self) -> f64 {
        self.eval(0.0)
    }

    /// Radius of the support when it is compact.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            RadialProfile::SharpPatch { radius, .. } => Some(*radius),
            RadialProfile::PiecewiseLinear { knots } => {
                let last = knots[knots.len() - 1];
                if last.1 != 0.0 {
                    return None;
                }
                // First knot from which the profile vanishes identically.
                let idx = knots.iter().position(|&(_, v)| v == 0.0).unwrap();
                Some(if idx == 0 { 0.0 } else { knots[idx].0 })
            }
            _ => None,
        }
    }

    /// Radius beyond which the profile is negligible (below `1e-300` of its peak).
    pub fn negligible_radius(&self) -> f64 {
        match self {
            RadialProfile::MollifiedPatch { radius, width, .. } => radius + 350.0 * width,
            RadialProfile::Gaussian { scale, .. } => 27.0 * scale,
            _ => self.support_radius().unwrap_or(0.0),
        }
    }

    /// Radii where the profile is not smooth, for piecewise quadrature.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::SharpPatch { radius, .. } => vec![*radius],
            RadialProfile::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
            _ => Vec::new(),
        }
    }

    /// Checks `f(r₁) >= f(r₂)` for `r₁ <= r₂` on `points` equispaced radii in
    /// `[0, r_max]`, together with nonnegativity.
    pub fn monotonicity_audit(&self, r_max: f64, points: usize) -> bool {
        let mut prev = f64::INFINITY;
        (0..points).all(|k| {
            let r = r_max * k as f64 / (points - 1).max(1) as f64;
            let v = self.eval(r);
            let ok = v >= 0.0 && v <= prev;
            prev = v;
            ok
        })
    }
}

/// Samples a radial profile at the cell centers of `spec`.
///
/// Radii are taken from the exact integer radius key, so cells at equal
/// distance from the origin receive identical values. Values below `1e-30`
/// are flushed to zero.
pub fn sample_profile(profile: &RadialProfile, spec: &GridSpec) -> ScalarField {
    let edge = profile.eval(0.9 * spec.half_width());
    let peak = profile.peak();
    if edge > 1e-8 * peak {
        log::warn!("profile support overflows the domain: f(0.9 L) = {edge:.3e}, peak {peak:.3e}");
    }
    let n = spec.n();
    let mut values = Vec::with_capacity(spec.len());
    for j in 0..n {
        for i in 0..n {
            let v = profile.eval(spec.radius_sq(i, j).sqrt());
            values.push(if v < DENORMAL_FLOOR { 0.0 } else { v });
        }
    }
    ScalarField::from_values(*spec, values).expect("profile values are finite")
}
