//! Base profiles and the perturbation families applied to them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{tail_radius_for, PerturbationSize, ProfileParams};
use crate::error::{Error, Result};
use crate::field::{sample_profile, GridSpec, RadialProfile, ScalarField, DENORMAL_FLOOR};

/// Relative edge value above which a profile is considered to overflow the domain.
pub const OVERFLOW_RATIO: f64 = 1e-8;

/// Radius of the safe zone as a fraction of `L`.
pub const SAFE_ZONE: f64 = 0.8;

/// Largest mass fraction allowed outside the safe zone.
pub const SAFE_ZONE_LIMIT: f64 = 1e-4;

/// Samples `profile` and measures the parameters entering the bounds.
///
/// `R` is the support radius when the profile is compact and otherwise the
/// tail radius at tolerance `epsilon` for exponent `p`. All quantities except
/// `R` are measured on the grid.
pub fn make_profile(
    profile: &RadialProfile,
    spec: &GridSpec,
    epsilon: f64,
    p: f64,
) -> Result<(ScalarField, ProfileParams)> {
    profile.validate()?;
    let peak = profile.peak();
    let edge_value = profile.eval(0.9 * spec.half_width());
    if edge_value > OVERFLOW_RATIO * peak {
        return Err(Error::SupportOverflow { edge_value, peak });
    }
    let radius = tail_radius_for(profile, epsilon, p, SAFE_ZONE * spec.half_width())?;
    let field = sample_profile(profile, spec);
    let params = ProfileParams {
        m: field.sup_norm(),
        alpha: field.lp_norm(1.0)?,
        radius,
        tail_impulse: field.tail_impulse(radius),
        sixth_moment: field.higher_moment(6)?,
    };
    Ok((field, params))
}

/// A perturbation of a radial profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationSpec {
    Identity,
    /// `ζ(x - shift)`.
    Translate {
        shift: (f64, f64),
    },
    /// `f(r / (1 + a cos(m(θ - φ))))`: a level-set wobble of mode `m`.
    BoundaryWobble {
        mode: u32,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Sum of wobbles of modes `2..=modes` with seeded random amplitudes in
    /// `[0, amplitude / (modes - 1)]` and random phases.
    RandomWobble {
        modes: u32,
        amplitude: f64,
    },
    /// `ζ + height · 1_{B_radius(center)}`, optionally with a smooth edge of
    /// the given width.
    AdditiveBump {
        center: (f64, f64),
        radius: f64,
        height: f64,
        #[serde(default)]
        ramp: Option<f64>,
    },
    /// `factor · ζ`.
    AmplitudeScale {
        factor: f64,
    },
}

/// Perturbed initial data together with its measured size.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbed {
    pub omega0: ScalarField,
    /// One entry per requested exponent.
    pub sizes: Vec<PerturbationSize>,
    /// Mass removed by clipping negative values.
    pub clipped_mass: f64,
}

fn wobble_field(
    profile: &RadialProfile,
    spec: &GridSpec,
    distortion: impl Fn(f64) -> f64,
) -> ScalarField {
    ScalarField::from_fn(*spec, |x, y| {
        let r = (x * x + y * y).sqrt();
        profile.eval(r / distortion(y.atan2(x)))
    })
}

fn check_wobble_amplitude(total: f64) -> Result<()> {
    if !(0.0..1.0).contains(&total) {
        return Err(Error::InvalidArgument(format!(
            "wobble amplitude {total} must lie in [0, 1)"
        )));
    }
    Ok(())
}

/// Applies `spec` to the profile `zeta` (sampled as `zeta_field`), clips
/// negative values, and measures `‖ω₀ − ζ‖₁`, `J(|ω₀ − ζ|)` and
/// `‖ω₀ − ζ‖_p` for every `p` in `p_list`.
pub fn perturb(
    profile: &RadialProfile,
    zeta_field: &ScalarField,
    spec: &PerturbationSpec,
    p_list: &[f64],
    seed: u64,
) -> Result<Perturbed> {
    let grid = zeta_field.spec();
    let raw = match spec {
        PerturbationSpec::Identity => zeta_field.clone(),
        PerturbationSpec::Translate { shift } => ScalarField::from_fn(*grid, |x, y| {
            let (dx, dy) = (x - shift.0, y - shift.1);
            profile.eval((dx * dx + dy * dy).sqrt())
        }),
        PerturbationSpec::BoundaryWobble {
            mode,
            amplitude,
            phase,
        } => {
            check_wobble_amplitude(amplitude.abs())?;
            let m = f64::from(*mode);
            wobble_field(profile, grid, |th| {
                1.0 + amplitude * (m * (th - phase)).cos()
            })
        }
        PerturbationSpec::RandomWobble { modes, amplitude } => {
            if *modes < 2 {
                return Err(Error::InvalidArgument(
                    "random wobble needs modes >= 2".into(),
                ));
            }
            check_wobble_amplitude(*amplitude)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let per_mode = amplitude / f64::from(modes - 1);
            let terms: Vec<(f64, f64, f64)> = (2..=*modes)
                .map(|m| {
                    (
                        f64::from(m),
                        rng.random_range(0.0..=per_mode),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect();
            wobble_field(profile, grid, |th| {
                1.0 + terms
                    .iter()
                    .map(|&(m, a, ph)| a * (m * th - ph).cos())
                    .sum::<f64>()
            })
        }
        PerturbationSpec::AdditiveBump {
            center,
            radius,
            height,
            ramp,
        } => {
            if radius.is_nan() || *radius <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "bump radius {radius} must be positive"
                )));
            }
            let bump = match ramp {
                None => RadialProfile::SharpPatch {
                    radius: *radius,
                    amplitude: 1.0,
                },
                Some(width) => RadialProfile::MollifiedPatch {
                    radius: *radius,
                    amplitude: 1.0,
                    width: *width,
                },
            };
            bump.validate()?;
            let mut values = zeta_field.values().to_vec();
            for (v, (x, y)) in values.iter_mut().zip(grid.centers()) {
                let (dx, dy) = (x - center.0, y - center.1);
                *v += height * bump.eval((dx * dx + dy * dy).sqrt());
            }
            ScalarField::from_values(*grid, values)?
        }
        PerturbationSpec::AmplitudeScale { factor } => zeta_field.scale(*factor),
    };

    let clipped_mass = raw
        .values()
        .iter()
        .filter(|v| **v < 0.0)
        .fold(0.0, |acc, v| acc - v)
        * grid.cell_area();
    let mut omega0 = raw.map(|v| if v < DENORMAL_FLOOR { 0.0 } else { v });
    omega0.flush_denormals();

    let fraction = omega0.mass_fraction_outside(SAFE_ZONE * grid.half_width());
    if fraction > SAFE_ZONE_LIMIT {
        return Err(Error::OutsideSafeZone {
            fraction,
            limit: SAFE_ZONE_LIMIT,
        });
    }
    let sizes = perturbation_sizes(&omega0, zeta_field, p_list)?;
    Ok(Perturbed {
        omega0,
        sizes,
        clipped_mass,
    })
}

/// Measured `‖ω₀ − ζ‖₁`, `J(|ω₀ − ζ|)` and `‖ω₀ − ζ‖_p` for each `p`.
pub fn perturbation_sizes(
    omega0: &ScalarField,
    zeta: &ScalarField,
    p_list: &[f64],
) -> Result<Vec<PerturbationSize>> {
    let diff = omega0.sub(zeta)?;
    let eps1 = diff.lp_norm(1.0)?;
    let eps_j = diff.abs().angular_impulse();
    p_list
        .iter()
        .map(|&p| {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(Error::InvalidExponent(p));
            }
            Ok(PerturbationSize {
                p,
                eps1,
                eps_j,
                eps_p: diff.lp_norm(p)?,
            })
        })
        .collect()
}
