//! Seeded random nonnegative fields for property checks.
//!
//! All generated mass lies well inside the domain (within `0.5 L`), so the
//! boundary-mass monitor stays at zero.

use std::f64::consts::PI;

use rand::Rng;

use crate::field::{GridSpec, ScalarField};

/// Fraction of `L` inside which random features are placed.
const FEATURE_ZONE: f64 = 0.5;

fn random_center<R: Rng + ?Sized>(rng: &mut R, reach: f64) -> (f64, f64) {
    let r = reach * rng.random::<f64>().sqrt();
    let th = rng.random_range(0.0..2.0 * PI);
    (r * th.cos(), r * th.sin())
}

fn gaussian_bumps<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> ScalarField {
    let zone = FEATURE_ZONE * spec.half_width();
    let bumps: Vec<((f64, f64), f64, f64)> = (0..rng.random_range(1..=6))
        .map(|_| {
            let s = rng.random_range(0.04..0.2) * zone;
            (
                random_center(rng, zone - 5.0 * s),
                s,
                rng.random_range(0.1..3.0),
            )
        })
        .collect();
    ScalarField::from_fn(spec, |x, y| {
        bumps
            .iter()
            .map(|&((cx, cy), s, a)| {
                let d2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (s * s);
                a * (-d2).exp()
            })
            .sum()
    })
    .map(|v| if v < 1e-30 { 0.0 } else { v })
}

fn stacked_disks<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> ScalarField {
    let zone = FEATURE_ZONE * spec.half_width();
    let mut f = ScalarField::zeros(spec);
    for _ in 0..rng.random_range(1..=5) {
        let r = rng.random_range(0.05..0.4) * zone;
        let c = random_center(rng, zone - r);
        let a = rng.random_range(0.1..2.0);
        f = f
            .add(&ScalarField::disk_indicator(spec, c, r).scale(a))
            .expect("same grid");
    }
    f
}

fn block_noise<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> ScalarField {
    let zone = FEATURE_ZONE * spec.half_width();
    let blocks = rng.random_range(2..=12usize);
    let side = 2.0 * zone / blocks as f64;
    let heights: Vec<f64> = (0..blocks * blocks)
        .map(|_| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        })
        .collect();
    let quantize = rng.random_bool(0.5);
    ScalarField::from_fn(spec, |x, y| {
        if x.abs() >= zone || y.abs() >= zone {
            return 0.0;
        }
        let bi = (((x + zone) / side) as usize).min(blocks - 1);
        let bj = (((y + zone) / side) as usize).min(blocks - 1);
        let v = heights[bj * blocks + bi];
        if quantize {
            (v * 4.0).round() / 4.0
        } else {
            v
        }
    })
}

fn cell_noise<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> ScalarField {
    let zone = rng.random_range(0.1..FEATURE_ZONE) * spec.half_width();
    let density = rng.random_range(0.05..1.0);
    let mut f = ScalarField::zeros(spec);
    let n = spec.n();
    for j in 0..n {
        for i in 0..n {
            let (x, y) = (spec.center(i), spec.center(j));
            if x * x + y * y < zone * zone && rng.random_bool(density) {
                f.values_mut()[spec.index(i, j)] = rng.random_range(0.0..1.0);
            }
        }
    }
    f
}

/// A random nonnegative field drawn from a mixture of bump sums, stacked
/// disks, blocky noise and cell-level noise.
pub fn random_field<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> ScalarField {
    match rng.random_range(0..4u32) {
        0 => gaussian_bumps(rng, spec),
        1 => stacked_disks(rng, spec),
        2 => block_noise(rng, spec),
        _ => cell_noise(rng, spec),
    }
}

/// A random pair `(g, h)`: either independent draws or `h` a perturbation of `g`.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> (ScalarField, ScalarField) {
    let g = random_field(rng, spec);
    let h = if rng.random_bool(0.5) {
        random_field(rng, spec)
    } else {
        let extra = random_field(rng, spec).scale(rng.random_range(0.01..0.5));
        g.add(&extra).expect("same grid")
    };
    (g, h)
}

/// A random `ξ` with `0 <= ξ <= 1` and `‖ξ‖₁ = π`, or `None` when the draw
/// has too little mass to be rescaled down to `π`.
pub fn random_unit_mass<R: Rng + ?Sized>(rng: &mut R, spec: GridSpec) -> Option<ScalarField> {
    let raw = match rng.random_range(0..3u32) {
        // Near-extremal: a slightly enlarged, slightly shifted disk with noise.
        0 => {
            let r = rng.random_range(1.0..1.3);
            let c = random_center(rng, 0.3);
            let disk = ScalarField::disk_indicator(spec, c, r);
            let noise = rng.random_range(0.0..0.3);
            let mut values = disk.into_values();
            for v in values.iter_mut().filter(|v| **v > 0.0) {
                *v = 1.0 - noise * rng.random::<f64>();
            }
            ScalarField::from_values(spec, values).expect("finite")
        }
        1 => {
            let f = random_field(rng, spec);
            let peak = f.sup_norm();
            if peak == 0.0 {
                return None;
            }
            f.scale(1.0 / peak)
        }
        _ => stacked_disks(rng, spec).map(|v| v.min(1.0)),
    };
    let mass = raw.lp_norm(1.0).expect("p = 1");
    (mass >= PI).then(|| raw.scale(PI / mass))
}
