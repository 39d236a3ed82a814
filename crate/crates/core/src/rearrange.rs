//! Distribution functions and the symmetric-decreasing rearrangement on a grid.
//!
//! The rearrangement is a discrete measure-preserving transport: cell values
//! are sorted in decreasing order and assigned to cells sorted by increasing
//! distance from the origin. Ties in distance are broken by polar angle and
//! then by linear index, so the result is deterministic and the cell counts of
//! every superlevel set are preserved exactly.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{compensated_sum, disk_impulse, GridSpec, ScalarField};

/// Coefficient of the discretization slack `C · h · (‖f‖_∞ + J(f))`.
pub const SLACK_COEFFICIENT: f64 = 32.0;

/// Inequality verdicts are refused when the boundary frame carries more than
/// this fraction of the total mass.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-4;

/// Superlevel-set measures `α ↦ |{f > α}|` of a nonnegative field.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFunction {
    /// Distinct field values, strictly decreasing.
    pub thresholds: Vec<f64>,
    /// `measures[k] = |{f > thresholds[k]}|`, non-decreasing in `k`.
    pub measures: Vec<f64>,
    sorted: Vec<f64>,
    cell_area: f64,
}

impl DistributionFunction {
    /// `|{f > α}|` for an arbitrary threshold.
    pub fn measure_above(&self, alpha: f64) -> f64 {
        self.count_above(alpha) as f64 * self.cell_area
    }

    /// Number of cells with value strictly above `alpha`.
    pub fn count_above(&self, alpha: f64) -> usize {
        self.sorted.partition_point(|&v| v > alpha)
    }

    /// True when every superlevel set is empty.
    pub fn is_empty(&self) -> bool {
        self.measures.iter().all(|&m| m == 0.0)
    }

    /// Two-column CSV `alpha,measure`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "measure"])?;
        for (a, m) in self.thresholds.iter().zip(&self.measures) {
            out.write_record([a.to_string(), m.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn sorted_descending(values: impl IntoParallelIterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.into_par_iter().collect();
    v.par_sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// Distribution function of `|f|`.
pub fn distribution(f: &ScalarField) -> DistributionFunction {
    let sorted = sorted_descending(f.values().par_iter().map(|v| v.abs()));
    let cell_area = f.spec().cell_area();
    let mut thresholds = Vec::new();
    let mut measures = Vec::new();
    for (k, &v) in sorted.iter().enumerate() {
        if k == 0 || v != sorted[k - 1] {
            thresholds.push(v);
            measures.push(k as f64 * cell_area);
        }
    }
    DistributionFunction {
        thresholds,
        measures,
        sorted,
        cell_area,
    }
}

fn cell_order_cache() -> &'static Mutex<HashMap<usize, Arc<[u32]>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<[u32]>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Cells of an `n × n` grid ordered by distance of their centers from the
/// origin, then by polar angle in `(-π, π]`, then by linear index.
pub fn cell_order(spec: &GridSpec) -> Arc<[u32]> {
    let n = spec.n();
    if let Some(order) = cell_order_cache().lock().unwrap().get(&n) {
        return order.clone();
    }
    let mut keyed: Vec<(u64, f64, u32)> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let a = spec.doubled_offset(i) as f64;
            let b = spec.doubled_offset(j) as f64;
            (spec.radius_key(i, j), b.atan2(a), k as u32)
        })
        .collect();
    keyed.par_sort_unstable_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)));
    let order: Arc<[u32]> = keyed.into_iter().map(|t| t.2).collect();
    cell_order_cache().lock().unwrap().insert(n, order.clone());
    order
}

/// Reference cell order for `n = 16`, computed independently of
/// [`cell_order`]; whitespace-separated linear indices.
pub const CELL_ORDER_GOLDEN_16: &str = include_str!("../golden/cell_order_16.txt");

/// First position at which `order` departs from [`CELL_ORDER_GOLDEN_16`],
/// or `None` when the two agree.
pub fn golden_order_mismatch(order: &[u32]) -> Option<usize> {
    let golden: Vec<u32> = CELL_ORDER_GOLDEN_16
        .split_whitespace()
        .map(|t| t.parse().expect("golden file holds integers"))
        .collect();
    if let Some(k) = golden.iter().zip(order).position(|(a, b)| a != b) {
        return Some(k);
    }
    (golden.len() != order.len()).then(|| golden.len().min(order.len()))
}

/// Symmetric-decreasing rearrangement `f*` of `|f|`.
pub fn symmetric_rearrangement(f: &ScalarField) -> ScalarField {
    let spec = *f.spec();
    let order = cell_order(&spec);
    let sorted = sorted_descending(f.values().par_iter().map(|v| v.abs()));
    let mut out = vec![0.0; spec.len()];
    for (&cell, v) in order.iter().zip(sorted) {
        out[cell as usize] = v;
    }
    ScalarField::from_values(spec, out).expect("rearranged values are finite")
}

/// Cut-off at level `M + 1`: pointwise `min(f, M + 1)`.
pub fn cutoff(f: &ScalarField, m: f64) -> Result<ScalarField> {
    if !(m >= 0.0 && m.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cut-off level M = {m} must be >= 0"
        )));
    }
    let cap = m + 1.0;
    Ok(f.map(|v| v.min(cap)))
}

/// Discretization slack `32 h (‖f‖_∞ + J(f))` for inequality checks.
pub fn slack(f: &ScalarField) -> f64 {
    SLACK_COEFFICIENT * f.spec().h() * (f.sup_norm() + f.abs().angular_impulse())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    /// Too much mass near the truncation boundary to judge.
    Refused,
}

/// Outcome of a discretized inequality `lhs <= rhs` where `rhs` already
/// includes `slack`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub boundary_mass: f64,
    pub verdict: Verdict,
}

impl InequalityCheck {
    fn judge(lhs: f64, rhs: f64, slack: f64, boundary_mass: f64) -> Self {
        let verdict = if boundary_mass > BOUNDARY_MASS_LIMIT {
            Verdict::Refused
        } else if lhs <= rhs {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self {
            lhs,
            rhs,
            slack,
            boundary_mass,
            verdict,
        }
    }

    pub fn ok(&self) -> bool {
        self.verdict == Verdict::Holds
    }
}

/// `‖f - f*‖₁² <= 4π ‖f‖_∞ (J(f) - J(f*)) + slack`.
pub fn rearrangement_deficit_check(f: &ScalarField) -> InequalityCheck {
    let f = f.abs();
    let star = symmetric_rearrangement(&f);
    let l1 = f
        .sub(&star)
        .expect("same grid")
        .lp_norm(1.0)
        .expect("p = 1");
    let deficit = f.angular_impulse() - star.angular_impulse();
    let s = slack(&f);
    let rhs = 4.0 * PI * f.sup_norm() * deficit + s;
    InequalityCheck::judge(l1 * l1, rhs, s, f.boundary_mass_fraction())
}

/// `‖g* - h*‖₁ <= ‖g - h‖₁ + slack`.
pub fn nonexpansivity_check(g: &ScalarField, h: &ScalarField) -> Result<InequalityCheck> {
    let gs = symmetric_rearrangement(g);
    let hs = symmetric_rearrangement(h);
    let lhs = gs.sub(&hs)?.lp_norm(1.0)?;
    let s = slack(g).max(slack(h));
    let rhs = g.sub(h)?.lp_norm(1.0)? + s;
    let boundary = g.boundary_mass_fraction().max(h.boundary_mass_fraction());
    Ok(InequalityCheck::judge(lhs, rhs, s, boundary))
}

/// One annulus `{inner <= |x| < outer}` of height `amplitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
    pub amplitude: f64,
}

impl Annulus {
    pub fn l1_norm(&self) -> f64 {
        PI * self.amplitude * (self.outer * self.outer - self.inner * self.inner)
    }

    pub fn impulse(&self) -> f64 {
        self.amplitude * (disk_impulse(self.outer) - disk_impulse(self.inner))
    }
}

/// Radial simple function `Σ_k (k/n) 1_{s_{k+1} <= |x| < s_k}` built from the
/// level sets `{f > k/n} = B_{s_k}` of a radial non-increasing `f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusStack {
    pub levels: usize,
    /// `s_1 >= s_2 >= ... >= s_n`.
    pub radii: Vec<f64>,
    /// Annuli of positive area, in order of increasing amplitude.
    pub annuli: Vec<Annulus>,
}

impl AnnulusStack {
    pub fn is_empty(&self) -> bool {
        self.annuli.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.annuli.iter().map(Annulus::l1_norm).sum()
    }

    pub fn impulse(&self) -> f64 {
        self.annuli.iter().map(Annulus::impulse).sum()
    }

    /// Radius `r̄` of the disk with the same mass, `π r̄² = ‖g‖₁`.
    pub fn equal_mass_radius(&self) -> f64 {
        (self.l1_norm() / PI).sqrt()
    }

    /// Impulse after every annulus has been flattened to unit height with
    /// the same inner radius and mass.
    pub fn flattened_impulse(&self) -> f64 {
        self.annuli
            .iter()
            .map(|a| {
                let flat = flatten_annulus(a.inner, a.outer, a.amplitude).expect("ordered radii");
                disk_impulse(flat.radius) - disk_impulse(a.inner)
            })
            .sum()
    }
}

/// Level-set simple function of a radial non-increasing field with
/// `‖f‖_∞ <= 1`: `s_k = sqrt(|{f > k/n}| / π)` for `k = 1..=n`.
pub fn levelset_simple_function(f: &ScalarField, levels: usize) -> Result<AnnulusStack> {
    if levels == 0 {
        return Err(Error::InvalidArgument(
            "number of levels must be positive".into(),
        ));
    }
    let sup = f.sup_norm();
    if sup > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "‖f‖_∞ = {sup} exceeds 1; rescale first"
        )));
    }
    if f.min() < 0.0 {
        return Err(Error::InvalidArgument("field must be nonnegative".into()));
    }
    let dist = distribution(f);
    let star = symmetric_rearrangement(f);
    let deviation = f.sub(&star)?.lp_norm(1.0)?;
    let support_radius = (dist.measure_above(0.0) / PI).sqrt();
    let tolerance = 8.0 * f.spec().h() * sup * (2.0 * PI * support_radius).max(1.0);
    if deviation > tolerance {
        return Err(Error::NotRadial {
            deviation,
            tolerance,
        });
    }
    let radii: Vec<f64> = (1..=levels)
        .map(|k| (dist.measure_above(k as f64 / levels as f64) / PI).sqrt())
        .collect();
    let annuli = (1..levels)
        .filter_map(|k| {
            let (outer, inner) = (radii[k - 1], radii[k]);
            (outer > inner).then_some(Annulus {
                inner,
                outer,
                amplitude: k as f64 / levels as f64,
            })
        })
        .collect();
    Ok(AnnulusStack {
        levels,
        radii,
        annuli,
    })
}

/// Result of flattening an annulus of height `k/n` to unit height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlattenedAnnulus {
    /// Outer radius `c` of the unit-height annulus with the same inner radius
    /// and mass.
    pub radius: f64,
    /// `J(h) - J(h') = (π a / 2)(1 - a)(s_out² - s_in²)²` with `a = k/n`.
    pub deficit: f64,
}

/// `c = sqrt((1 - a) s_in² + a s_out²)` and the impulse deficit, analytically.
pub fn flatten_annulus(inner: f64, outer: f64, amplitude: f64) -> Result<FlattenedAnnulus> {
    if !(inner >= 0.0 && inner <= outer && outer.is_finite()) {
        return Err(Error::InvalidAnnulus { inner, outer });
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "annulus amplitude {amplitude} outside (0, 1]"
        )));
    }
    let (i2, o2) = (inner * inner, outer * outer);
    let radius = ((1.0 - amplitude) * i2 + amplitude * o2).sqrt();
    let width = o2 - i2;
    let deficit = 0.5 * PI * amplitude * (1.0 - amplitude) * width * width;
    Ok(FlattenedAnnulus { radius, deficit })
}

/// Sum of `|f|` restricted to the cells of `order[..count]`, scaled by `h²`;
/// used to compare superlevel sets in tests.
pub fn mass_of_closest_cells(f: &ScalarField, count: usize) -> f64 {
    let order = cell_order(f.spec());
    compensated_sum(order[..count].iter().map(|&c| f.values()[c as usize].abs()))
        * f.spec().cell_area()
}
