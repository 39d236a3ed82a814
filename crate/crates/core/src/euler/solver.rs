use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::Baselines;
use super::fft::Fft2;
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, DENORMAL_FLOOR};

/// Growth of `max |ω|` over `‖ω₀‖_∞` treated as a blow-up.
const BLOWUP_FACTOR: f64 = 10.0;

/// Order of the exponential filter `exp(-α (k/k_max)^36)`.
const FILTER_ORDER: i32 = 36;

/// `Σ' (m + i n)^{-4}` over the nonzero integer lattice.
const LATTICE_G4: f64 = 3.151_212_002_153_897_5;

/// `Σ' (m + i n)^{-8}` over the nonzero integer lattice.
const LATTICE_G8: f64 = 4.255_773_035_365_189_5;

/// Whole-plane correction of the periodic velocity.
///
/// With `ū = u - iv`, the periodic solution of a vorticity distribution
/// differs from the whole-plane one by the field of a uniform background
/// `-ω̄` and by the images `-(1/2πi) Σ_k G_{2k} ∫ ω(ζ) (z - ζ)^{2k-1} dζ`,
/// where `G_{2k}` are the lattice sums of the period `2L`. The background is
/// undone by a solid-body rotation about the centroid, and the `G₄` and `G₈`
/// image terms are subtracted using the complex moments of `ω`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FarFieldCorrection {
    /// `ω̄ / 2`.
    pub rotation_rate: f64,
    pub centroid: (f64, f64),
    /// Coefficients of `ū_images(z) = Σ_k c_k z^k` with `z` relative to the centroid.
    pub image_coeffs: [Complex64; 8],
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FarFieldCorrection {
    pub fn of(omega: &ScalarField) -> Self {
        let total = omega.quadrature();
        if total == 0.0 {
            return Self::default();
        }
        let spec = omega.spec();
        let l = spec.half_width();
        let (xc, yc) = omega.first_moments();
        let mut moments = [Complex64::default(); 8];
        let area = spec.cell_area();
        for (&w, (x, y)) in omega.values().iter().zip(spec.centers()) {
            if w == 0.0 {
                continue;
            }
            let z = Complex64::new(x - xc, y - yc);
            let mut zm = Complex64::new(w * area, 0.0);
            for q in moments.iter_mut() {
                *q += zm;
                zm *= z;
            }
        }
        let period = 2.0 * l;
        let lattice = [
            (4, LATTICE_G4 / period.powi(4)),
            (8, LATTICE_G8 / period.powi(8)),
        ];
        let mut coeffs = [Complex64::default(); 8];
        // (1/2πi) G_{2k} Σ_m C(2k-1, m) (-1)^m Q_m z^{2k-1-m}
        let prefactor = Complex64::new(0.0, -1.0 / (2.0 * PI));
        for (order, g) in lattice {
            let deg = order - 1;
            for (m, q) in moments.iter().enumerate().take(deg + 1) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[deg - m] += prefactor * g * binomial(deg, m) * sign * q;
            }
        }
        Self {
            rotation_rate: 0.5 * total / (4.0 * l * l),
            centroid: (xc, yc),
            image_coeffs: coeffs,
        }
    }

    /// Correction velocity `(u, v)` at `(x, y)`.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.centroid.0, y - self.centroid.1);
        let z = Complex64::new(dx, dy);
        let ubar = self
            .image_coeffs
            .iter()
            .rev()
            .fold(Complex64::default(), |acc, c| acc * z + c);
        (
            -self.rotation_rate * dy + ubar.re,
            self.rotation_rate * dx - ubar.im,
        )
    }
}

fn default_cfl() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_stride() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// CFL number `c` in `dt = c h / max|u|`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// 2/3-rule truncation of the nonlinear term.
    #[serde(default = "default_true")]
    pub dealias: bool,
    /// Strength `α` of the filter `exp(-α (k/k_max)^36)`, applied after every step.
    #[serde(default)]
    pub filter: Option<f64>,
    /// Restrict the initial vorticity to the dealiased band; the baselines
    /// then refer to the projected data. When off, modes outside the band
    /// are left untouched by the dynamics.
    #[serde(default)]
    pub project_initial: bool,
    /// Final time.
    pub t_end: f64,
    /// Steps between snapshots.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Advect with `-u` instead of `u`.
    #[serde(default)]
    pub reverse: bool,
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        Self {
            cfl: default_cfl(),
            dealias: true,
            filter: None,
            project_initial: false,
            t_end,
            snapshot_stride: default_stride(),
            reverse: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "CFL number {} outside (0, 1]",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} must be >= 0",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument(
                "snapshot stride must be positive".into(),
            ));
        }
        if let Some(a) = self.filter {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "filter strength {a} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Vorticity at time `t` with the baselines of its initial data.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub omega: ScalarField,
    pub t: f64,
    pub steps: usize,
    pub baselines: Baselines,
}

impl FlowState {
    /// Initial state at `t = 0`; `track_patch` enables the patch diagnostic.
    pub fn new(omega: ScalarField, track_patch: bool) -> Self {
        let baselines = Baselines::of(&omega, track_patch);
        Self {
            omega,
            t: 0.0,
            steps: 0,
            baselines,
        }
    }
}

/// Per-step information passed to observers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub max_speed: f64,
}

/// Callbacks invoked during [`evolve`].
pub trait Observer {
    fn on_step(&mut self, _state: &FlowState, _info: &StepInfo) -> Result<()> {
        Ok(())
    }

    fn on_snapshot(&mut self, _state: &FlowState) -> Result<()> {
        Ok(())
    }
}

/// Velocity field together with its far-field correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Velocity {
    pub u: ScalarField,
    pub v: ScalarField,
    pub correction: FarFieldCorrection,
}

impl Velocity {
    /// Mean vorticity over the periodic box.
    pub fn mean_vorticity(&self) -> f64 {
        2.0 * self.correction.rotation_rate
    }

    /// The velocity with the correction removed: the periodic solution.
    pub fn periodic_part(&self) -> (ScalarField, ScalarField) {
        let spec = *self.u.spec();
        let mut u = self.u.values().to_vec();
        let mut v = self.v.values().to_vec();
        for ((ui, vi), (x, y)) in u.iter_mut().zip(v.iter_mut()).zip(spec.centers()) {
            let (cu, cv) = self.correction.velocity(x, y);
            *ui -= cu;
            *vi -= cv;
        }
        (
            ScalarField::from_values(spec, u).expect("finite"),
            ScalarField::from_values(spec, v).expect("finite"),
        )
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .values()
            .iter()
            .zip(self.v.values())
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }
}

struct Buffers {
    vel: Vec<Complex64>,
    grad: Vec<Complex64>,
    work: Vec<Complex64>,
}

/// Precomputed transforms and wavenumber tables for one grid.
pub struct EulerSolver {
    spec: GridSpec,
    cfg: SolverConfig,
    fft: Fft2,
    /// Derivative wavenumbers with the Nyquist mode zeroed.
    kx: Vec<f64>,
    /// `1/|k|²`, zero at the origin.
    inv_k2: Vec<f64>,
    /// Retained modes of the nonlinear term.
    mask: Vec<f64>,
    filter: Option<Vec<f64>>,
    coords: Vec<f64>,
}

fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl EulerSolver {
    pub fn new(spec: GridSpec, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let n = spec.n();
        let base = PI / spec.half_width();
        let kx: Vec<f64> = (0..n)
            .map(|i| {
                if i == n / 2 {
                    0.0
                } else {
                    base * signed_mode(i, n) as f64
                }
            })
            .collect();
        let cutoff = ((n - 1) / 3) as i64;
        let mut inv_k2 = vec![0.0; n * n];
        let mut mask = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let idx = j * n + i;
                let (mx, my) = (signed_mode(i, n), signed_mode(j, n));
                let k2 = base * base * (mx * mx + my * my) as f64;
                if k2 > 0.0 {
                    inv_k2[idx] = 1.0 / k2;
                }
                let nyquist = i == n / 2 || j == n / 2;
                let keep = if cfg.dealias {
                    mx.abs() <= cutoff && my.abs() <= cutoff
                } else {
                    !nyquist
                };
                mask[idx] = if keep { 1.0 } else { 0.0 };
            }
        }
        let filter = cfg.filter.map(|alpha| {
            let kmax = (n / 2) as f64;
            (0..n * n)
                .map(|idx| {
                    let (mx, my) = (
                        signed_mode(idx % n, n) as f64,
                        signed_mode(idx / n, n) as f64,
                    );
                    let rel = (mx * mx + my * my).sqrt() / kmax;
                    (-alpha * rel.powi(FILTER_ORDER)).exp()
                })
                .collect()
        });
        let coords = (0..n).map(|i| spec.center(i)).collect();
        Ok(Self {
            spec,
            fft: Fft2::new(n),
            cfg,
            kx,
            inv_k2,
            mask,
            filter,
            coords,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.spec.len()]
    }

    fn to_spectral(&self, omega: &ScalarField, work: &mut Vec<Complex64>) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = omega
            .values()
            .par_iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.fft.forward(&mut data, work);
        data
    }

    /// Spectral `û + i v̂` and `∂ₓω̂ + i ∂ᵧω̂` in the transposed layout.
    fn fill_velocity(&self, w_hat: &[Complex64], vel: &mut [Complex64]) {
        let n = self.spec.n();
        vel.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
            let kx = self.kx[a];
            for (b, out) in row.iter_mut().enumerate() {
                let idx = a * n + b;
                *out = w_hat[idx] * self.inv_k2[idx] * Complex64::new(kx, self.kx[b]);
            }
        });
    }

    fn fill_gradient(&self, w_hat: &[Complex64], grad: &mut [Complex64]) {
        let n = self.spec.n();
        grad.par_chunks_mut(n).enumerate().for_each(|(a, row)| {
            let kx = self.kx[a];
            for (b, out) in row.iter_mut().enumerate() {
                *out = w_hat[a * n + b] * Complex64::new(-self.kx[b], kx);
            }
        });
    }

    /// Whole-plane velocity of `omega`.
    pub fn velocity(&self, omega: &ScalarField) -> Result<Velocity> {
        self.spec.check_same(omega.spec())?;
        let correction = FarFieldCorrection::of(omega);
        let mut work = self.zeros();
        let w_hat = self.to_spectral(omega, &mut work);
        let mut vel = self.zeros();
        self.fill_velocity(&w_hat, &mut vel);
        self.fft.inverse(&mut vel, &mut work);
        let n = self.spec.n();
        let mut u = Vec::with_capacity(n * n);
        let mut v = Vec::with_capacity(n * n);
        for (idx, c) in vel.iter().enumerate() {
            let (cu, cv) = correction.velocity(self.coords[idx % n], self.coords[idx / n]);
            u.push(c.re + cu);
            v.push(c.im + cv);
        }
        Ok(Velocity {
            u: ScalarField::from_values(self.spec, u)?,
            v: ScalarField::from_values(self.spec, v)?,
            correction,
        })
    }

    /// The correction velocity sampled at cell centers, packed as `u + iv`.
    fn correction_field(&self, correction: &FarFieldCorrection) -> Vec<Complex64> {
        let n = self.spec.n();
        let mut out = self.zeros();
        out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let y = self.coords[j];
            for (i, c) in row.iter_mut().enumerate() {
                let (u, v) = correction.velocity(self.coords[i], y);
                *c = Complex64::new(u, v);
            }
        });
        out
    }

    /// Writes `-P(u · ∇ω)` for the spectral vorticity `w_hat` into `out` and
    /// returns `max |u|`.
    fn rhs(
        &self,
        w_hat: &[Complex64],
        correction: &[Complex64],
        buf: &mut Buffers,
        out: &mut Vec<Complex64>,
    ) -> f64 {
        let n = self.spec.n();
        self.fill_velocity(w_hat, &mut buf.vel);
        self.fill_gradient(w_hat, &mut buf.grad);
        self.fft.inverse(&mut buf.vel, &mut buf.work);
        self.fft.inverse(&mut buf.grad, &mut buf.work);
        let sign = if self.cfg.reverse { -1.0 } else { 1.0 };
        let (vel, grad) = (&buf.vel, &buf.grad);
        let max_speed_sq = out
            .par_chunks_mut(n)
            .enumerate()
            .map(|(j, row)| {
                let mut speed: f64 = 0.0;
                for (i, o) in row.iter_mut().enumerate() {
                    let idx = j * n + i;
                    let u = vel[idx].re + correction[idx].re;
                    let v = vel[idx].im + correction[idx].im;
                    speed = speed.max(u * u + v * v);
                    *o = Complex64::new(sign * (u * grad[idx].re + v * grad[idx].im), 0.0);
                }
                speed
            })
            .reduce(|| 0.0, f64::max);
        self.fft.forward(out, &mut buf.work);
        out.par_iter_mut()
            .zip(self.mask.par_iter())
            .for_each(|(p, &m)| *p *= -m);
        max_speed_sq.sqrt()
    }

    fn project(&self, w_hat: &mut [Complex64]) {
        w_hat
            .par_iter_mut()
            .zip(self.mask.par_iter())
            .for_each(|(w, &m)| *w *= m);
    }

    fn remaining(&self, t: f64) -> f64 {
        self.cfg.t_end - t
    }

    fn finished(&self, t: f64) -> bool {
        self.remaining(t) <= 1e-12 * self.cfg.t_end.max(1.0)
    }

    /// Applies the initial projection when configured; other states pass through.
    pub fn prepare(&self, state: FlowState) -> Result<FlowState> {
        if !(self.cfg.dealias && self.cfg.project_initial && state.steps == 0) {
            return Ok(state);
        }
        self.spec.check_same(state.omega.spec())?;
        let mut work = self.zeros();
        let mut w = self.to_spectral(&state.omega, &mut work);
        self.project(&mut w);
        self.fft.inverse(&mut w, &mut work);
        let values = w
            .iter()
            .map(|c| {
                if c.re.abs() < DENORMAL_FLOOR {
                    0.0
                } else {
                    c.re
                }
            })
            .collect();
        let omega = ScalarField::from_values(self.spec, values)?;
        Ok(FlowState::new(omega, state.baselines.patch_q.is_some()))
    }

    /// Advances `state` by one CFL-limited RK4 step, clipped to `t_end`.
    pub fn step(&self, state: &FlowState) -> Result<(FlowState, StepInfo)> {
        self.spec.check_same(state.omega.spec())?;
        let correction = self.correction_field(&FarFieldCorrection::of(&state.omega));
        let mut buf = Buffers {
            vel: self.zeros(),
            grad: self.zeros(),
            work: self.zeros(),
        };
        let w0 = self.to_spectral(&state.omega, &mut buf.work);
        let mut k1 = self.zeros();
        let max_speed = self.rhs(&w0, &correction, &mut buf, &mut k1);
        if !max_speed.is_finite() {
            return Err(Error::Blowup {
                t: state.t,
                step: state.steps,
                reason: "non-finite velocity".into(),
            });
        }
        let remaining = self.remaining(state.t).max(0.0);
        let dt = if max_speed > 0.0 {
            (self.cfg.cfl * self.spec.h() / max_speed).min(remaining)
        } else {
            remaining
        };
        let mut stage = self.zeros();
        let advance = |k: &[Complex64], a: f64, stage: &mut Vec<Complex64>| {
            stage
                .par_iter_mut()
                .zip(w0.par_iter().zip(k.par_iter()))
                .for_each(|(s, (w, k))| *s = w + k * a);
        };
        // Accumulate k1 + 2 k2 + 2 k3 + k4 in `acc`.
        let mut acc = k1.clone();
        let mut k = self.zeros();
        advance(&k1, 0.5 * dt, &mut stage);
        self.rhs(&stage, &correction, &mut buf, &mut k);
        acc.par_iter_mut()
            .zip(k.par_iter())
            .for_each(|(a, k)| *a += k * 2.0);
        advance(&k, 0.5 * dt, &mut stage);
        self.rhs(&stage, &correction, &mut buf, &mut k);
        acc.par_iter_mut()
            .zip(k.par_iter())
            .for_each(|(a, k)| *a += k * 2.0);
        advance(&k, dt, &mut stage);
        self.rhs(&stage, &correction, &mut buf, &mut k);
        let sixth = dt / 6.0;
        let mut w1 = stage;
        w1.par_iter_mut()
            .zip(w0.par_iter().zip(acc.par_iter().zip(k.par_iter())))
            .for_each(|(out, (w, (a, k4)))| *out = w + (a + k4) * sixth);
        if let Some(filter) = &self.filter {
            w1.par_iter_mut()
                .zip(filter.par_iter())
                .for_each(|(w, &s)| *w *= s);
        }
        self.fft.inverse(&mut w1, &mut buf.work);
        let values: Vec<f64> = w1
            .iter()
            .map(|c| {
                if c.re.abs() < DENORMAL_FLOOR {
                    0.0
                } else {
                    c.re
                }
            })
            .collect();
        let t = state.t + dt;
        let steps = state.steps + 1;
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !peak.is_finite() || peak > BLOWUP_FACTOR * state.baselines.sup.max(f64::MIN_POSITIVE) {
            return Err(Error::Blowup {
                t,
                step: steps,
                reason: format!(
                    "max |ω| = {peak:.3e} against initial {:.3e}",
                    state.baselines.sup
                ),
            });
        }
        let omega = ScalarField::from_values(self.spec, values)?;
        let info = StepInfo {
            step: steps,
            t,
            dt,
            max_speed,
        };
        Ok((
            FlowState {
                omega,
                t,
                steps,
                baselines: state.baselines.clone(),
            },
            info,
        ))
    }

    /// Steps until `t_end`, calling observers after every step and at
    /// snapshots (the initial state, every `snapshot_stride` steps, and the
    /// final state).
    pub fn evolve(
        &self,
        state: FlowState,
        observers: &mut [&mut dyn Observer],
    ) -> Result<FlowState> {
        let state = self.prepare(state)?;
        for o in observers.iter_mut() {
            o.on_snapshot(&state)?;
        }
        let mut state = state;
        while !self.finished(state.t) {
            let (next, info) = self.step(&state)?;
            state = next;
            let done = self.finished(state.t);
            for o in observers.iter_mut() {
                o.on_step(&state, &info)?;
            }
            if done || state.steps % self.cfg.snapshot_stride == 0 {
                for o in observers.iter_mut() {
                    o.on_snapshot(&state)?;
                }
            }
        }
        Ok(state)
    }

    /// `max |∇·(u, v)| / max |(u, v)|` with spectral derivatives; the fields
    /// must be periodic.
    pub fn spectral_divergence(&self, u: &ScalarField, v: &ScalarField) -> Result<f64> {
        self.spec.check_same(u.spec())?;
        self.spec.check_same(v.spec())?;
        let n = self.spec.n();
        let mut work = self.zeros();
        let uh = self.to_spectral(u, &mut work);
        let vh = self.to_spectral(v, &mut work);
        let mut div: Vec<Complex64> = (0..n * n)
            .map(|idx| {
                Complex64::new(0.0, 1.0) * (uh[idx] * self.kx[idx / n] + vh[idx] * self.kx[idx % n])
            })
            .collect();
        self.fft.inverse(&mut div, &mut work);
        let max_div = div.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
        let speed = u
            .values()
            .iter()
            .zip(v.values())
            .fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
        Ok(if speed > 0.0 {
            max_div / speed
        } else {
            max_div
        })
    }
}

/// Velocity of `omega` on its own grid.
pub fn velocity_from_vorticity(omega: &ScalarField) -> Result<Velocity> {
    EulerSolver::new(*omega.spec(), SolverConfig::new(0.0))?.velocity(omega)
}

/// Relative spectral divergence of a periodic velocity field.
pub fn spectral_divergence(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    EulerSolver::new(*u.spec(), SolverConfig::new(0.0))?.spectral_divergence(u, v)
}

/// One step of `state` under `cfg`.
pub fn step(state: &FlowState, cfg: &SolverConfig) -> Result<FlowState> {
    EulerSolver::new(*state.omega.spec(), cfg.clone())?
        .step(state)
        .map(|(s, _)| s)
}

/// Evolves `state` to `cfg.t_end`.
pub fn evolve(
    state: FlowState,
    cfg: &SolverConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<FlowState> {
    EulerSolver::new(*state.omega.spec(), cfg.clone())?.evolve(state, observers)
}
