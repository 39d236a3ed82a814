//! Numerical laboratory for radially symmetric, monotone vorticities of the
//! two-dimensional incompressible Euler equations.
//!
//! The crate is organised around five modules:
//!
//! * [`field`]: uniform grids on a truncated plane `[-L, L)^2`, scalar fields,
//!   midpoint quadrature, `L^p` norms, the angular impulse `J(f) = ∫|x|² f` and
//!   the weighted norm `‖g‖_{J_p} = ‖g‖_{L^p} + J(|g|)`.
//! * [`rearrange`]: distribution functions, the symmetric-decreasing
//!   rearrangement on the grid, the cut-off operator and the level-set /
//!   annulus constructions together with the rearrangement inequalities.
//! * [`bounds`]: explicit evaluators for the `L¹` and `J_p` stability chains.
//! * [`profiles`]: radial monotone profiles and the perturbation families.
//! * [`euler`]: a pseudo-spectral vorticity solver with conservation
//!   diagnostics.

pub mod bounds;
pub mod error;
pub mod euler;
pub mod field;
pub mod profiles;
pub mod random_fields;
pub mod rearrange;

pub use error::{Error, Result};
pub use field::{GridSpec, RadialProfile, ScalarField};
