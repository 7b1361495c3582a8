//! Numerical laboratory for the rotationally symmetric vanishing-mean-curvature
//! flow near the catenoid in Minkowski space.
//!
//! The perturbation is written as a normal graph `phi(t, y)` over the catenoid
//! and obeys a 1+1 quasilinear wave equation with an attractive potential. The
//! crate evolves that equation, resolves the spectrum of its linearization
//! (one unstable eigenvalue, two explicit zero modes) and shoots on the
//! unstable-mode amplitude to find the threshold between collar collapse and
//! collar widening.
//!
//! Module map:
//!
//! - [`geometry`]: catenoid family, graph chart, pull-back metric.
//! - [`model`]: closed-form nonlinearity, weighted transform, algebraic oracles.
//! - [`spectral`]: the operator `L`, ground state, zero modes, projections.
//! - [`evolution`]: method-of-lines integrator with regularity guards.
//! - [`analysis`]: norms, vector fields, `h(t)`, decay fits, fate classification.
//! - [`shooting`]: bisection on the ground-state amplitude.
//! - [`reference`]: collapsing cylinder and static catenoid graphs.
//! - [`verify`]: identity suite shared by the test-suite and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod grid;
pub mod model;
pub mod reference;
pub mod shooting;
pub mod spectral;
pub mod verify;

mod hyperdual;

pub use error::{Error, Result};
pub use grid::{Grid, Parity};

/// Japanese bracket `<y> = sqrt(1 + y^2)`.
#[inline]
pub fn jb(y: f64) -> f64 {
    (1.0 + y * y).sqrt()
}
