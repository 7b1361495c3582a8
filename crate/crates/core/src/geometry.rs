//! Catenoid embeddings, the normal-graph chart and the induced metric.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{jb, Error, Result};

/// Default fraction of `<y>^2` kept in reserve by the regularity guard.
pub const DEFAULT_REGULARITY_MARGIN: f64 = 0.05;

/// Eigenvalue threshold used by [`lorentzian_check`].
pub const SIGNATURE_TOLERANCE: f64 = 1e-12;

/// Member `(a, b)` of the two-parameter catenoid family: scaling `a > 0`,
/// axial translation `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatenoidParams {
    a: f64,
    b: f64,
}

impl CatenoidParams {
    pub const STANDARD: Self = Self { a: 1.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::NonPositiveScale(a));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// A point of `R^3` in cylindrical coordinates, optionally with a time stamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientPoint {
    pub r: f64,
    pub z: f64,
    pub theta: f64,
    pub t: Option<f64>,
}

fn wrap_angle(omega: f64) -> f64 {
    let w = omega.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `(y, omega) -> (a <y/a>, b + a asinh(y/a), omega)`.
pub fn catenoid_embed(p: CatenoidParams, y: f64, omega: f64) -> Result<AmbientPoint> {
    if !(p.a > 0.0) {
        return Err(Error::NonPositiveScale(p.a));
    }
    let s = y / p.a;
    Ok(AmbientPoint {
        r: p.a * jb(s),
        z: p.b + p.a * s.asinh(),
        theta: wrap_angle(omega),
        t: None,
    })
}

/// Largest `|phi|` accepted at `y` with the given margin.
#[inline]
pub fn regularity_bound(y: f64, margin: f64) -> f64 {
    (1.0 - margin) * (1.0 + y * y)
}

/// Fails when `|phi| >= (1 - margin) <y>^2`, the region where the normal
/// chart stops being regular and injective.
pub fn check_regularity(y: f64, phi: f64, margin: f64) -> Result<()> {
    let bound = regularity_bound(y, margin);
    if phi.abs() >= bound || !phi.is_finite() {
        return Err(Error::Regularity { y, phi, bound });
    }
    Ok(())
}

/// The normal-bundle chart: moves the catenoid point at `y` a signed
/// distance `phi / <y>` along the outward unit normal `(1, -y) / <y>`.
pub fn graph_embed(y: f64, omega: f64, phi: f64) -> Result<AmbientPoint> {
    graph_embed_with_margin(y, omega, phi, DEFAULT_REGULARITY_MARGIN)
}

pub fn graph_embed_with_margin(y: f64, omega: f64, phi: f64, margin: f64) -> Result<AmbientPoint> {
    check_regularity(y, phi, margin)?;
    let j = jb(y);
    Ok(AmbientPoint {
        r: j + phi / j,
        z: y.asinh() - y * phi / j,
        theta: omega,
        t: None,
    })
}

/// Symmetric metric coefficients in the coordinate order `(t, y, omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric3(pub [[f64; 3]; 3]);

impl Metric3 {
    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        Self([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    /// Eigenvalues in ascending order (cyclic Jacobi rotations).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let mut a = self.0;
        for _ in 0..50 {
            let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
            if off < 1e-300 {
                break;
            }
            for (p, q) in [(0, 1), (0, 2), (1, 2)] {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..3 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..3 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        let mut ev = [a[0][0], a[1][1], a[2][2]];
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

/// Pull-back of the Minkowski metric by the graph map of `phi(t, y)`.
pub fn pullback_metric(y: f64, phi: f64, phi_t: f64, phi_y: f64) -> Metric3 {
    let j2 = 1.0 + y * y;
    let g_tt = -(1.0 - phi_t * phi_t);
    let g_yy = 1.0 - 2.0 * phi / j2 + phi * phi / (j2 * j2) + phi_y * phi_y;
    let g_ty = phi_t * phi_y;
    let g_ww = 1.0 + y * y + 2.0 * phi + phi * phi / j2;
    Metric3([[g_tt, g_ty, 0.0], [g_ty, g_yy, 0.0], [0.0, 0.0, g_ww]])
}

/// True iff the signature is `(-, +, +)` with every eigenvalue at least
/// [`SIGNATURE_TOLERANCE`] away from zero.
pub fn lorentzian_check(metric: &Metric3) -> bool {
    let ev = metric.eigenvalues();
    ev[0] < -SIGNATURE_TOLERANCE && ev[1] > SIGNATURE_TOLERANCE && ev[2] > SIGNATURE_TOLERANCE
}
