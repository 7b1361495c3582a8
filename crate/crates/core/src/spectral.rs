//! The Schrödinger operator `L = -d^2/dy^2 - V(y)` with
//! `V = (6 + y^2) / (4 <y>^4)`, its unique negative eigenpair `(g_d, -k_d^2)`,
//! the explicit zero modes and the projections `P_d`, `P_c`.
//!
//! The eigenvalue is obtained three ways. A second-order tridiagonal
//! discretization gives a certified bracket and a count of negative
//! eigenvalues by Sturm sequences; a Numerov shooting pass refines it to
//! fourth order; inverse iteration on the fourth-order five-point operator
//! yields the eigenvector used as the projection basis, whose Rayleigh
//! quotient is the stored `k_d_sq`.

use serde::{Deserialize, Serialize};

use crate::grid::{sup_norm, Grid, OuterGhost, Parity};
use crate::{jb, Error, Result};

pub use crate::model::weighted_potential as potential;

/// Smallest admissible truncation radius for the eigenproblem.
pub const MIN_Y_MAX: f64 = 20.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralBasis {
    pub grid: Grid,
    /// Ground state, positive, even, unit norm on the full line.
    pub g_d: Vec<f64>,
    /// `k_d^2` from the Rayleigh quotient of `g_d` under the fourth-order operator.
    pub k_d_sq: f64,
    /// `k_d^2` from Sturm bisection of the second-order matrix.
    pub k_d_sq_matrix: f64,
    /// `k_d^2` from Numerov shooting.
    pub k_d_sq_shooting: f64,
    pub zero_mode_scaling: Vec<f64>,
    pub zero_mode_translation: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// `sup |L g_d + k_d^2 g_d|`.
    pub residual_sup: f64,
    /// `||L g_d + k_d^2 g_d||_{L^2}`.
    pub residual_l2: f64,
    /// `||g_d'||_{L^2}` from the identity `||g'||^2 = -k_d^2 + <V g, g>`.
    pub grad_norm: f64,
}

impl SpectralBasis {
    pub fn k_d(&self) -> f64 {
        self.k_d_sq.sqrt()
    }

    pub fn eigenvalue(&self) -> f64 {
        -self.k_d_sq
    }

    /// `(h, h g_d)` with `h = <f, g_d>`; odd profiles project to zero.
    pub fn project_d(&self, f: &[f64], parity: Parity) -> (f64, Vec<f64>) {
        let h = self.grid.inner_with_parity(f, parity, &self.g_d, Parity::Even);
        (h, self.g_d.iter().map(|g| h * g).collect())
    }

    pub fn coefficient(&self, f: &[f64]) -> f64 {
        self.grid.inner(f, &self.g_d)
    }

    pub fn project_c(&self, f: &[f64], parity: Parity) -> Vec<f64> {
        let (_, d) = self.project_d(f, parity);
        f.iter().zip(&d).map(|(a, b)| a - b).collect()
    }
}

pub fn zero_modes(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    (grid.sample(eta_scaling), grid.sample(eta_translation))
}

/// `<y>^{1/2} ((y/<y>) asinh y - 1)`, generated by rescaling the catenoid.
pub fn eta_scaling(y: f64) -> f64 {
    let j = jb(y);
    j.sqrt() * (y / j * y.asinh() - 1.0)
}

/// `<y>^{1/2} y/<y>`, generated by axial translation; odd.
pub fn eta_translation(y: f64) -> f64 {
    let j = jb(y);
    y / j.sqrt()
}

/// `-f'' - V f` with fourth-order stencils, parity reflection at the origin
/// and extrapolated ghosts at `y_max`.
pub fn apply_l(f: &[f64], grid: &Grid, parity: Parity) -> Vec<f64> {
    let mut out = grid.d2(f, parity, OuterGhost::Extrapolate);
    for (i, o) in out.iter_mut().enumerate() {
        *o = -*o - potential(grid.y(i)) * f[i];
    }
    out
}

/// Rayleigh quotient `<f, L f> / <f, f>` of an even profile vanishing near `y_max`.
pub fn rayleigh_quotient(f: &[f64], grid: &Grid) -> f64 {
    let mut lf = grid.d2(f, Parity::Even, OuterGhost::Dirichlet);
    for (i, v) in lf.iter_mut().enumerate() {
        *v = -*v - potential(grid.y(i)) * f[i];
    }
    grid.inner(f, &lf) / grid.inner(f, f)
}

/// Second-order symmetric tridiagonal form of `L` on nodes `0..n-1` with
/// Neumann at the origin and Dirichlet at `y_max`: `(diagonal, offdiagonal)`.
fn tridiagonal(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let m = grid.n() - 1;
    let h2 = grid.h() * grid.h();
    let d: Vec<f64> = (0..m).map(|i| 2.0 / h2 - potential(grid.y(i))).collect();
    let mut e = vec![-1.0 / h2; m - 1];
    e[0] = -std::f64::consts::SQRT_2 / h2;
    (d, e)
}

/// Number of eigenvalues strictly below `lambda`.
fn sturm_count(d: &[f64], e: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..d.len() {
        let q_prev = if q == 0.0 { f64::EPSILON * (e[i - 1].abs() + 1.0) } else { q };
        q = d[i] - lambda - e[i - 1] * e[i - 1] / q_prev;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Number of negative eigenvalues of the second-order discretization.
pub fn negative_eigenvalue_count(grid: &Grid) -> usize {
    let (d, e) = tridiagonal(grid);
    sturm_count(&d, &e, 0.0)
}

fn matrix_ground_eigenvalue(grid: &Grid, tol: f64) -> Result<f64> {
    let (d, e) = tridiagonal(grid);
    match sturm_count(&d, &e, 0.0) {
        0 => return Err(Error::DomainTooSmall { y_max: grid.y_max() }),
        1 => {}
        k => return Err(Error::SpuriousBoundStates(k)),
    }
    // Gershgorin-safe lower end: the spectrum is bounded below by -max V
    let (mut lo, mut hi) = (-potential(0.0) - 1.0, 0.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&d, &e, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Value at `y_max` of the even Numerov solution of `g'' + (V + E) g = 0`.
fn numerov_endpoint(grid: &Grid, e: f64) -> f64 {
    let h2 = grid.h() * grid.h() / 12.0;
    let q = |i: usize| potential(grid.y(i)) + e;
    let mut g0 = 1.0;
    let mut g1 = g0 * (1.0 - 5.0 * h2 * q(0)) / (1.0 + h2 * q(1));
    for i in 1..grid.n() - 1 {
        let g2 = (2.0 * g1 * (1.0 - 5.0 * h2 * q(i)) - g0 * (1.0 + h2 * q(i - 1))) / (1.0 + h2 * q(i + 1));
        g0 = g1;
        g1 = g2;
        if g1.abs() > 1e250 {
            return g1.signum() * f64::INFINITY;
        }
    }
    g1
}

fn shooting_ground_eigenvalue(grid: &Grid, guess: f64, tol: f64) -> Result<f64> {
    let f = |e: f64| numerov_endpoint(grid, e);
    let mut width = 1e-4_f64.max(10.0 * grid.h() * grid.h());
    let (mut lo, mut hi) = (guess - width, guess + width);
    let mut tries = 0;
    while f(lo).signum() == f(hi).signum() {
        width *= 2.0;
        lo = guess - width;
        hi = (guess + width).min(0.0);
        tries += 1;
        if tries > 20 {
            return Err(Error::NoConvergence("shooting bracket not found".into()));
        }
    }
    let flo = f(lo);
    while hi - lo > tol.max(4.0 * f64::EPSILON * guess.abs()) {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Five-point fourth-order `L` on nodes `0..n-1`, Dirichlet at `y_max`, as
/// rows `[c_{-2}, c_{-1}, c_0, c_{+1}, c_{+2}]`.
fn pentadiagonal(grid: &Grid) -> Vec<[f64; 5]> {
    let m = grid.n() - 1;
    let c = 1.0 / (12.0 * grid.h() * grid.h());
    let stencil = [c, -16.0 * c, 30.0 * c, -16.0 * c, c];
    let mut rows = vec![[0.0; 5]; m];
    for (i, row) in rows.iter_mut().enumerate() {
        row[2] -= potential(grid.y(i));
        for (k, s) in stencil.iter().enumerate() {
            let j = i as isize + k as isize - 2;
            // even reflection at the origin, odd reflection about y_max
            let (col, sign) = if j < 0 {
                (-j, 1.0)
            } else if j as usize >= m {
                (2 * m as isize - j, -1.0)
            } else {
                (j, 1.0)
            };
            if col as usize == m {
                continue;
            }
            let slot = (col - i as isize + 2) as usize;
            row[slot] += sign * s;
        }
    }
    rows
}

/// In-place banded LU (no pivoting) of `A - shift I` for bandwidth two.
struct BandedLu {
    rows: Vec<[f64; 5]>,
}

impl BandedLu {
    fn new(a: &[[f64; 5]], shift: f64) -> Self {
        let m = a.len();
        let mut rows: Vec<[f64; 5]> = a.to_vec();
        for r in rows.iter_mut() {
            r[2] -= shift;
        }
        for k in 0..m {
            let piv = rows[k][2];
            for i in k + 1..(k + 3).min(m) {
                let off = i - k; // row i, column k sits at slot 2 - off
                let l = rows[i][2 - off] / piv;
                rows[i][2 - off] = l;
                for jj in 1..=2 {
                    let col = k + jj;
                    if col >= m || col > i + 2 {
                        continue;
                    }
                    let slot_i = col + 2 - i;
                    rows[i][slot_i] -= l * rows[k][2 + jj];
                }
            }
        }
        Self { rows }
    }

    fn solve(&self, b: &mut [f64]) {
        let m = b.len();
        for i in 0..m {
            for off in 1..=2 {
                if i >= off {
                    b[i] -= self.rows[i][2 - off] * b[i - off];
                }
            }
        }
        for i in (0..m).rev() {
            let mut s = b[i];
            for jj in 1..=2 {
                if i + jj < m {
                    s -= self.rows[i][2 + jj] * b[i + jj];
                }
            }
            b[i] = s / self.rows[i][2];
        }
    }
}

fn apply_rows(a: &[[f64; 5]], x: &[f64]) -> Vec<f64> {
    let m = x.len();
    (0..m)
        .map(|i| {
            (0..5)
                .filter_map(|k| {
                    let j = i as isize + k as isize - 2;
                    (j >= 0 && (j as usize) < m).then(|| a[i][k] * x[j as usize])
                })
                .sum()
        })
        .collect()
}

/// Ground state of `L` on the grid. `tolerance` bounds the eigenvalue
/// bisection width.
pub fn ground_state(grid: &Grid, tolerance: f64) -> Result<SpectralBasis> {
    if grid.y_max() < MIN_Y_MAX {
        return Err(Error::DomainTooSmall { y_max: grid.y_max() });
    }
    let tol = tolerance.max(1e-15);
    let lam_matrix = matrix_ground_eigenvalue(grid, tol)?;
    let lam_shoot = shooting_ground_eigenvalue(grid, lam_matrix, tol)?;

    let a = pentadiagonal(grid);
    let m = a.len();
    let shift = lam_shoot * (1.0 + 1e-9);
    let lu = BandedLu::new(&a, shift);
    let k0 = (-lam_shoot).sqrt();
    let mut x: Vec<f64> = (0..m).map(|i| (-k0 * grid.y(i)).exp()).collect();
    let mut rq = lam_shoot;
    for _ in 0..50 {
        lu.solve(&mut x);
        let s = sup_norm(&x);
        x.iter_mut().for_each(|v| *v /= s);
        let ax = apply_rows(&a, &x);
        let num: f64 = weighted_dot(grid, &x, &ax);
        let den: f64 = weighted_dot(grid, &x, &x);
        let next = num / den;
        let done = (next - rq).abs() <= tol.max(1e-14);
        rq = next;
        if done {
            break;
        }
    }

    let mut g_d = x;
    g_d.push(0.0);
    let norm = grid.l2_norm(&g_d);
    let sign = if g_d[0] < 0.0 { -1.0 } else { 1.0 };
    g_d.iter_mut().for_each(|v| *v *= sign / norm);
    if g_d[..m].iter().any(|v| *v <= 0.0) {
        return Err(Error::NoConvergence("ground state has a node".into()));
    }

    let k_d_sq = -rq;
    let lg = apply_l(&g_d, grid, Parity::Even);
    let res: Vec<f64> = lg.iter().zip(&g_d).map(|(l, g)| l + k_d_sq * g).collect();
    let vgg: f64 = {
        let vg: Vec<f64> = g_d.iter().enumerate().map(|(i, g)| potential(grid.y(i)) * g).collect();
        grid.inner(&vg, &g_d)
    };
    let (zs, zt) = zero_modes(grid);
    Ok(SpectralBasis {
        grid: *grid,
        k_d_sq,
        k_d_sq_matrix: -lam_matrix,
        k_d_sq_shooting: -lam_shoot,
        residual_sup: sup_norm(&res),
        residual_l2: grid.l2_norm(&res),
        grad_norm: (vgg - k_d_sq).max(0.0).sqrt(),
        g_d,
        zero_mode_scaling: zs,
        zero_mode_translation: zt,
        quad_weights: grid.quad_weights(),
    })
}

fn weighted_dot(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let h = grid.h();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (x, y))| if i == 0 { h * x * y } else { 2.0 * h * x * y })
        .sum()
}
