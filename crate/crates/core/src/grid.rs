//! Uniform half-line grid `y_i = i h` on `[0, y_max]` with two ghost nodes at
//! each end, fourth-order central stencils, and the full-line quadrature used
//! for every inner product in the crate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Ghost-zone width required by the five-point stencils.
pub const GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    y_max: f64,
    n: usize,
    h: f64,
}

/// Reflection symmetry of a profile about `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

/// How the two ghost values beyond `y_max` are filled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterGhost {
    /// Quartic extrapolation from the last five nodes.
    Extrapolate,
    /// Odd reflection about `y_max` (the profile vanishes there).
    Dirichlet,
    /// Prescribed values at `y_max + h` and `y_max + 2h`.
    Fixed([f64; 2]),
}

impl Grid {
    pub fn new(y_max: f64, n: usize) -> Result<Self> {
        if !(y_max.is_finite() && y_max > 0.0) {
            return Err(Error::InvalidGrid(format!("y_max must be positive, got {y_max}")));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 nodes, got {n}")));
        }
        Ok(Self {
            y_max,
            n,
            h: y_max / (n - 1) as f64,
        })
    }

    /// Grid with spacing as close as possible to `h` on `[0, y_max]`.
    pub fn with_spacing(y_max: f64, h: f64) -> Result<Self> {
        let n = (y_max / h).round() as usize + 1;
        Self::new(y_max, n)
    }

    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    #[inline]
    pub fn y(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.y_max
        } else {
            i as f64 * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.y(i)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.y(i))).collect()
    }

    /// Index of the last node with `y_i <= y`.
    pub fn index_at(&self, y: f64) -> usize {
        ((y / self.h).floor().max(0.0) as usize).min(self.n - 1)
    }

    /// Copies `f` into a buffer with `GHOST` extra nodes on each side.
    pub fn pad(&self, f: &[f64], parity: Parity, outer: OuterGhost) -> Vec<f64> {
        let mut out = vec![0.0; self.n + 2 * GHOST];
        self.pad_into(f, parity, outer, &mut out);
        out
    }

    pub fn pad_into(&self, f: &[f64], parity: Parity, outer: OuterGhost, out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(f.len(), n);
        debug_assert_eq!(out.len(), n + 2 * GHOST);
        out[GHOST..GHOST + n].copy_from_slice(f);
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        out[1] = sign * f[1];
        out[0] = sign * f[2];
        let (g1, g2) = match outer {
            OuterGhost::Extrapolate => {
                let e1 = 5.0 * f[n - 1] - 10.0 * f[n - 2] + 10.0 * f[n - 3] - 5.0 * f[n - 4]
                    + f[n - 5];
                let e2 = 5.0 * e1 - 10.0 * f[n - 1] + 10.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4];
                (e1, e2)
            }
            OuterGhost::Dirichlet => (2.0 * f[n - 1] - f[n - 2], 2.0 * f[n - 1] - f[n - 3]),
            OuterGhost::Fixed([a, b]) => (a, b),
        };
        out[GHOST + n] = g1;
        out[GHOST + n + 1] = g2;
    }

    /// Fourth-order first derivative of a padded buffer at every node.
    pub fn d1_padded(&self, p: &[f64], out: &mut [f64]) {
        let c = 1.0 / (12.0 * self.h);
        for (i, o) in out.iter_mut().enumerate() {
            let j = i + GHOST;
            *o = c * (8.0 * (p[j + 1] - p[j - 1]) - (p[j + 2] - p[j - 2]));
        }
    }

    /// Fourth-order second derivative of a padded buffer at every node.
    pub fn d2_padded(&self, p: &[f64], out: &mut [f64]) {
        let c = 1.0 / (12.0 * self.h * self.h);
        for (i, o) in out.iter_mut().enumerate() {
            let j = i + GHOST;
            *o = c * (-p[j - 2] + 16.0 * p[j - 1] - 30.0 * p[j] + 16.0 * p[j + 1] - p[j + 2]);
        }
    }

    pub fn d1(&self, f: &[f64], parity: Parity, outer: OuterGhost) -> Vec<f64> {
        let p = self.pad(f, parity, outer);
        let mut out = vec![0.0; self.n];
        self.d1_padded(&p, &mut out);
        out
    }

    pub fn d2(&self, f: &[f64], parity: Parity, outer: OuterGhost) -> Vec<f64> {
        let p = self.pad(f, parity, outer);
        let mut out = vec![0.0; self.n];
        self.d2_padded(&p, &mut out);
        out
    }

    /// Weights of the trapezoid rule on `[-y_max, y_max]` folded onto the
    /// half line, so that `sum w_i f_i` approximates the full-line integral of
    /// the even extension of `f`.
    ///
    /// With these weights the discrete operator built from [`Grid::d2`] and an
    /// even reflection at the origin is exactly self-adjoint.
    pub fn quad_weights(&self) -> Vec<f64> {
        let mut w = vec![2.0 * self.h; self.n];
        w[0] = self.h;
        w[self.n - 1] = self.h;
        w
    }

    /// Full-line integral of the even extension of `f`.
    pub fn integrate_even(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        let h = self.h;
        let interior: f64 = f[1..self.n - 1].iter().sum();
        h * (f[0] + f[self.n - 1]) + 2.0 * h * interior
    }

    /// Full-line `L^2` inner product of two profiles of the given parities.
    /// Profiles of opposite parity are orthogonal and return exactly zero.
    pub fn inner_with_parity(&self, f: &[f64], pf: Parity, g: &[f64], pg: Parity) -> f64 {
        if pf != pg {
            return 0.0;
        }
        let h = self.h;
        let n = self.n;
        let mut s = 0.0;
        for i in 1..n - 1 {
            s += f[i] * g[i];
        }
        h * (f[0] * g[0] + f[n - 1] * g[n - 1]) + 2.0 * h * s
    }

    /// Inner product of two even profiles.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.inner_with_parity(f, Parity::Even, g, Parity::Even)
    }

    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).max(0.0).sqrt()
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(Grid::new(10.0, 8).is_err());
        assert!(Grid::new(0.0, 100).is_err());
        assert!(Grid::new(f64::NAN, 100).is_err());
        let g = Grid::new(10.0, 101).unwrap();
        assert_eq!(g.y(0), 0.0);
        assert_eq!(g.y(100), 10.0);
        assert_relative_eq!(g.h(), 0.1);
    }

    #[test]
    fn stencils_exact_on_quartics() {
        let g = Grid::new(4.0, 41).unwrap();
        // even quartic: reflection ghosts are exact, extrapolation is exact
        let f = g.sample(|y| 1.0 + 2.0 * y * y - 0.5 * y.powi(4));
        let d1 = g.d1(&f, Parity::Even, OuterGhost::Extrapolate);
        let d2 = g.d2(&f, Parity::Even, OuterGhost::Extrapolate);
        for i in 0..g.n() {
            let y = g.y(i);
            assert!((d1[i] - (4.0 * y - 2.0 * y.powi(3))).abs() < 1e-10, "d1 at {y}");
            assert!((d2[i] - (4.0 - 6.0 * y * y)).abs() < 1e-9, "d2 at {y}");
        }
        let f = g.sample(|y| y - y.powi(3));
        let d1 = g.d1(&f, Parity::Odd, OuterGhost::Extrapolate);
        for i in 0..g.n() {
            let y = g.y(i);
            assert!((d1[i] - (1.0 - 3.0 * y * y)).abs() < 1e-10);
        }
    }

    #[test]
    fn full_line_quadrature_of_gaussian() {
        let g = Grid::new(12.0, 241).unwrap();
        let f = g.sample(|y| (-y * y).exp());
        assert_relative_eq!(g.integrate_even(&f), std::f64::consts::PI.sqrt(), epsilon = 1e-13);
        let odd = g.sample(|y| y * (-y * y).exp());
        assert_eq!(g.inner_with_parity(&f, Parity::Even, &odd, Parity::Odd), 0.0);
    }
}
