//! Initial-data presets in weighted variables.

use serde::{Deserialize, Serialize};

use super::{FieldState, Representation};
use crate::geometry::{check_regularity, DEFAULT_REGULARITY_MARGIN};
use crate::grid::Parity;
use crate::spectral::SpectralBasis;
use crate::{jb, Error, Result};

/// Even profile for `phi~` or `pi~`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Zero,
    /// `amplitude g_d`.
    GroundState { amplitude: f64 },
    /// `amplitude exp(-y^2 / width^2)`.
    Gaussian { width: f64, amplitude: f64 },
    /// Smooth compactly supported bump on `|y| < width`, equal to `amplitude` at the collar.
    Bump { width: f64, amplitude: f64 },
    /// Piecewise linear interpolation of `(y, value)` pairs, zero beyond the last abscissa.
    Table { y: Vec<f64>, values: Vec<f64> },
    /// Pointwise sum of profiles.
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn sample(&self, basis: &SpectralBasis) -> Result<Vec<f64>> {
        let grid = &basis.grid;
        Ok(match self {
            Profile::Zero => vec![0.0; grid.n()],
            Profile::GroundState { amplitude } => basis.g_d.iter().map(|g| amplitude * g).collect(),
            Profile::Gaussian { width, amplitude } => {
                positive(*width, "gaussian width")?;
                grid.sample(|y| amplitude * (-(y / width).powi(2)).exp())
            }
            Profile::Bump { width, amplitude } => {
                positive(*width, "bump width")?;
                grid.sample(|y| {
                    let s = y / width;
                    if s.abs() < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                })
            }
            Profile::Table { y, values } => {
                if y.len() != values.len() || y.len() < 2 || y.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("table needs increasing abscissae and matching values".into()));
                }
                grid.sample(|x| interpolate(y, values, x))
            }
            Profile::Sum(parts) => {
                let mut acc = vec![0.0; grid.n()];
                for p in parts {
                    for (a, v) in acc.iter_mut().zip(p.sample(basis)?) {
                        *a += v;
                    }
                }
                acc
            }
        })
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive, got {v}")))
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return ys[0];
    }
    if x > xs[last] {
        return 0.0;
    }
    let k = xs.partition_point(|v| *v < x).max(1);
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Weighted Cauchy data `(phi~_1, phi~_2)` before the ground-state shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub position: Profile,
    pub velocity: Profile,
    /// Remove the `g_d` component of both profiles.
    pub project_c: bool,
}

impl DataSpec {
    pub fn zero() -> Self {
        Self { position: Profile::Zero, velocity: Profile::Zero, project_c: false }
    }

    /// `(phi~_1, phi~_2)` on the grid of `basis`.
    pub fn profiles(&self, basis: &SpectralBasis) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut p = self.position.sample(basis)?;
        let mut v = self.velocity.sample(basis)?;
        if self.project_c {
            p = basis.project_c(&p, Parity::Even);
            v = basis.project_c(&v, Parity::Even);
        }
        Ok((p, v))
    }

    /// Ground-state components `(p1, p2) = (<phi~_1, g_d>, <phi~_2, g_d>)`.
    pub fn mode_components(&self, basis: &SpectralBasis) -> Result<(f64, f64)> {
        let (p, v) = self.profiles(basis)?;
        Ok((basis.coefficient(&p), basis.coefficient(&v)))
    }
}

/// Weighted state `(phi~_1 + a g_d, phi~_2)` at `t = 0`.
pub fn initial_data(spec: &DataSpec, a: f64, basis: &SpectralBasis) -> Result<FieldState> {
    let (mut phi, pi) = spec.profiles(basis)?;
    for (p, g) in phi.iter_mut().zip(&basis.g_d) {
        *p += a * g;
    }
    for (i, v) in phi.iter().enumerate() {
        let y = basis.grid.y(i);
        check_regularity(y, v / jb(y).sqrt(), DEFAULT_REGULARITY_MARGIN)?;
    }
    if phi.iter().chain(&pi).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial data is not finite".into()));
    }
    Ok(FieldState { t: 0.0, phi, pi, representation: Representation::Weighted })
}
