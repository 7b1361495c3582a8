//! Exact solutions used as end-to-end oracles: the collapsing cylinder and
//! the static catenoids `r = a cosh(z / a)` written as normal graphs over the
//! standard catenoid.

use serde::{Deserialize, Serialize};

use crate::evolution::{FieldState, Representation};
use crate::geometry::{regularity_bound, CatenoidParams, DEFAULT_REGULARITY_MARGIN};
use crate::grid::Grid;
use crate::hyperdual::HyperDual;
use crate::model::JetPoint;
use crate::{Error, Result};

/// Radius below which the cylinder counts as collapsed.
pub const DEFAULT_R_MIN: f64 = 1e-6;

/// Round cylinder of radius `r` in Minkowski space, `R R'' = -1 + R'^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylinderState {
    pub t: f64,
    pub r: f64,
    pub r_dot: f64,
}

/// `(R', R'')`.
pub fn cylinder_rhs(s: &CylinderState) -> Result<(f64, f64)> {
    if !(s.r > DEFAULT_R_MIN) {
        return Err(Error::CylinderCollapse { t: s.t, radius: s.r });
    }
    Ok((s.r_dot, (s.r_dot * s.r_dot - 1.0) / s.r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderRun {
    pub trajectory: Vec<CylinderState>,
    /// Linear extrapolation of `R` to zero from the last regular state.
    pub collapse_time: Option<f64>,
}

/// RK4 with fixed step `dt` until `t_max` or until `R` drops below `r_min`.
pub fn cylinder_evolve(s0: CylinderState, dt: f64, t_max: f64, r_min: f64) -> Result<CylinderRun> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let mut traj = vec![s0];
    let mut s = s0;
    let extrapolate = |s: &CylinderState| {
        if s.r_dot < 0.0 {
            Some(s.t + s.r / -s.r_dot)
        } else {
            None
        }
    };
    while s.t < t_max - 1e-12 * t_max.max(1.0) {
        let h = dt.min(t_max - s.t);
        let stage = |base: &CylinderState, k: (f64, f64), c: f64| CylinderState {
            t: base.t + c * h,
            r: base.r + c * h * k.0,
            r_dot: base.r_dot + c * h * k.1,
        };
        let step = (|| {
            let k1 = cylinder_rhs(&s)?;
            let k2 = cylinder_rhs(&stage(&s, k1, 0.5))?;
            let k3 = cylinder_rhs(&stage(&s, k2, 0.5))?;
            let k4 = cylinder_rhs(&stage(&s, k3, 1.0))?;
            Ok::<_, Error>(CylinderState {
                t: s.t + h,
                r: s.r + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                r_dot: s.r_dot + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            })
        })();
        match step {
            Ok(next) if next.r >= r_min => {
                s = next;
                traj.push(s);
            }
            Ok(next) => {
                traj.push(next);
                return Ok(CylinderRun { collapse_time: extrapolate(&s), trajectory: traj });
            }
            Err(_) => return Ok(CylinderRun { collapse_time: extrapolate(&s), trajectory: traj }),
        }
    }
    Ok(CylinderRun { trajectory: traj, collapse_time: None })
}

/// Defect of the graph equation for the `(a, 0)` catenoid:
/// `<y> + phi/<y> - a cosh((asinh y - y phi/<y>) / a)`.
fn chart_defect(a: f64, y: HyperDual, phi: HyperDual) -> HyperDual {
    let j = (y * y + 1.0).sqrt();
    let z = y.asinh() - y * phi / j;
    j + phi / j - (z / a).cosh() * a
}

fn defect(a: f64, y: f64, phi: f64) -> (f64, f64) {
    let d = chart_defect(a, HyperDual::constant(y), HyperDual::var(phi, 1.0, 0.0));
    (d.re, d.e1)
}

/// Graph value of the `(a, 0)` catenoid at `y`, by bisection on the regular
/// part of the chart followed by Newton polishing. `None` outside the chart.
pub fn family_phi(a: f64, y: f64) -> Option<f64> {
    let bound = regularity_bound(y, DEFAULT_REGULARITY_MARGIN);
    // expand a bracket around the standard catenoid, where the defect is monotone
    let f0 = defect(a, y, 0.0).0;
    if f0 == 0.0 {
        return Some(0.0);
    }
    let (mut inner, mut width) = (0.0, 1e-3);
    let (mut lo, mut hi) = 'search: loop {
        if width >= bound {
            return None;
        }
        for sign in [-1.0, 1.0] {
            let f = defect(a, y, sign * width).0;
            if f.is_finite() && f.signum() != f0.signum() {
                break 'search if sign < 0.0 { (-width, -inner) } else { (inner, width) };
            }
        }
        inner = width;
        width *= 2.0;
    };
    let f_lo = defect(a, y, lo).0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = defect(a, y, mid).0;
        if f.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut phi = 0.5 * (lo + hi);
    for _ in 0..4 {
        let (f, df) = defect(a, y, phi);
        if df == 0.0 {
            break;
        }
        phi -= f / df;
    }
    (phi.abs() < bound).then_some(phi)
}

/// Static second jet of the `(a, 0)` catenoid graph at `y`, with `y`
/// derivatives from implicit differentiation of the chart defect.
pub fn family_jet(a: f64, y: f64) -> Option<JetPoint> {
    let phi = family_phi(a, y)?;
    let partial = |sy: (f64, f64), sp: (f64, f64)| {
        chart_defect(a, HyperDual::var(y, sy.0, sy.1), HyperDual::var(phi, sp.0, sp.1))
    };
    let gyy = partial((1.0, 1.0), (0.0, 0.0));
    let gpp = partial((0.0, 0.0), (1.0, 1.0));
    let gyp = partial((1.0, 0.0), (0.0, 1.0));
    let (g_y, g_p) = (gyy.e1, gpp.e1);
    let phi_y = -g_y / g_p;
    let phi_yy = -(gyy.e12 + 2.0 * gyp.e12 * phi_y + gpp.e12 * phi_y * phi_y) / g_p;
    Some(JetPoint { y, phi, phi_y, phi_yy, ..JetPoint::zero(y) })
}

/// Static catenoid-family member as a physical state on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyGraph {
    pub params: CatenoidParams,
    pub state: FieldState,
    /// Number of leading nodes where the chart inversion succeeded; the
    /// remaining entries of `state.phi` are zero.
    pub valid_nodes: usize,
}

impl FamilyGraph {
    pub fn validity_window(&self, grid: &Grid) -> f64 {
        if self.valid_nodes == 0 {
            0.0
        } else {
            grid.y(self.valid_nodes - 1)
        }
    }
}

pub fn family_graph(p: CatenoidParams, grid: &Grid) -> Result<FamilyGraph> {
    if p.b() != 0.0 {
        return Err(Error::InvalidInput("only b = 0 members are even graphs".into()));
    }
    let mut phi = vec![0.0; grid.n()];
    let mut valid = 0;
    for (i, v) in phi.iter_mut().enumerate() {
        match family_phi(p.a(), grid.y(i)) {
            Some(x) => {
                *v = x;
                valid = i + 1;
            }
            None => break,
        }
    }
    if valid == 0 {
        return Err(Error::InvalidInput(format!("catenoid a = {} has no graph representation at the collar", p.a())));
    }
    Ok(FamilyGraph {
        params: p,
        state: FieldState { t: 0.0, phi, pi: vec![0.0; grid.n()], representation: Representation::Physical },
        valid_nodes: valid,
    })
}
