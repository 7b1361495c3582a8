//! Method-of-lines integration of the graph equation on the half line.
//!
//! The state is stepped in the weighted variables `(phi~, pi~)` with
//! `phi~ = <y>^{1/2} phi`, so the linear part is the flat wave operator plus
//! the potential of [`crate::spectral::potential`]. At every node the
//! quasilinear equation is solved for `phi~_tt` through the affine split of
//! [`crate::model::quasilinear_split`]. Spatial derivatives are fourth-order
//! central differences with even reflection at `y = 0`; time stepping is the
//! classical four-stage Runge-Kutta scheme.

mod data;

pub use data::{initial_data, DataSpec, Profile};

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::geometry::{regularity_bound, DEFAULT_REGULARITY_MARGIN};
use crate::grid::{Grid, OuterGhost, Parity, GHOST};
use crate::model::{self, quasilinear_split};
use crate::spectral::SpectralBasis;
use crate::{jb, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representation {
    Physical,
    Weighted,
}

/// Cauchy data `(phi, d_t phi)` at time `t`, even in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub pi: Vec<f64>,
    pub representation: Representation,
}

impl FieldState {
    pub fn zero(grid: &Grid, representation: Representation) -> Self {
        Self {
            t: 0.0,
            phi: vec![0.0; grid.n()],
            pi: vec![0.0; grid.n()],
            representation,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.phi.iter().chain(&self.pi).all(|v| v.is_finite())
    }

    pub fn to_weighted(&self, grid: &Grid) -> FieldState {
        match self.representation {
            Representation::Weighted => self.clone(),
            Representation::Physical => FieldState {
                t: self.t,
                phi: model::to_weighted(&self.phi, grid),
                pi: model::to_weighted(&self.pi, grid),
                representation: Representation::Weighted,
            },
        }
    }

    pub fn to_physical(&self, grid: &Grid) -> FieldState {
        match self.representation {
            Representation::Physical => self.clone(),
            Representation::Weighted => FieldState {
                t: self.t,
                phi: model::from_weighted(&self.phi, grid),
                pi: model::from_weighted(&self.pi, grid),
                representation: Representation::Physical,
            },
        }
    }

    pub fn to_representation(&self, grid: &Grid, r: Representation) -> FieldState {
        match r {
            Representation::Physical => self.to_physical(grid),
            Representation::Weighted => self.to_weighted(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Characteristic outflow `pi~ + d_y phi~ = 0` at the last node.
    Outgoing,
    /// The last node is held fixed.
    Frozen,
}

/// What to do once the causal cone of the data reaches `y_max - 5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contamination {
    Halt,
    Flag,
    Off,
}

/// Distance from `y_max` at which boundary influence is considered to start.
pub const CONTAMINATION_BUFFER: f64 = 5.0;

/// Amplitude below which data counts as zero for the support estimate.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub cfl: f64,
    pub t_max: f64,
    pub hyperbolicity_floor: f64,
    pub regularity_margin: f64,
    pub boundary: Boundary,
    pub linear_only: bool,
    pub snapshot_stride: usize,
    pub contamination: Contamination,
    /// Radius containing the data; estimated from the initial state when `None`.
    pub support_radius: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            t_max: 10.0,
            hyperbolicity_floor: 1e-6,
            regularity_margin: DEFAULT_REGULARITY_MARGIN,
            boundary: Boundary::Outgoing,
            linear_only: false,
            snapshot_stride: 10,
            contamination: Contamination::Flag,
            support_radius: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidInput(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!("t_max must be finite and nonnegative, got {}", self.t_max)));
        }
        if !(self.regularity_margin >= 0.0 && self.regularity_margin < 1.0) {
            return Err(Error::InvalidInput("regularity margin must lie in [0, 1)".into()));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidInput("snapshot stride must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TerminationReason {
    Completed,
    Regularity { y: f64, phi: f64 },
    Hyperbolicity { y: f64, coefficient: f64 },
    BoundaryContamination,
    ObserverStop(String),
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub reason: TerminationReason,
    pub t: f64,
    pub steps: usize,
    /// Time at which the causal cone of the data reaches `y_max - 5`.
    pub contamination_time: f64,
}

/// Read-only view handed to observers; arrays are in weighted variables.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub phi: &'a [f64],
    pub pi: &'a [f64],
    /// `d_t pi~` at this state.
    pub accel: &'a [f64],
    /// `<y>^{1/2} F` at this state.
    pub source: &'a [f64],
    pub grid: &'a Grid,
}

pub trait Observer {
    fn observe(&mut self, snap: &Snapshot) -> ControlFlow<String>;
}

impl<F: FnMut(&Snapshot) -> ControlFlow<String>> Observer for F {
    fn observe(&mut self, snap: &Snapshot) -> ControlFlow<String> {
        self(snap)
    }
}

#[derive(Debug, Clone, Copy)]
struct NodeCoef {
    y: f64,
    sqrt_jb: f64,
    w: f64,
    w1: f64,
    w2: f64,
    v: f64,
    bound: f64,
}

/// Time derivatives of the weighted state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    pub dphi: Vec<f64>,
    pub dpi: Vec<f64>,
    pub source: Vec<f64>,
}

pub struct Evolver {
    grid: Grid,
    config: EvolutionConfig,
    nodes: Vec<NodeCoef>,
    pad_phi: Vec<f64>,
    pad_pi: Vec<f64>,
    phi_y: Vec<f64>,
    phi_yy: Vec<f64>,
    pi_y: Vec<f64>,
    /// `(g_d, quadrature-weighted g_d)` of a ground state projected out after every step.
    mode_filter: Option<(Vec<f64>, Vec<f64>)>,
}

fn guard_error(e: Error) -> TerminationReason {
    match e {
        Error::Regularity { y, phi, .. } => TerminationReason::Regularity { y, phi },
        Error::HyperbolicityLoss { y, coefficient } => TerminationReason::Hyperbolicity { y, coefficient },
        _ => TerminationReason::NonFinite,
    }
}

impl Evolver {
    pub fn new(grid: Grid, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        let nodes = (0..grid.n())
            .map(|i| {
                let y = grid.y(i);
                let (w, w1, w2) = model::inverse_weight_derivatives(y);
                NodeCoef {
                    y,
                    sqrt_jb: jb(y).sqrt(),
                    w,
                    w1,
                    w2,
                    v: model::weighted_potential(y),
                    bound: regularity_bound(y, config.regularity_margin),
                }
            })
            .collect();
        let n = grid.n();
        Ok(Self {
            grid,
            config,
            nodes,
            pad_phi: vec![0.0; n + 2 * GHOST],
            pad_pi: vec![0.0; n + 2 * GHOST],
            phi_y: vec![0.0; n],
            phi_yy: vec![0.0; n],
            pi_y: vec![0.0; n],
            mode_filter: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    /// Removes the ground-state component of both fields after every step,
    /// so that roundoff does not seed the unstable mode. Linear runs only,
    /// since only the linear flow leaves the continuous subspace invariant.
    pub fn set_mode_filter(&mut self, basis: &SpectralBasis) -> Result<()> {
        if !self.config.linear_only {
            return Err(Error::InvalidInput("the ground-state filter needs a linear run".into()));
        }
        if basis.grid != self.grid {
            return Err(Error::InvalidInput("filter basis lives on a different grid".into()));
        }
        let weighted = basis.quad_weights.iter().zip(&basis.g_d).map(|(w, g)| w * g).collect();
        self.mode_filter = Some((basis.g_d.clone(), weighted));
        Ok(())
    }

    pub fn clear_mode_filter(&mut self) {
        self.mode_filter = None;
    }

    fn apply_filter(&self, phi: &mut [f64], pi: &mut [f64]) {
        if let Some((g, wg)) = &self.mode_filter {
            for f in [phi, pi] {
                let c: f64 = f.iter().zip(wg).map(|(a, b)| a * b).sum();
                for (v, gi) in f.iter_mut().zip(g) {
                    *v -= c * gi;
                }
            }
        }
    }

    fn derivatives(&mut self, phi: &[f64], pi: &[f64]) {
        let outer = OuterGhost::Extrapolate;
        self.grid.pad_into(phi, Parity::Even, outer, &mut self.pad_phi);
        self.grid.pad_into(pi, Parity::Even, outer, &mut self.pad_pi);
        self.grid.d1_padded(&self.pad_phi, &mut self.phi_y);
        self.grid.d2_padded(&self.pad_phi, &mut self.phi_yy);
        self.grid.d1_padded(&self.pad_pi, &mut self.pi_y);
    }

    /// Writes `(d_t phi~, d_t pi~)` and `<y>^{1/2} F` for a weighted state.
    pub fn rhs_into(
        &mut self,
        phi: &[f64],
        pi: &[f64],
        dphi: &mut [f64],
        dpi: &mut [f64],
        mut source: Option<&mut [f64]>,
    ) -> Result<()> {
        self.derivatives(phi, pi);
        let n = self.grid.n();
        let linear = self.config.linear_only;
        let floor = self.config.hyperbolicity_floor;
        for i in 0..n {
            let c = self.nodes[i];
            dphi[i] = pi[i];
            let lin = self.phi_yy[i] + c.v * phi[i];
            if linear {
                dpi[i] = lin;
                if let Some(s) = source.as_deref_mut() {
                    s[i] = 0.0;
                }
                continue;
            }
            let p = c.w * phi[i];
            if !(p.abs() < c.bound) {
                return Err(Error::Regularity { y: c.y, phi: p, bound: c.bound });
            }
            let p_t = c.w * pi[i];
            let p_y = c.w * self.phi_y[i] + c.w1 * phi[i];
            let p_ty = c.w * self.pi_y[i] + c.w1 * pi[i];
            let p_yy = c.w * self.phi_yy[i] + 2.0 * c.w1 * self.phi_y[i] + c.w2 * phi[i];
            let split = quasilinear_split(c.y, p, p_t, p_y);
            let principal = split.principal_tt();
            if !(principal.abs() >= floor) {
                return Err(Error::HyperbolicityLoss { y: c.y, coefficient: principal });
            }
            let rest = c.sqrt_jb * (split.f0 + split.c_ty * p_ty + split.c_yy * p_yy);
            let acc = (lin - rest) / (1.0 + split.c_tt);
            dpi[i] = acc;
            if let Some(s) = source.as_deref_mut() {
                s[i] = rest + split.c_tt * acc;
            }
        }
        match self.config.boundary {
            Boundary::Outgoing => {
                let h = self.grid.h();
                let back = |f: &[f64]| {
                    (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5])
                        / (12.0 * h)
                };
                dphi[n - 1] = -back(phi);
                dpi[n - 1] = -back(pi);
            }
            Boundary::Frozen => {
                dphi[n - 1] = 0.0;
                dpi[n - 1] = 0.0;
            }
        }
        Ok(())
    }

    /// Time derivatives of a state in either representation; the result is
    /// always in weighted variables.
    pub fn rhs(&mut self, state: &FieldState) -> Result<Derivatives> {
        let w = state.to_weighted(&self.grid);
        let n = self.grid.n();
        let mut d = Derivatives { dphi: vec![0.0; n], dpi: vec![0.0; n], source: vec![0.0; n] };
        self.rhs_into(&w.phi, &w.pi, &mut d.dphi, &mut d.dpi, Some(&mut d.source))?;
        Ok(d)
    }

    /// Largest characteristic speed over the grid.
    pub fn max_speed(&self, phi: &[f64], pi: &[f64]) -> Result<f64> {
        if self.config.linear_only {
            return Ok(1.0);
        }
        let phi_y = self.grid.d1(phi, Parity::Even, OuterGhost::Extrapolate);
        let mut s: f64 = 1.0;
        for (i, c) in self.nodes.iter().enumerate() {
            let p = c.w * phi[i];
            let p_t = c.w * pi[i];
            let p_y = c.w * phi_y[i] + c.w1 * phi[i];
            match model::characteristic_speed(c.y, p, p_t, p_y) {
                Some(v) => s = s.max(v),
                None => {
                    let coefficient = quasilinear_split(c.y, p, p_t, p_y).principal_tt();
                    return Err(Error::HyperbolicityLoss { y: c.y, coefficient });
                }
            }
        }
        Ok(s)
    }

    pub fn stable_dt(&self, phi: &[f64], pi: &[f64]) -> Result<f64> {
        Ok(self.config.cfl * self.grid.h() / self.max_speed(phi, pi)?.max(1.0))
    }

    fn rk4_weighted(&mut self, phi: &mut [f64], pi: &mut [f64], dt: f64, k1: Option<(&[f64], &[f64])>) -> Result<()> {
        let n = self.grid.n();
        let (mut k1p, mut k1v) = (vec![0.0; n], vec![0.0; n]);
        match k1 {
            Some((a, b)) => {
                k1p.copy_from_slice(a);
                k1v.copy_from_slice(b);
            }
            None => self.rhs_into(phi, pi, &mut k1p, &mut k1v, None)?,
        }
        let mut tp = vec![0.0; n];
        let mut tv = vec![0.0; n];
        let (mut k2p, mut k2v) = (vec![0.0; n], vec![0.0; n]);
        let (mut k3p, mut k3v) = (vec![0.0; n], vec![0.0; n]);
        let (mut k4p, mut k4v) = (vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            tp[i] = phi[i] + 0.5 * dt * k1p[i];
            tv[i] = pi[i] + 0.5 * dt * k1v[i];
        }
        self.rhs_into(&tp, &tv, &mut k2p, &mut k2v, None)?;
        for i in 0..n {
            tp[i] = phi[i] + 0.5 * dt * k2p[i];
            tv[i] = pi[i] + 0.5 * dt * k2v[i];
        }
        self.rhs_into(&tp, &tv, &mut k3p, &mut k3v, None)?;
        for i in 0..n {
            tp[i] = phi[i] + dt * k3p[i];
            tv[i] = pi[i] + dt * k3v[i];
        }
        self.rhs_into(&tp, &tv, &mut k4p, &mut k4v, None)?;
        let c = dt / 6.0;
        for i in 0..n {
            phi[i] += c * (k1p[i] + 2.0 * (k2p[i] + k3p[i]) + k4p[i]);
            pi[i] += c * (k1v[i] + 2.0 * (k2v[i] + k3v[i]) + k4v[i]);
        }
        Ok(())
    }

    /// One RK4 step of size `dt` (which may be negative).
    pub fn step_with_dt(&mut self, state: &FieldState, dt: f64) -> Result<FieldState> {
        let w = state.to_weighted(&self.grid);
        let (mut phi, mut pi) = (w.phi, w.pi);
        self.rk4_weighted(&mut phi, &mut pi, dt, None)?;
        self.apply_filter(&mut phi, &mut pi);
        let out = FieldState { t: state.t + dt, phi, pi, representation: Representation::Weighted };
        Ok(out.to_representation(&self.grid, state.representation))
    }

    /// One step with the CFL-limited `dt`, clipped so as not to pass `t_max`.
    pub fn step(&mut self, state: &FieldState) -> Result<FieldState> {
        let w = state.to_weighted(&self.grid);
        let mut dt = self.stable_dt(&w.phi, &w.pi)?;
        let left = self.config.t_max - state.t;
        if left > 0.0 && dt > left {
            dt = left;
        }
        self.step_with_dt(state, dt)
    }

    /// Radius beyond which the weighted data is below [`SUPPORT_THRESHOLD`].
    pub fn support_radius(&self, phi: &[f64], pi: &[f64]) -> f64 {
        (0..self.grid.n())
            .rev()
            .find(|&i| phi[i].abs() + pi[i].abs() > SUPPORT_THRESHOLD)
            .map_or(0.0, |i| self.grid.y(i))
    }

    /// Runs until `t_max` or until a guard fires. Observers see every
    /// `snapshot_stride`-th state, including the initial one and the last
    /// regular one.
    pub fn evolve(&mut self, state: &FieldState, observers: &mut [&mut dyn Observer]) -> (FieldState, Termination) {
        let rep = state.representation;
        let w = state.to_weighted(&self.grid);
        let n = self.grid.n();
        let (mut phi, mut pi, mut t) = (w.phi, w.pi, w.t);
        let radius = self.config.support_radius.unwrap_or_else(|| self.support_radius(&phi, &pi));
        let contamination_time = self.grid.y_max() - CONTAMINATION_BUFFER - radius;
        let (mut accel, mut dphi, mut source) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut steps = 0usize;
        let stride = self.config.snapshot_stride;
        let t_end = self.config.t_max;
        let eps_t = 1e-12 * t_end.max(1.0);

        let reason = loop {
            if !(phi.iter().chain(&pi).all(|v| v.is_finite())) {
                break TerminationReason::NonFinite;
            }
            if let Err(e) = self.rhs_into(&phi, &pi, &mut dphi, &mut accel, Some(&mut source)) {
                break guard_error(e);
            }
            let done = t >= t_end - eps_t;
            if steps.is_multiple_of(stride) || done {
                let snap = Snapshot { step: steps, t, phi: &phi, pi: &pi, accel: &accel, source: &source, grid: &self.grid };
                let mut stop = None;
                for o in observers.iter_mut() {
                    if let ControlFlow::Break(msg) = o.observe(&snap) {
                        stop = Some(msg);
                        break;
                    }
                }
                if let Some(msg) = stop {
                    break TerminationReason::ObserverStop(msg);
                }
            }
            if done {
                break TerminationReason::Completed;
            }
            if self.config.contamination == Contamination::Halt && t >= contamination_time {
                break TerminationReason::BoundaryContamination;
            }
            let mut dt = match self.stable_dt(&phi, &pi) {
                Ok(dt) => dt,
                Err(e) => break guard_error(e),
            };
            if t + dt > t_end - eps_t {
                dt = t_end - t;
            }
            let (k1p, k1v) = (dphi.clone(), accel.clone());
            let (old_phi, old_pi) = (phi.clone(), pi.clone());
            if let Err(e) = self.rk4_weighted(&mut phi, &mut pi, dt, Some((&k1p, &k1v))) {
                phi = old_phi;
                pi = old_pi;
                break guard_error(e);
            }
            self.apply_filter(&mut phi, &mut pi);
            t = if (t + dt - t_end).abs() <= eps_t { t_end } else { t + dt };
            steps += 1;
        };

        let last = FieldState { t, phi, pi, representation: Representation::Weighted };
        let term = Termination { reason, t, steps, contamination_time };
        (last.to_representation(&self.grid, rep), term)
    }
}
