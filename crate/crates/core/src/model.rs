//! Closed-form right-hand side of the graph equation
//!
//! ```text
//! -phi_tt + phi_yy + y/<y>^2 phi_y + 2/<y>^4 phi = F = Q2 + Q3 + Q4 + S2 + S3 + S4
//! ```
//!
//! together with its weighted form for `phi~ = <y>^{1/2} phi` and the
//! algebraic identities used to certify the transcription of `F`.
//!
//! `F` is evaluated along two independent routes: [`nonlinearity_terms`]
//! follows the quasilinear/semilinear split term by term, while
//! [`quasilinear_split`] collects the same polynomial by second derivative.
//! The evolution uses the second route because it exposes the coefficient of
//! `phi_tt` needed for the pointwise solve.

use serde::{Deserialize, Serialize};

use crate::grid::Grid;
use crate::hyperdual::HyperDual;
use crate::{jb, Error, Result};

/// Second jet of a field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct JetPoint {
    pub y: f64,
    pub phi: f64,
    pub phi_t: f64,
    pub phi_y: f64,
    pub phi_tt: f64,
    pub phi_ty: f64,
    pub phi_yy: f64,
}

impl JetPoint {
    pub fn zero(y: f64) -> Self {
        Self { y, ..Default::default() }
    }

    pub fn is_finite(&self) -> bool {
        [self.y, self.phi, self.phi_t, self.phi_y, self.phi_tt, self.phi_ty, self.phi_yy]
            .iter()
            .all(|v| v.is_finite())
    }

    /// Interprets `self` as the jet of `phi~` and returns the jet of
    /// `phi = <y>^{-1/2} phi~`.
    pub fn from_weighted(&self) -> JetPoint {
        let (w, w1, w2) = inverse_weight_derivatives(self.y);
        JetPoint {
            y: self.y,
            phi: w * self.phi,
            phi_t: w * self.phi_t,
            phi_y: w * self.phi_y + w1 * self.phi,
            phi_tt: w * self.phi_tt,
            phi_ty: w * self.phi_ty + w1 * self.phi_t,
            phi_yy: w * self.phi_yy + 2.0 * w1 * self.phi_y + w2 * self.phi,
        }
    }

    /// Jet of `phi~ = <y>^{1/2} phi` from the jet of `phi`.
    pub fn to_weighted(&self) -> JetPoint {
        let (w, w1, w2) = weight_derivatives(self.y);
        JetPoint {
            y: self.y,
            phi: w * self.phi,
            phi_t: w * self.phi_t,
            phi_y: w * self.phi_y + w1 * self.phi,
            phi_tt: w * self.phi_tt,
            phi_ty: w * self.phi_ty + w1 * self.phi_t,
            phi_yy: w * self.phi_yy + 2.0 * w1 * self.phi_y + w2 * self.phi,
        }
    }
}

/// `(w, w', w'')` for `w = <y>^{1/2}`.
pub fn weight_derivatives(y: f64) -> (f64, f64, f64) {
    let q = 1.0 + y * y;
    let w = q.powf(0.25);
    let w1 = 0.5 * y * q.powf(-0.75);
    let w2 = q.powf(-1.75) * (0.5 - 0.25 * y * y);
    (w, w1, w2)
}

/// `(w, w', w'')` for `w = <y>^{-1/2}`.
pub fn inverse_weight_derivatives(y: f64) -> (f64, f64, f64) {
    let q = 1.0 + y * y;
    let w = q.powf(-0.25);
    let w1 = -0.5 * y * q.powf(-1.25);
    let w2 = -0.5 * q.powf(-1.25) + 1.25 * y * y * q.powf(-2.25);
    (w, w1, w2)
}

/// Potential of the weighted equation, `(6 + y^2) / (4 <y>^4)`.
#[inline]
pub fn weighted_potential(y: f64) -> f64 {
    let q = 1.0 + y * y;
    (6.0 + y * y) / (4.0 * q * q)
}

/// The six pieces of `F`, split by homogeneity degree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
}

impl Nonlinearity {
    pub fn total(&self) -> f64 {
        self.q2 + self.q3 + self.q4 + self.s2 + self.s3 + self.s4
    }
}

pub fn nonlinearity_terms(j: &JetPoint) -> Nonlinearity {
    let JetPoint { y, phi, phi_t, phi_y, phi_tt, phi_ty, phi_yy } = *j;
    let j2 = 1.0 + y * y;
    let j4 = j2 * j2;
    let j6 = j4 * j2;
    let j8 = j4 * j4;

    let q2 = -2.0 * phi / j2 * phi_tt;
    let q3 = phi * phi / j4 * phi_yy + phi_t * phi_t * phi_yy - 2.0 * phi_t * phi_y * phi_ty
        + phi_y * phi_y * phi_tt;
    let q4 = phi * phi / j4
        * ((2.0 * phi / j2 - phi * phi / j4 - phi_y * phi_y) * phi_tt
            + 2.0 * phi_y * phi_t * phi_ty
            - phi_t * phi_t * phi_yy);

    let s2 = 4.0 * phi * phi / j6 + 4.0 * y * phi * phi_y / j4 - phi_y * phi_y / j2;
    let s3 = y * phi * phi / j6 * phi_y - 2.0 * phi.powi(3) / j8
        - (3.0 * phi / j4 + y * phi_y / j2) * phi_y * phi_y
        + (2.0 * phi / j4 + y * phi_y / j2) * phi_t * phi_t;
    let s4 = -(4.0 * y * phi / j4 + y * phi * phi / j6) * phi_y * phi_t * phi_t
        - (4.0 * phi * phi / j6 - 2.0 * phi.powi(3) / j8) * phi_t * phi_t;

    Nonlinearity { q2, q3, q4, s2, s3, s4 }
}

/// `F = f0 + c_tt phi_tt + c_ty phi_ty + c_yy phi_yy` with coefficients that
/// depend on `(y, phi, phi_t, phi_y)` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasilinearSplit {
    pub f0: f64,
    pub c_tt: f64,
    pub c_ty: f64,
    pub c_yy: f64,
}

impl QuasilinearSplit {
    pub fn eval(&self, phi_tt: f64, phi_ty: f64, phi_yy: f64) -> f64 {
        self.f0 + self.c_tt * phi_tt + self.c_ty * phi_ty + self.c_yy * phi_yy
    }

    /// Coefficient of `phi_tt` in the full equation `-phi_tt + ... - F = 0`.
    pub fn principal_tt(&self) -> f64 {
        -1.0 - self.c_tt
    }
}

pub fn quasilinear_split(y: f64, phi: f64, phi_t: f64, phi_y: f64) -> QuasilinearSplit {
    let j2 = 1.0 + y * y;
    let p = phi / j2;
    let p2 = p * p;
    let (ut, uy) = (phi_t * phi_t, phi_y * phi_y);

    // semilinear part, grouped as alpha + beta phi_t^2
    let alpha = p * (4.0 * p - 2.0 * p2) / j2
        + phi_y * (4.0 * y * p + y * p2) / j2
        - uy * (1.0 + 3.0 * p) / j2
        - y * uy * phi_y / j2;
    let beta = (2.0 * p - 4.0 * p2 + 2.0 * p2 * p) / j2 + y * phi_y * (1.0 - 4.0 * p - p2) / j2;

    QuasilinearSplit {
        f0: alpha + beta * ut,
        c_tt: -2.0 * p + uy + p2 * (2.0 * p - p2 - uy),
        c_ty: -2.0 * phi_t * phi_y * (1.0 - p2),
        c_yy: p2 + ut * (1.0 - p2),
    }
}

/// `LHS - RHS` of the graph equation; vanishes on exact solutions.
pub fn equation_residual(j: &JetPoint) -> f64 {
    let j2 = 1.0 + j.y * j.y;
    let linear = -j.phi_tt + j.phi_yy + j.y / j2 * j.phi_y + 2.0 / (j2 * j2) * j.phi;
    linear - nonlinearity_terms(j).total()
}

/// Coefficient `c` of `phi_tt` once the equation is written as
/// `c phi_tt = (terms free of phi_tt)`. Equals `-1` at the zero state and
/// `-(1 - p^2)(B^2 + phi_y^2)` in general, with `p = phi/<y>^2`, `B = 1 - p`.
pub fn principal_tt_coefficient(y: f64, phi: f64, phi_t: f64, phi_y: f64, floor: f64) -> Result<f64> {
    let c = quasilinear_split(y, phi, phi_t, phi_y).principal_tt();
    if !(c.abs() >= floor) {
        return Err(Error::HyperbolicityLoss { y, coefficient: c });
    }
    Ok(c)
}

/// Largest characteristic speed `|dy/dt|` of the frozen-coefficient
/// principal symbol, or `None` when the symbol is not hyperbolic.
pub fn characteristic_speed(y: f64, phi: f64, phi_t: f64, phi_y: f64) -> Option<f64> {
    let p = phi / (1.0 + y * y);
    let b = 1.0 - p;
    let k = b * b * (1.0 - phi_t * phi_t) + phi_y * phi_y;
    let a = b * b + phi_y * phi_y;
    if !(k > 0.0 && a > 0.0) {
        return None;
    }
    Some(((phi_t * phi_y).abs() + k.sqrt()) / a)
}

/// Pointwise multiplication by `<y>^{1/2}`.
pub fn to_weighted(phi: &[f64], grid: &Grid) -> Vec<f64> {
    phi.iter()
        .enumerate()
        .map(|(i, v)| v * jb(grid.y(i)).sqrt())
        .collect()
}

/// Pointwise division by `<y>^{1/2}`.
pub fn from_weighted(phi_w: &[f64], grid: &Grid) -> Vec<f64> {
    phi_w
        .iter()
        .enumerate()
        .map(|(i, v)| v / jb(grid.y(i)).sqrt())
        .collect()
}

/// Residual of the weighted equation
/// `-phi~_tt + phi~_yy + V phi~ - <y>^{1/2} F(phi)` for the jet of `phi~`.
pub fn weighted_equation_residual(jw: &JetPoint) -> f64 {
    let phys = jw.from_weighted();
    -jw.phi_tt + jw.phi_yy + weighted_potential(jw.y) * jw.phi
        - jb(jw.y).sqrt() * nonlinearity_terms(&phys).total()
}

/// Time and space derivatives of the three divergence terms in the cubic
/// null-structure identity, for a pair of fields `(phi, psi)`:
/// `d_t[phi_t^2 psi_t]`, `d_y[phi_y phi_t psi_t]`, `d_t[phi_y^2 psi_t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullFluxes {
    pub dt_phit2_psit: f64,
    pub dy_phiy_phit_psit: f64,
    pub dt_phiy2_psit: f64,
}

impl NullFluxes {
    /// Fluxes obtained by expanding the product rule on the two jets.
    pub fn product_rule(phi: &JetPoint, psi: &JetPoint) -> Self {
        Self {
            dt_phit2_psit: 2.0 * phi.phi_t * phi.phi_tt * psi.phi_t + phi.phi_t.powi(2) * psi.phi_tt,
            dy_phiy_phit_psit: phi.phi_yy * phi.phi_t * psi.phi_t
                + phi.phi_y * phi.phi_ty * psi.phi_t
                + phi.phi_y * phi.phi_t * psi.phi_ty,
            dt_phiy2_psit: 2.0 * phi.phi_y * phi.phi_ty * psi.phi_t + phi.phi_y.powi(2) * psi.phi_tt,
        }
    }
}

/// `RHS - LHS` of the gradient-structure identity
///
/// ```text
/// d_t[phi_t^2 psi_t] - 2 d_y[phi_y phi_t psi_t] + d_t[phi_y^2 psi_t]
///     + phi_t^2 (psi_yy - psi_tt) + 2 (phi_yy - phi_tt) phi_t psi_t
///   = phi_t^2 psi_yy - 2 phi_y phi_t psi_ty + phi_y^2 psi_tt
/// ```
///
/// with the divergence terms supplied by the caller. For `psi = phi` this is
/// the three-term identity behind the cubic null condition.
pub fn null_identity_defect(phi: &JetPoint, psi: &JetPoint, fluxes: &NullFluxes) -> f64 {
    let lhs = fluxes.dt_phit2_psit - 2.0 * fluxes.dy_phiy_phit_psit + fluxes.dt_phiy2_psit
        + phi.phi_t.powi(2) * (psi.phi_yy - psi.phi_tt)
        + 2.0 * (phi.phi_yy - phi.phi_tt) * phi.phi_t * psi.phi_t;
    let rhs = phi.phi_t.powi(2) * psi.phi_yy - 2.0 * phi.phi_y * phi.phi_t * psi.phi_ty
        + phi.phi_y.powi(2) * psi.phi_tt;
    rhs - lhs
}

/// Auxiliary quantities of the area Lagrangian `L = A sqrt(K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianAux {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

impl LagrangianAux {
    pub fn new(j: &JetPoint) -> Self {
        let jy = jb(j.y);
        let b = 1.0 - j.phi / (jy * jy);
        Self {
            a: jy + j.phi / jy,
            b,
            k: b * b * (1.0 - j.phi_t * j.phi_t) + j.phi_y * j.phi_y,
        }
    }

    pub fn density(&self) -> f64 {
        self.a * self.k.sqrt()
    }
}

fn lagrangian<T>(y: T, phi: T, phi_t: T, phi_y: T) -> T
where
    T: Copy
        + std::ops::Add<Output = T>
        + std::ops::Sub<Output = T>
        + std::ops::Mul<Output = T>
        + std::ops::Div<Output = T>
        + LagrangianScalar,
{
    let one = T::from_f64(1.0);
    let j = (one + y * y).sqrt_();
    let a = j + phi / j;
    let b = one - phi / (j * j);
    let k = b * b * (one - phi_t * phi_t) + phi_y * phi_y;
    a * k.sqrt_()
}

trait LagrangianScalar {
    fn from_f64(v: f64) -> Self;
    fn sqrt_(self) -> Self;
}

impl LagrangianScalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::constant(v)
    }
    fn sqrt_(self) -> Self {
        self.sqrt()
    }
}

/// Both Lagrangian checks at one jet; absolute values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianDefects {
    /// Regrouped quasilinear side minus semilinear side, plus the equation residual.
    pub regrouped: f64,
    /// `E K^{3/2} / (<y> B)` plus the equation residual, where `E` is the
    /// Euler-Lagrange expression of `L` obtained by exact differentiation.
    pub euler_lagrange: f64,
    /// Magnitude of the largest term involved, for relative comparisons.
    pub scale: f64,
}

impl LagrangianDefects {
    pub fn relative(&self) -> f64 {
        self.regrouped.abs().max(self.euler_lagrange.abs()) / (1.0 + self.scale)
    }
}

/// Euler-Lagrange expression `dL/dphi - D_t(dL/dphi_t) - D_y(dL/dphi_y)` of the
/// area density, evaluated along the jet by hyper-dual differentiation.
pub fn euler_lagrange_expression(j: &JetPoint) -> f64 {
    // variable order: y, phi, phi_t, phi_y
    let base = [j.y, j.phi, j.phi_t, j.phi_y];
    let second = |p: usize, q: usize| -> HyperDual {
        let mut v = [HyperDual::constant(0.0); 4];
        for (i, slot) in v.iter_mut().enumerate() {
            *slot = HyperDual::var(
                base[i],
                if i == p { 1.0 } else { 0.0 },
                if i == q { 1.0 } else { 0.0 },
            );
        }
        lagrangian(v[0], v[1], v[2], v[3])
    };
    let (y_, phi_, pt_, py_) = (0, 1, 2, 3);
    let l_t_phi = second(pt_, phi_);
    let l_phi = l_t_phi.e2;
    let l_tt = second(pt_, pt_).e12;
    let l_ty = second(pt_, py_).e12;
    let l_y_y = second(py_, y_).e12;
    let l_y_phi = second(py_, phi_).e12;
    let l_yy = second(py_, py_).e12;

    let dt_l_t = l_t_phi.e12 * j.phi_t + l_tt * j.phi_tt + l_ty * j.phi_ty;
    let dy_l_y = l_y_y + l_y_phi * j.phi_y + l_ty * j.phi_ty + l_yy * j.phi_yy;
    l_phi - dt_l_t - dy_l_y
}

pub fn lagrangian_defects(j: &JetPoint) -> Result<LagrangianDefects> {
    let aux = LagrangianAux::new(j);
    if !(aux.k > 0.0) || aux.b.abs() < 1e-12 {
        return Err(Error::NonLorentzian { y: j.y, k: aux.k, b: aux.b });
    }
    let JetPoint { y, phi, phi_t, phi_y, phi_tt, phi_ty, phi_yy } = *j;
    let j2 = 1.0 + y * y;
    let j4 = j2 * j2;
    let b = aux.b;
    let b2 = b * b;
    let ut = phi_t * phi_t;
    let uy = phi_y * phi_y;

    let quasi = (1.0 - phi * phi / j4)
        * (-phi_yy + ut * phi_yy + uy * phi_tt + b2 * phi_tt - 2.0 * phi_y * phi_t * phi_ty);
    let semi = y * phi_y / j2 * (uy + b2 * (1.0 - ut)) - b / j2 * (uy + b2 * (1.0 - ut))
        - (1.0 / j2 + phi / j4) * (2.0 * y * phi / j2 * phi_y * (1.0 - ut) - b2 * (1.0 - ut) - 2.0 * uy);
    let residual = equation_residual(j);
    let regrouped = quasi - semi + residual;

    let e = euler_lagrange_expression(j);
    let scaled = e * aux.k.powf(1.5) / (jb(y) * b);
    let euler_lagrange = scaled + residual;

    Ok(LagrangianDefects {
        regrouped,
        euler_lagrange,
        scale: quasi.abs().max(semi.abs()).max(scaled.abs()),
    })
}

/// Relative defect between the closed-form equation and the variational
/// derivation from the area Lagrangian; zero up to rounding.
pub fn lagrangian_oracle_defect(j: &JetPoint) -> Result<f64> {
    Ok(lagrangian_defects(j)?.relative())
}
