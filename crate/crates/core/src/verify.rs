//! Identity and oracle suite shared by the test-suite and the `verify`
//! subcommand. Every check reports a defect and the threshold it must stay
//! under.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evolution::{EvolutionConfig, Evolver, FieldState, Representation};
use crate::grid::{sup_norm, Grid, Parity};
use crate::hyperdual::HyperDual;
use crate::model::{
    equation_residual, lagrangian_oracle_defect, nonlinearity_terms, null_identity_defect, quasilinear_split,
    JetPoint, NullFluxes,
};
use crate::spectral::{apply_l, eta_scaling, eta_translation};
use crate::{jb, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value < threshold }
    }

    /// Passes when `value` lies in `[lo, hi]`; `threshold` records `hi`.
    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, threshold: hi, passed: value >= lo && value <= hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 7, samples: 1000 }
    }
}

/// `amp exp(alpha t + beta y) sin(gamma t + delta y + phase)`. The family is
/// closed under differentiation, so derivatives are exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub amp: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub phase: f64,
}

impl Wave {
    fn random(rng: &mut impl Rng) -> Self {
        Self {
            amp: rng.gen_range(-1.0..1.0),
            alpha: rng.gen_range(-1.0..1.0),
            beta: rng.gen_range(-1.0..1.0),
            gamma: rng.gen_range(-2.0..2.0),
            delta: rng.gen_range(-2.0..2.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn dt(&self) -> Self {
        Self { amp: self.amp * self.alpha.hypot(self.gamma), phase: self.phase + self.gamma.atan2(self.alpha), ..*self }
    }

    fn dy(&self) -> Self {
        Self { amp: self.amp * self.beta.hypot(self.delta), phase: self.phase + self.delta.atan2(self.beta), ..*self }
    }

    fn eval(&self, t: f64, y: f64) -> f64 {
        self.amp * (self.alpha * t + self.beta * y).exp() * (self.gamma * t + self.delta * y + self.phase).sin()
    }

    fn eval_hd(&self, t: HyperDual, y: HyperDual) -> HyperDual {
        (t * self.alpha + y * self.beta).exp() * (t * self.gamma + y * self.delta + self.phase).sin() * self.amp
    }
}

/// Sum of waves with the second jet evaluated from exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField(pub Vec<Wave>);

impl TestField {
    fn random(rng: &mut impl Rng) -> Self {
        Self((0..2).map(|_| Wave::random(rng)).collect())
    }

    fn map(&self, f: impl Fn(&Wave) -> Wave) -> Self {
        Self(self.0.iter().map(f).collect())
    }

    fn eval(&self, t: f64, y: f64) -> f64 {
        self.0.iter().map(|w| w.eval(t, y)).sum()
    }

    fn eval_hd(&self, t: HyperDual, y: HyperDual) -> HyperDual {
        self.0.iter().fold(HyperDual::constant(0.0), |acc, w| acc + w.eval_hd(t, y))
    }

    pub fn jet(&self, t: f64, y: f64) -> JetPoint {
        let d = |f: &dyn Fn(&Wave) -> Wave| self.map(f).eval(t, y);
        JetPoint {
            y,
            phi: self.eval(t, y),
            phi_t: d(&|w| w.dt()),
            phi_y: d(&|w| w.dy()),
            phi_tt: d(&|w| w.dt().dt()),
            phi_ty: d(&|w| w.dt().dy()),
            phi_yy: d(&|w| w.dy().dy()),
        }
    }
}

/// Divergence terms of the null identity by automatic differentiation of the
/// products, independent of any product-rule expansion.
pub fn ad_fluxes(phi: &TestField, psi: &TestField, t: f64, y: f64) -> NullFluxes {
    let (phi_t, phi_y, psi_t) = (phi.map(|w| w.dt()), phi.map(|w| w.dy()), psi.map(|w| w.dt()));
    let along_t = (HyperDual::var(t, 1.0, 0.0), HyperDual::constant(y));
    let along_y = (HyperDual::constant(t), HyperDual::var(y, 1.0, 0.0));
    let g1 = |(t, y): (HyperDual, HyperDual)| {
        let a = phi_t.eval_hd(t, y);
        a * a * psi_t.eval_hd(t, y)
    };
    let g2 = |(t, y): (HyperDual, HyperDual)| phi_y.eval_hd(t, y) * phi_t.eval_hd(t, y) * psi_t.eval_hd(t, y);
    let g3 = |(t, y): (HyperDual, HyperDual)| {
        let b = phi_y.eval_hd(t, y);
        b * b * psi_t.eval_hd(t, y)
    };
    NullFluxes { dt_phit2_psit: g1(along_t).e1, dy_phiy_phit_psit: g2(along_y).e1, dt_phiy2_psit: g3(along_t).e1 }
}

fn null_scale(phi: &JetPoint, psi: &JetPoint, f: &NullFluxes) -> f64 {
    f.dt_phit2_psit.abs()
        + 2.0 * f.dy_phiy_phit_psit.abs()
        + f.dt_phiy2_psit.abs()
        + (phi.phi_t.powi(2) * psi.phi_yy).abs()
        + (2.0 * phi.phi_y * phi.phi_t * psi.phi_ty).abs()
        + (phi.phi_y.powi(2) * psi.phi_tt).abs()
        + (phi.phi_t.powi(2) * psi.phi_tt).abs()
        + (2.0 * (phi.phi_yy - phi.phi_tt) * phi.phi_t * psi.phi_t).abs()
}

/// Largest relative null-identity defect over random pairs; the first
/// quarter of the samples use `psi = phi`.
pub fn null_identity_check(cfg: &SuiteConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for k in 0..cfg.samples {
        let phi = TestField::random(&mut rng);
        let psi = if k < cfg.samples / 4 { phi.clone() } else { TestField::random(&mut rng) };
        let (t, y) = (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0));
        let (a, b) = (phi.jet(t, y), psi.jet(t, y));
        let f = ad_fluxes(&phi, &psi, t, y);
        let scale = null_scale(&a, &b, &f);
        if scale > 0.0 {
            worst = worst.max(null_identity_defect(&a, &b, &f).abs() / scale);
        }
    }
    worst
}

fn random_jet(rng: &mut impl Rng, bound: f64) -> JetPoint {
    let mut v = || rng.gen_range(-bound..bound);
    let (phi, phi_t, phi_y, phi_tt, phi_ty, phi_yy) = (v(), v(), v(), v(), v(), v());
    JetPoint { y: rng.gen_range(0.0..5.0), phi, phi_t, phi_y, phi_tt, phi_ty, phi_yy }
}

/// Largest relative Lagrangian defect over random jets with entries in `[-0.3, 0.3]`.
pub fn lagrangian_check(cfg: &SuiteConfig) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5a5a);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.samples {
        worst = worst.max(lagrangian_oracle_defect(&random_jet(&mut rng, 0.3))?.abs());
    }
    Ok(worst)
}

/// Largest disagreement between the term-by-term nonlinearity and its
/// quasilinear split, relative to `1 + |F|`.
pub fn transcription_check(cfg: &SuiteConfig) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xa5a5);
    (0..cfg.samples)
        .map(|_| {
            let j = random_jet(&mut rng, 0.5);
            let a = nonlinearity_terms(&j).total();
            let b = quasilinear_split(j.y, j.phi, j.phi_t, j.phi_y).eval(j.phi_tt, j.phi_ty, j.phi_yy);
            (a - b).abs() / (1.0 + a.abs())
        })
        .fold(0.0, f64::max)
}

/// `||L eta||_inf / ||eta||_inf` over `[0, window]` on a grid of spacing `h`
/// that extends past the window, for the scaling and translation modes.
pub fn zero_mode_annihilation(h: f64, window: f64) -> Result<(f64, f64)> {
    let grid = Grid::with_spacing(window + 5.0, h)?;
    let m = grid.index_at(window) + 1;
    let rel = |f: Vec<f64>, parity| {
        let lf = apply_l(&f, &grid, parity);
        sup_norm(&lf[..m]) / sup_norm(&f[..m])
    };
    Ok((rel(grid.sample(eta_scaling), Parity::Even), rel(grid.sample(eta_translation), Parity::Odd)))
}

/// Weighted acceleration from an independent second-order stencil on the
/// physical field, solving the residual for `phi_tt` through its affinity.
pub fn second_order_acceleration(state: &FieldState, grid: &Grid) -> Vec<f64> {
    let s = state.to_physical(grid);
    let n = grid.n();
    let h = grid.h();
    // even reflection at the origin, linear extrapolation at the far end
    let at = |f: &[f64], i: isize| -> f64 {
        if i < 0 {
            f[(-i) as usize]
        } else if i as usize >= n {
            2.0 * f[n - 1] - f[n - 2]
        } else {
            f[i as usize]
        }
    };
    (0..n)
        .map(|i| {
            let k = i as isize;
            let y = grid.y(i);
            let base = JetPoint {
                y,
                phi: s.phi[i],
                phi_t: s.pi[i],
                phi_y: (at(&s.phi, k + 1) - at(&s.phi, k - 1)) / (2.0 * h),
                phi_tt: 0.0,
                phi_ty: (at(&s.pi, k + 1) - at(&s.pi, k - 1)) / (2.0 * h),
                phi_yy: (at(&s.phi, k + 1) - 2.0 * s.phi[i] + at(&s.phi, k - 1)) / (h * h),
            };
            let r0 = equation_residual(&base);
            let c = equation_residual(&JetPoint { phi_tt: 1.0, ..base }) - r0;
            jb(y).sqrt() * (-r0 / c)
        })
        .collect()
}

/// Smooth even physical data used by the dual-stencil check.
pub fn dual_stencil_state(grid: &Grid) -> FieldState {
    FieldState {
        t: 0.0,
        phi: grid.sample(|y| 0.2 * (-y * y / 4.0).exp() * (1.0 + 0.3 * y * y).cos()),
        pi: grid.sample(|y| -0.15 * (-y * y / 3.0).exp()),
        representation: Representation::Physical,
    }
}

/// Sup distance between the evolver's nonlinear acceleration and the
/// independent stencil over `y <= window`.
pub fn dual_stencil_error(n: usize, y_max: f64, window: f64) -> Result<f64> {
    let grid = Grid::new(y_max, n)?;
    let state = dual_stencil_state(&grid);
    let mut ev = Evolver::new(grid, EvolutionConfig::default())?;
    let fourth = ev.rhs(&state)?.dpi;
    let second = second_order_acceleration(&state, &grid);
    let m = grid.index_at(window) + 1;
    Ok(fourth[..m].iter().zip(&second[..m]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut checks = vec![
        Check::below("null_identity", null_identity_check(cfg), 1e-10),
        Check::below("lagrangian_oracle", lagrangian_check(cfg)?, 1e-10),
        Check::below("double_transcription", transcription_check(cfg), 1e-13),
    ];

    let (s_fine, t_fine) = zero_mode_annihilation(5e-3, 20.0)?;
    let (s_coarse, t_coarse) = zero_mode_annihilation(1e-2, 20.0)?;
    checks.push(Check::below("zero_mode_scaling", s_fine, 1e-6));
    checks.push(Check::below("zero_mode_translation", t_fine, 1e-6));
    checks.push(Check::within("zero_mode_scaling_order", s_coarse / s_fine, 8.0, 32.0));
    checks.push(Check::within("zero_mode_translation_order", t_coarse / t_fine, 8.0, 32.0));

    let e_coarse = dual_stencil_error(401, 20.0, 15.0)?;
    let e_fine = dual_stencil_error(801, 20.0, 15.0)?;
    checks.push(Check::below("dual_stencil", e_fine, 1e-3));
    checks.push(Check::within("dual_stencil_order", e_coarse / e_fine, 3.0, 5.0));
    Ok(SuiteReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waves_differentiate_exactly() {
        let w = Wave { amp: 0.7, alpha: 0.3, beta: -0.4, gamma: 1.1, delta: 0.9, phase: 0.2 };
        let (t, y) = (0.35, -0.8);
        let d = w.eval_hd(HyperDual::var(t, 1.0, 1.0), HyperDual::constant(y));
        assert!((d.e1 - w.dt().eval(t, y)).abs() < 1e-14);
        assert!((d.e12 - w.dt().dt().eval(t, y)).abs() < 1e-14);
        let m = w.eval_hd(HyperDual::var(t, 1.0, 0.0), HyperDual::var(y, 0.0, 1.0));
        assert!((m.e12 - w.dt().dy().eval(t, y)).abs() < 1e-14);
    }

    #[test]
    fn ad_fluxes_match_product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (phi, psi) = (TestField::random(&mut rng), TestField::random(&mut rng));
        let f = ad_fluxes(&phi, &psi, 0.2, 0.4);
        let g = NullFluxes::product_rule(&phi.jet(0.2, 0.4), &psi.jet(0.2, 0.4));
        assert!((f.dt_phit2_psit - g.dt_phit2_psit).abs() < 1e-12);
        assert!((f.dy_phiy_phit_psit - g.dy_phiy_phit_psit).abs() < 1e-12);
        assert!((f.dt_phiy2_psit - g.dt_phiy2_psit).abs() < 1e-12);
    }

    #[test]
    fn wrong_fluxes_are_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let phi = TestField::random(&mut rng);
        let j = phi.jet(0.1, 0.3);
        let mut f = ad_fluxes(&phi, &phi, 0.1, 0.3);
        f.dy_phiy_phit_psit *= 1.01;
        assert!(null_identity_defect(&j, &j, &f).abs() / null_scale(&j, &j, &f) > 1e-6);
    }

    #[test]
    fn second_order_stencil_on_the_zero_state() {
        let grid = Grid::new(10.0, 101).unwrap();
        let z = FieldState::zero(&grid, Representation::Physical);
        assert!(second_order_acceleration(&z, &grid).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn suite_passes() {
        let report = run_suite(&SuiteConfig { samples: 200, ..Default::default() }).unwrap();
        for c in &report.checks {
            assert!(c.passed, "{c:?}");
        }
    }
}
