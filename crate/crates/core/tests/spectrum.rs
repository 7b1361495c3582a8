use catenoid_core::evolution::{DataSpec, EvolutionConfig, Profile};
use catenoid_core::grid::OuterGhost;
use catenoid_core::shooting::{lipschitz_probe, shoot, FateRule, ShootingConfig};
use catenoid_core::spectral::{ground_state, negative_eigenvalue_count, rayleigh_quotient, zero_modes, SpectralBasis};
use catenoid_core::verify::{run_suite, SuiteConfig};
use catenoid_core::{Grid, Parity};
use proptest::prelude::*;
use std::sync::OnceLock;

fn basis() -> &'static SpectralBasis {
    static B: OnceLock<SpectralBasis> = OnceLock::new();
    B.get_or_init(|| ground_state(&Grid::new(40.0, 1601).unwrap(), 1e-13).unwrap())
}

#[test]
fn ground_state_invariants() {
    let b = basis();
    assert!((b.grid.inner(&b.g_d, &b.g_d) - 1.0).abs() < 1e-8);
    let (last, interior) = b.g_d.split_last().unwrap();
    assert!(interior.iter().all(|g| *g > 0.0));
    assert_eq!(*last, 0.0);
    assert!(b.k_d_sq > 0.0 && b.k_d_sq < 1.5);
    assert!((b.k_d_sq - 0.563_635_5).abs() < 1e-6);
    assert_eq!(negative_eigenvalue_count(&b.grid), 1);
    assert_eq!(b.eigenvalue(), -b.k_d_sq);
    assert!((b.k_d() * b.k_d() - b.k_d_sq).abs() < 1e-15);
}

#[test]
fn projection_of_a_gram_schmidt_sum() {
    let b = basis();
    let raw = b.grid.sample(|y| (-(y - 1.0).powi(2)).exp() * (1.0 + y).cos());
    let v = b.project_c(&raw, Parity::Even);
    let f: Vec<f64> = b.g_d.iter().zip(&v).map(|(g, v)| g + v).collect();
    let (h, comp) = b.project_d(&f, Parity::Even);
    assert!((h - 1.0).abs() < 1e-10);
    assert!(comp.iter().zip(&b.g_d).all(|(c, g)| (c - h * g).abs() < 1e-15));
    let (_, eta_t) = zero_modes(&b.grid);
    assert_eq!(b.project_d(&eta_t, Parity::Odd).0, 0.0);
}

#[test]
fn far_field_has_no_bound_states() {
    let g = basis().grid;
    for (center, width) in [(25.0, 2.0), (30.0, 4.0), (32.0, 1.0)] {
        let f = g.sample(|y| (-((y - center) / width).powi(2)).exp() * if y > 20.0 { 1.0 } else { 0.0 });
        assert!(rayleigh_quotient(&f, &g) >= -1e-2);
    }
    let collar = g.sample(|y| (-y * y).exp());
    assert!(rayleigh_quotient(&collar, &g) < 0.0);
}

#[test]
fn derivative_stencils_are_consistent_with_parity() {
    let g = basis().grid;
    let f = g.sample(|y| (-y * y).exp());
    let d = g.d1(&f, Parity::Even, OuterGhost::Extrapolate);
    assert_eq!(d[0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn projections_split_the_identity(a in -1.0f64..1.0, c in 0.2f64..4.0, s in 0.0f64..5.0) {
        let b = basis();
        let f = b.grid.sample(|y| a * (-((y - s) / c).powi(2)).exp() + (-y / c).exp());
        let pc = b.project_c(&f, Parity::Even);
        let (_, pd) = b.project_d(&f, Parity::Even);
        for i in 0..f.len() {
            prop_assert!((pc[i] + pd[i] - f[i]).abs() <= f64::EPSILON * (f[i].abs() + pd[i].abs()));
        }
        let norm = b.grid.l2_norm(&f);
        prop_assert!(b.coefficient(&pc).abs() < 1e-10 * norm);
        let again = b.project_c(&pc, Parity::Even);
        for (x, y) in again.iter().zip(&pc) {
            prop_assert!((x - y).abs() < 1e-12 * (1.0 + norm));
        }
    }
}

fn surrogate() -> (ShootingConfig, DataSpec) {
    let evo = EvolutionConfig { t_max: 20.0, linear_only: true, snapshot_stride: 50, ..Default::default() };
    let mut cfg = ShootingConfig::for_epsilon(0.1, evo);
    cfg.rule = FateRule::SignOfMode;
    cfg.tol_a = Some(1e-8);
    let data = DataSpec {
        position: Profile::Gaussian { width: 1.0, amplitude: 2e-3 },
        velocity: Profile::Gaussian { width: 1.5, amplitude: 1e-3 },
        project_c: false,
    };
    (cfg, data)
}

#[test]
fn shooting_is_deterministic_and_halves_the_bracket() {
    let b = basis();
    let (cfg, data) = surrogate();
    let r1 = shoot(&data, b, &cfg).unwrap();
    let r2 = shoot(&data, b, &cfg).unwrap();
    assert_eq!(r1, r2);
    let w0 = cfg.a_bracket.1 - cfg.a_bracket.0;
    let w = r1.bracket_final.1 - r1.bracket_final.0;
    assert!(w <= 1e-8);
    assert!((w - w0 / 2f64.powi(r1.iterations as i32)).abs() <= 1e-12 * w0);
    let (p1, p2) = data.mode_components(b).unwrap();
    assert!((r1.a_star + p1 + p2 / b.k_d()).abs() <= 1e-8);
}

#[test]
fn zero_perturbation_does_not_move_the_threshold() {
    let b = basis();
    let (cfg, data) = surrogate();
    let base = shoot(&data, b, &cfg).unwrap();
    let probes = lipschitz_probe(&data, &Profile::Bump { width: 2.0, amplitude: 1.0 }, &[0.0], b, &cfg, Some(&base)).unwrap();
    assert_eq!(probes[0].delta_a_star, 0.0);
}

#[test]
fn identity_suite_passes() {
    let report = run_suite(&SuiteConfig { samples: 300, seed: 11 }).unwrap();
    assert!(report.passed(), "{report:?}");
    assert!(report.get("dual_stencil").is_some());
}
