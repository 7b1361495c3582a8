use catenoid_core::analysis::{classify_fate, diagnosed_run, Fate, FateConfig, NormConfig};
use catenoid_core::evolution::{
    initial_data, Boundary, Contamination, DataSpec, EvolutionConfig, Evolver, FieldState, Profile, Representation,
    TerminationReason,
};
use catenoid_core::geometry::CatenoidParams;
use catenoid_core::grid::{sup_norm, OuterGhost};
use catenoid_core::reference::family_graph;
use catenoid_core::spectral::{ground_state, potential, SpectralBasis};
use catenoid_core::{Grid, Parity};
use proptest::prelude::*;

fn linear(t_max: f64) -> EvolutionConfig {
    EvolutionConfig { t_max, linear_only: true, ..Default::default() }
}

fn bump_state(grid: &Grid) -> FieldState {
    FieldState {
        t: 0.0,
        phi: grid.sample(|y| 0.1 * (-y * y / 2.0).exp()),
        pi: grid.sample(|y| 0.05 * y * y * (-y * y).exp()),
        representation: Representation::Weighted,
    }
}

fn energy(grid: &Grid, phi: &[f64], pi: &[f64]) -> f64 {
    let dy = grid.d1(phi, Parity::Even, OuterGhost::Extrapolate);
    let vphi: Vec<f64> = phi.iter().enumerate().map(|(i, p)| potential(grid.y(i)) * p).collect();
    grid.inner(pi, pi) + grid.inner_with_parity(&dy, Parity::Odd, &dy, Parity::Odd) - grid.inner(&vphi, phi)
}

fn reversal_error(g: &Grid, s0: &FieldState, dt_fraction: f64, steps: usize) -> f64 {
    // the outgoing condition is dissipative forwards and unstable backwards
    let cfg = EvolutionConfig { boundary: Boundary::Frozen, ..linear(10.0) };
    let mut ev = Evolver::new(*g, cfg).unwrap();
    let dt = ev.stable_dt(&s0.phi, &s0.pi).unwrap() * dt_fraction;
    let mut s = s0.clone();
    for _ in 0..steps {
        s = ev.step_with_dt(&s, dt).unwrap();
    }
    for _ in 0..steps {
        s = ev.step_with_dt(&s, -dt).unwrap();
    }
    assert!(s.t.abs() < 1e-12);
    s.phi.iter().zip(&s0.phi).chain(s.pi.iter().zip(&s0.pi)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[test]
fn linear_flow_is_time_reversible() {
    let g = Grid::new(30.0, 601).unwrap();
    let s0 = bump_state(&g);
    let scale = sup_norm(&s0.phi).max(sup_norm(&s0.pi));
    // RK4 is reversible up to O(dt^5) per unit time; at a quarter of the CFL
    // step that is below roundoff
    let fine = reversal_error(&g, &s0, 0.25, 800);
    assert!(fine <= 10.0 * f64::EPSILON * 1600.0 * scale, "{fine:e}");
    let e1 = reversal_error(&g, &s0, 1.0, 200);
    let e2 = reversal_error(&g, &s0, 0.5, 400);
    assert!(e1 / e2 > 16.0, "{e1:e} {e2:e}");
}

#[test]
fn linear_energy_is_conserved() {
    let b = ground_state(&Grid::new(40.0, 1601).unwrap(), 1e-13).unwrap();
    let g = b.grid;
    let raw = bump_state(&g);
    // without a ground-state component the energy is positive and free of cancellation
    let s0 = FieldState { phi: b.project_c(&raw.phi, Parity::Even), pi: b.project_c(&raw.pi, Parity::Even), ..raw };
    let e0 = energy(&g, &s0.phi, &s0.pi);
    let mut worst: f64 = 0.0;
    let mut watch = |snap: &catenoid_core::evolution::Snapshot| {
        worst = worst.max((energy(snap.grid, snap.phi, snap.pi) - e0).abs());
        std::ops::ControlFlow::Continue(())
    };
    let mut ev = Evolver::new(g, linear(10.0)).unwrap();
    let (_, term) = ev.evolve(&s0, &mut [&mut watch]);
    assert_eq!(term.reason, TerminationReason::Completed);
    assert!(worst <= 1e-6 * e0.abs(), "drift {worst:e} of {e0:e}");
}

#[test]
fn finite_speed_of_propagation() {
    let g = Grid::new(40.0, 1601).unwrap();
    let s0 = FieldState {
        t: 0.0,
        phi: g.sample(|y| if y < 5.0 { 0.1 * (1.0 - 1.0 / (1.0 - (y / 5.0).powi(2))).exp() } else { 0.0 }),
        pi: vec![0.0; g.n()],
        representation: Representation::Weighted,
    };
    let mut ev = Evolver::new(g, linear(10.0)).unwrap();
    let (end, term) = ev.evolve(&s0, &mut []);
    assert_eq!(term.reason, TerminationReason::Completed);
    let far = g.index_at(20.0);
    let outside = sup_norm(&end.phi[far..]);
    assert!(outside < 1e-8, "{outside:e}");
}

fn basis() -> SpectralBasis {
    ground_state(&Grid::new(40.0, 2001).unwrap(), 1e-13).unwrap()
}

#[test]
fn continuous_subspace_is_invariant() {
    let b = basis();
    let spec = DataSpec {
        position: Profile::Gaussian { width: 2.0, amplitude: 0.05 },
        velocity: Profile::Bump { width: 3.0, amplitude: 0.02 },
        project_c: true,
    };
    let s = initial_data(&spec, 0.0, &b).unwrap();
    let mut ev = Evolver::new(b.grid, linear(10.0)).unwrap();
    let rec = diagnosed_run(&mut ev, &s, &b, NormConfig::default(), None);
    let h_max = rec.mode.h.iter().map(|h| h.abs()).fold(0.0, f64::max);
    let size = rec.norms.rows.iter().map(|r| r.energy[0]).fold(0.0, f64::max).max(b.grid.l2_norm(&s.phi));
    assert!(h_max <= 1e-8 * size, "{h_max:e} vs {size:e}");
}

#[test]
fn mode_identities_hold_along_linear_runs() {
    let b = basis();
    let k = b.k_d();
    let spec = DataSpec { velocity: Profile::GroundState { amplitude: 2e-3 }, ..DataSpec::zero() };
    let s = initial_data(&spec, 0.0, &b).unwrap();
    let cfg = EvolutionConfig { snapshot_stride: 1, ..linear(3.0) };
    let rec = diagnosed_run(&mut Evolver::new(b.grid, cfg).unwrap(), &s, &b, NormConfig::default(), None);
    let m = &rec.mode;
    for (t, h) in m.times.iter().zip(&m.h) {
        let exact = 2e-3 / k * (k * t).sinh();
        assert!((h - exact).abs() <= 1e-9 + 1e-8 * exact.abs(), "t = {t}: {h} vs {exact}");
    }
    // discrete d/dt h = h_dot and -h'' + k^2 h = forcing = 0
    for i in 1..m.times.len() - 2 {
        let (ta, tb, tc) = (m.times[i - 1], m.times[i], m.times[i + 1]);
        if (tb - ta - (tc - tb)).abs() > 1e-12 {
            continue;
        }
        let dt = tb - ta;
        let hd = (m.h[i + 1] - m.h[i - 1]) / (2.0 * dt);
        assert!((hd - m.h_dot[i]).abs() <= 1e-4 * m.h_dot[i].abs().max(1e-6));
        let hdd = (m.h[i + 1] - 2.0 * m.h[i] + m.h[i - 1]) / (dt * dt);
        assert!((-hdd + k * k * m.h[i] - m.forcing[i]).abs() <= 1e-4 * (k * k * m.h[i]).abs().max(1e-9));
    }
}

#[test]
fn unstable_mode_widens_the_collar() {
    let b = basis();
    let s = initial_data(&DataSpec::zero(), 1e-2, &b).unwrap();
    let mut ev = Evolver::new(b.grid, EvolutionConfig { t_max: 20.0, ..Default::default() }).unwrap();
    let cfg = FateConfig::default();
    let rec = diagnosed_run(&mut ev, &s, &b, NormConfig::default(), Some(cfg.cap_for(1e-2)));
    let r = classify_fate(&rec, &b, &cfg);
    assert_eq!(r.fate, Fate::Widened);
    let rate = r.h_growth_rate.unwrap();
    assert!((rate - b.k_d()).abs() <= 0.2 * b.k_d(), "{rate}");
    assert!(r.event_time.is_some());
}

#[test]
fn large_negative_collar_data_collapses() {
    let b = basis();
    let spec = DataSpec {
        position: Profile::Bump { width: 2.0, amplitude: -0.4 },
        velocity: Profile::Bump { width: 2.0, amplitude: -0.3 },
        project_c: false,
    };
    let s = initial_data(&spec, 0.0, &b).unwrap();
    let mut ev = Evolver::new(b.grid, EvolutionConfig { t_max: 20.0, ..Default::default() }).unwrap();
    let rec = diagnosed_run(&mut ev, &s, &b, NormConfig::default(), None);
    let r = classify_fate(&rec, &b, &FateConfig::default());
    assert_eq!(r.fate, Fate::Collapsed, "{r:?}");
    assert!(r.event_time.unwrap() < 20.0);
    // identical trajectories give identical reports
    let again = classify_fate(&rec, &b, &FateConfig::default());
    assert_eq!(r, again);
}

#[test]
fn nearby_catenoid_stays_put() {
    let g = Grid::new(10.0, 1001).unwrap();
    let fam = family_graph(CatenoidParams::new(1.02, 0.0).unwrap(), &g).unwrap();
    assert_eq!(fam.valid_nodes, g.n());
    let cfg = EvolutionConfig { t_max: 1.0, boundary: Boundary::Frozen, contamination: Contamination::Off, ..Default::default() };
    let (end, term) = Evolver::new(g, cfg).unwrap().evolve(&fam.state, &mut []);
    assert_eq!(term.reason, TerminationReason::Completed);
    let drift = end.phi.iter().zip(&fam.state.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-5);
}

#[test]
fn filter_is_refused_for_nonlinear_runs() {
    let b = basis();
    let mut ev = Evolver::new(b.grid, EvolutionConfig::default()).unwrap();
    assert!(ev.set_mode_filter(&b).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn steps_preserve_evenness(amp in -0.2f64..0.2, width in 0.5f64..3.0, shift in 0.0f64..2.0) {
        let g = Grid::new(20.0, 401).unwrap();
        let s = FieldState {
            t: 0.0,
            phi: g.sample(|y| amp * (-((y - shift) / width).powi(2)).exp() + amp * (-((y + shift) / width).powi(2)).exp()),
            pi: g.sample(|y| amp * (-(y / width).powi(2)).exp()),
            representation: Representation::Physical,
        };
        let mut ev = Evolver::new(g, EvolutionConfig::default()).unwrap();
        let mut s1 = s.clone();
        for _ in 0..5 {
            s1 = ev.step(&s1).unwrap();
        }
        let w = s1.to_weighted(&g);
        let d = g.d1(&w.phi, Parity::Even, OuterGhost::Extrapolate);
        prop_assert_eq!(d[0], 0.0);
        prop_assert!(s1.is_finite());
        prop_assert_eq!(s1.representation, Representation::Physical);
    }

    #[test]
    fn weight_round_trip(values in prop::collection::vec(-1.0f64..1.0, 101)) {
        let g = Grid::new(10.0, 101).unwrap();
        let s = FieldState { t: 0.0, phi: values.clone(), pi: values.clone(), representation: Representation::Physical };
        let back = s.to_weighted(&g).to_physical(&g);
        for (a, b) in back.phi.iter().zip(&values) {
            prop_assert!((a - b).abs() <= 1e-15 * (1.0 + b.abs()));
        }
    }
}
