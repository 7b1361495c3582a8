//! Threshold search over the ground-state amplitude `a`.
//!
//! Data `(phi~_1 + a g_d, phi~_2)` leads either to collapse of the collar or
//! to accelerated widening, depending on `a`; the two fate sets are open and
//! disjoint, so bisection on `a` converges to the codimension-one threshold
//! `a*` where the run decays back to the catenoid.

use serde::{Deserialize, Serialize};

use crate::analysis::{classify_fate, diagnosed_run, Fate, FateConfig, FateReport, NormConfig};
use crate::evolution::{initial_data, DataSpec, EvolutionConfig, Evolver, Profile};
use crate::grid::{Grid, OuterGhost, Parity};
use crate::spectral::SpectralBasis;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UndecidedPolicy {
    /// Re-run with `t_max` multiplied by `extension_factor`, at most `max_extensions` times.
    ExtendTMax,
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FateRule {
    /// Collapse / widening / decay classification of the nonlinear run.
    Full,
    /// Sign of `h(t_max)`; meant for linear runs.
    SignOfMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingConfig {
    pub a_bracket: (f64, f64),
    /// Final bracket width; `1e-12` times the initial width when `None`.
    pub tol_a: Option<f64>,
    pub max_bisections: usize,
    pub evolution: EvolutionConfig,
    pub fate: FateConfig,
    pub norms: NormConfig,
    pub rule: FateRule,
    pub undecided_policy: UndecidedPolicy,
    pub max_extensions: usize,
    pub extension_factor: f64,
}

impl ShootingConfig {
    /// Bracket `[-eps^{3/2}, eps^{3/2}]`.
    pub fn for_epsilon(eps: f64, evolution: EvolutionConfig) -> Self {
        let w = eps.powf(1.5);
        Self {
            a_bracket: (-w, w),
            tol_a: None,
            max_bisections: 60,
            evolution,
            fate: FateConfig::default(),
            norms: NormConfig::default(),
            rule: FateRule::Full,
            undecided_policy: UndecidedPolicy::ExtendTMax,
            max_extensions: 3,
            extension_factor: 1.5,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol_a.unwrap_or(1e-12 * (self.a_bracket.1 - self.a_bracket.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iteration {
    pub iteration: usize,
    pub a: f64,
    pub fate: Fate,
    pub event_time: Option<f64>,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzProbe {
    pub delta: f64,
    pub a_star: f64,
    pub delta_a_star: f64,
}

impl LipschitzProbe {
    pub fn ratio(&self) -> Option<f64> {
        (self.delta != 0.0).then(|| self.delta_a_star / self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingResult {
    pub a_star: f64,
    pub bracket_final: (f64, f64),
    /// Fates at the lower and upper ends of the initial bracket.
    pub endpoint_fates: (FateReport, FateReport),
    pub threshold_run: FateReport,
    pub iterations: usize,
    pub log: Vec<Iteration>,
    /// Pairs of tested amplitudes whose fates contradict a monotone ordering.
    pub monotonicity_violations: usize,
    pub lipschitz_probes: Option<Vec<LipschitzProbe>>,
}

fn is_definite(f: Fate) -> bool {
    matches!(f, Fate::Collapsed | Fate::Widened)
}

/// Evolves the data at amplitude `a` and classifies the outcome, extending
/// the horizon for undecided runs according to the policy.
pub fn run_at(data: &DataSpec, a: f64, basis: &SpectralBasis, cfg: &ShootingConfig, early_stop: bool) -> Result<FateReport> {
    let state = initial_data(data, a, basis)?;
    let mut evo = cfg.evolution.clone();
    let mut attempts = 0;
    loop {
        let mut fate_cfg = cfg.fate.clone();
        fate_cfg.sign_of_mode = cfg.rule == FateRule::SignOfMode;
        let stop = (early_stop && cfg.rule == FateRule::Full).then(|| fate_cfg.cap_for(basis.coefficient(&state.phi)));
        let mut ev = Evolver::new(basis.grid, evo.clone())?;
        let record = diagnosed_run(&mut ev, &state, basis, cfg.norms, stop);
        let report = classify_fate(&record, basis, &fate_cfg);
        let retry = report.fate == Fate::Undecided
            && cfg.undecided_policy == UndecidedPolicy::ExtendTMax
            && attempts < cfg.max_extensions;
        if !retry {
            return Ok(report);
        }
        attempts += 1;
        evo.t_max *= cfg.extension_factor;
        log::info!("a = {a:e} undecided, extending t_max to {}", evo.t_max);
    }
}

/// Bisection on `a` between the configured bracket ends.
pub fn shoot(data: &DataSpec, basis: &SpectralBasis, cfg: &ShootingConfig) -> Result<ShootingResult> {
    let (mut lo, mut hi) = cfg.a_bracket;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("bracket [{lo}, {hi}] is empty")));
    }
    let tol = cfg.tolerance();
    let mut log = Vec::new();
    let r_lo = run_at(data, lo, basis, cfg, true)?;
    let r_hi = run_at(data, hi, basis, cfg, true)?;
    log.push(Iteration { iteration: 0, a: lo, fate: r_lo.fate, event_time: r_lo.event_time, t_end: r_lo.t_end });
    log.push(Iteration { iteration: 0, a: hi, fate: r_hi.fate, event_time: r_hi.event_time, t_end: r_hi.t_end });
    if r_lo.fate == Fate::Undecided && r_hi.fate == Fate::Undecided {
        return Err(Error::Inconclusive("both bracket ends undecided".into()));
    }
    if r_lo.fate == r_hi.fate || !is_definite(r_lo.fate) || !is_definite(r_hi.fate) {
        return Err(Error::BracketInvalid { lo: Box::new(r_lo), hi: Box::new(r_hi) });
    }
    let lo_fate = r_lo.fate;
    if lo_fate == Fate::Widened {
        log::warn!("bracket orientation reversed: the lower end widens");
    }

    let mut iterations = 0;
    let mut settled = None;
    while hi - lo > tol && iterations < cfg.max_bisections {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = run_at(data, mid, basis, cfg, true)?;
        log.push(Iteration { iteration: iterations, a: mid, fate: r.fate, event_time: r.event_time, t_end: r.t_end });
        let side_lo = match r.fate {
            f if f == lo_fate => true,
            Fate::Collapsed | Fate::Widened => false,
            Fate::Decayed => {
                settled = Some(mid);
                break;
            }
            Fate::Undecided => {
                if cfg.undecided_policy == UndecidedPolicy::Halt {
                    return Err(Error::Inconclusive(format!("undecided fate at a = {mid:e}")));
                }
                // fall back on the sign of the unstable amplitude
                let widening = r.h_final > 0.0;
                if r.h_final == 0.0 {
                    return Err(Error::Inconclusive(format!("undecided fate with h = 0 at a = {mid:e}")));
                }
                log::warn!("a = {mid:e} undecided after extensions, using sign of h");
                widening == (lo_fate == Fate::Widened)
            }
        };
        if side_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let a_star = settled.unwrap_or(0.5 * (lo + hi));
    let threshold_run = run_at(data, a_star, basis, cfg, false)?;
    let monotonicity_violations = count_violations(&log, lo_fate);
    if monotonicity_violations > 0 {
        log::warn!("{monotonicity_violations} fate-ordering violations across the bracket");
    }
    Ok(ShootingResult {
        a_star,
        bracket_final: (lo, hi),
        endpoint_fates: (r_lo, r_hi),
        threshold_run,
        iterations,
        log,
        monotonicity_violations,
        lipschitz_probes: None,
    })
}

fn count_violations(log: &[Iteration], lo_fate: Fate) -> usize {
    let mut tested: Vec<(f64, bool)> = log
        .iter()
        .filter(|it| is_definite(it.fate))
        .map(|it| (it.a, it.fate == lo_fate))
        .collect();
    tested.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut violations = 0;
    let mut seen_hi_side = false;
    for (_, is_lo) in tested {
        if !is_lo {
            seen_hi_side = true;
        } else if seen_hi_side {
            violations += 1;
        }
    }
    violations
}

/// `||phi~_1||_{H^1} + ||phi~_2||_{L^2}`, the size of Cauchy data.
pub fn data_norm(phi: &[f64], pi: &[f64], grid: &Grid) -> f64 {
    let dy = grid.d1(phi, Parity::Even, OuterGhost::Extrapolate);
    let h1 = (grid.inner(phi, phi) + grid.inner_with_parity(&dy, Parity::Odd, &dy, Parity::Odd)).sqrt();
    h1 + grid.l2_norm(pi)
}

/// Re-shoots with `delta` times the unit-normalised `direction` added to the
/// position data, for every `delta`, running the shoots concurrently.
pub fn lipschitz_probe(
    base: &DataSpec,
    direction: &Profile,
    deltas: &[f64],
    basis: &SpectralBasis,
    cfg: &ShootingConfig,
    base_result: Option<&ShootingResult>,
) -> Result<Vec<LipschitzProbe>> {
    let dir = direction.sample(basis)?;
    let size = data_norm(&dir, &vec![0.0; dir.len()], &basis.grid);
    if !(size > 0.0) {
        return Err(Error::InvalidInput("perturbation direction is zero".into()));
    }
    let unit = 1.0 / size;
    let base_star = match base_result {
        Some(r) => r.a_star,
        None => shoot(base, basis, cfg)?.a_star,
    };
    let perturbed = |delta: f64| DataSpec {
        position: Profile::Sum(vec![
            base.position.clone(),
            Profile::Table { y: basis.grid.nodes(), values: dir.iter().map(|v| v * unit * delta).collect() },
        ]),
        ..base.clone()
    };
    let results: Vec<Result<LipschitzProbe>> = std::thread::scope(|s| {
        let handles: Vec<_> = deltas
            .iter()
            .map(|&delta| {
                let spec = perturbed(delta);
                s.spawn(move || {
                    let a_star = if delta == 0.0 { base_star } else { shoot(&spec, basis, cfg)?.a_star };
                    Ok(LipschitzProbe { delta, a_star, delta_a_star: a_star - base_star })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Inconclusive("probe thread panicked".into()))))
            .collect()
    });
    results.into_iter().collect()
}
