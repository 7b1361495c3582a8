use std::ops::ControlFlow;

use anyhow::{bail, Context, Result};
use catenoid_core::analysis::{
    classify_fate, duhamel_h, FateConfig, ModeRecorder, NormConfig, NormRecorder, NormSeries, RunRecord,
};
use catenoid_core::evolution::{
    initial_data, Boundary, Contamination, DataSpec, EvolutionConfig, Evolver, Profile, Representation, Snapshot,
};
use catenoid_core::reference::{cylinder_evolve, CylinderState, DEFAULT_R_MIN};
use catenoid_core::shooting::{lipschitz_probe, shoot, FateRule, ShootingConfig};
use catenoid_core::spectral::{ground_state, potential, SpectralBasis};
use catenoid_core::verify::{run_suite, SuiteConfig};
use catenoid_core::{jb, Grid, Parity};
use serde_json::{json, to_value};

use crate::config::{Config, UsageError};
use crate::output::{num, Output};

pub fn grid(cfg: &Config) -> Result<Grid> {
    Ok(Grid::new(cfg.f64("grid.y_max")?, cfg.usize("grid.n")?)?)
}

pub fn basis(cfg: &Config) -> Result<SpectralBasis> {
    let g = grid(cfg)?;
    Ok(ground_state(&g, cfg.f64("eig.tol")?)?)
}

pub fn evolution(cfg: &Config, linear: bool) -> Result<EvolutionConfig> {
    Ok(EvolutionConfig {
        cfl: cfg.f64("evo.cfl")?,
        t_max: cfg.f64("evo.t_max")?,
        boundary: match cfg.choice("evo.boundary", &["outgoing", "frozen"])? {
            "outgoing" => Boundary::Outgoing,
            _ => Boundary::Frozen,
        },
        linear_only: linear,
        snapshot_stride: cfg.usize("evo.stride")?,
        contamination: match cfg.choice("evo.contamination", &["halt", "flag", "off"])? {
            "halt" => Contamination::Halt,
            "flag" => Contamination::Flag,
            _ => Contamination::Off,
        },
        ..Default::default()
    })
}

fn norm_config(cfg: &Config) -> Result<NormConfig> {
    Ok(NormConfig { sigma: cfg.f64("norms.sigma")?, ..Default::default() })
}

/// Reads column `column` of the data file as a profile table.
fn table(path: &str, column: &str) -> Result<Profile> {
    if path.is_empty() {
        bail!(UsageError("the `file` preset needs data.file".into()));
    }
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {path}"))?;
    let headers = r.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| UsageError(format!("{path}: no column {name:?}")))
    };
    let (iy, iv) = (find("y")?, find(column)?);
    let (mut y, mut values) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        y.push(rec[iy].trim().parse::<f64>().with_context(|| format!("{path}: bad y"))?);
        values.push(rec[iv].trim().parse::<f64>().with_context(|| format!("{path}: bad {column}"))?);
    }
    Ok(Profile::Table { y, values })
}

fn profile(cfg: &Config, kind_key: &str, amp_key: &str, width_key: &str, column: &str) -> Result<Profile> {
    let amplitude = cfg.f64(amp_key)?;
    let width = cfg.f64(width_key)?;
    Ok(match cfg.choice(kind_key, &["zero", "ground", "gaussian", "bump", "file"])? {
        "zero" => Profile::Zero,
        "ground" => Profile::GroundState { amplitude },
        "gaussian" => Profile::Gaussian { width, amplitude },
        "bump" => Profile::Bump { width, amplitude },
        _ => table(cfg.str("data.file"), column)?,
    })
}

pub fn data_spec(cfg: &Config) -> Result<DataSpec> {
    Ok(DataSpec {
        position: profile(cfg, "data.preset", "data.amplitude", "data.width", "phi")?,
        velocity: profile(cfg, "data.velocity", "data.velocity_amplitude", "data.velocity_width", "pi")?,
        project_c: cfg.bool("data.project_c")?,
    })
}

pub fn spectrum(cfg: &Config, out: &mut Output) -> Result<i32> {
    let b = basis(cfg)?;
    let g = b.grid;
    let rows = (0..g.n()).map(|i| {
        let y = g.y(i);
        vec![y, potential(y), b.g_d[i], b.zero_mode_scaling[i], b.zero_mode_translation[i]]
    });
    out.csv("modes", &["y", "V", "g_d", "eta_scaling", "eta_translation"], rows)?;
    let report = json!({
        "k_d_sq": b.k_d_sq,
        "k_d_sq_matrix": b.k_d_sq_matrix,
        "k_d_sq_shooting": b.k_d_sq_shooting,
        "n": g.n(),
        "y_max": g.y_max(),
        "residual_norms": { "sup": b.residual_sup, "l2": b.residual_l2 },
    });
    out.json("report", &report)?;
    println!("k_d^2 = {}", num(b.k_d_sq));
    Ok(0)
}

struct SnapshotRows {
    rows: Vec<Vec<f64>>,
}

impl SnapshotRows {
    fn observe(&mut self, s: &Snapshot) -> ControlFlow<String> {
        if self.rows.last().is_some_and(|r| s.t <= r[0]) {
            return ControlFlow::Continue(());
        }
        for i in 0..s.grid.n() {
            let y = s.grid.y(i);
            let w = jb(y).sqrt();
            self.rows.push(vec![s.t, y, s.phi[i] / w, s.pi[i] / w]);
        }
        ControlFlow::Continue(())
    }
}

fn norm_outputs(out: &mut Output, series: &NormSeries) -> Result<()> {
    let rows = series.rows.iter().map(|r| {
        let mut v = vec![r.t];
        v.extend(&r.energy);
        v.extend([r.sup_phys, r.sup_weighted, r.local_energy, r.gamma2_energy]);
        v
    });
    let k = series.rows.first().map_or(0, |r| r.energy.len());
    let energy: Vec<String> = (0..k).map(|j| format!("energy_{j}")).collect();
    let mut header: Vec<&str> = vec!["t"];
    header.extend(energy.iter().map(String::as_str));
    header.extend(["sup_phys", "sup_weighted", "local_energy", "gamma2_energy"]);
    out.csv("norms", &header, rows)?;

    let t = series.times();
    for (j, name) in energy.iter().enumerate() {
        out.dat(name, &t, &series.energy(j))?;
    }
    out.dat("sup_phys", &t, &series.sup_phys())?;
    out.dat("sup_weighted", &t, &series.sup_weighted())?;
    let local: Vec<f64> = series.rows.iter().map(|r| r.local_energy).collect();
    out.dat("local_energy", &t, &local)?;
    let gamma2: Vec<f64> = series.rows.iter().map(|r| r.gamma2_energy).collect();
    out.dat("gamma2_energy", &t, &gamma2)?;
    Ok(())
}

/// Shared body of `evolve` and `linear`.
pub fn evolve(cfg: &Config, out: &mut Output, linear: bool) -> Result<i32> {
    let b = basis(cfg)?;
    let evo = evolution(cfg, linear)?;
    let state = initial_data(&data_spec(cfg)?, cfg.f64("data.a")?, &b)?;
    let mut ev = Evolver::new(b.grid, evo)?;
    if cfg.bool("evo.filter_mode")? {
        ev.set_mode_filter(&b)?;
    }
    let mut modes = ModeRecorder::new(&b);
    let mut norm_rec = NormRecorder::new(norm_config(cfg)?);
    let mut snaps = SnapshotRows { rows: Vec::new() };
    let mut snap_obs = |s: &Snapshot| snaps.observe(s);
    let (final_state, termination) = ev.evolve(&state, &mut [&mut modes, &mut norm_rec, &mut snap_obs]);
    let record = RunRecord {
        final_state: final_state.to_representation(&b.grid, Representation::Weighted),
        termination,
        mode: modes.trajectory,
        norms: norm_rec.series,
        t_max: ev.config().t_max,
    };
    let fate = classify_fate(&record, &b, &FateConfig::default());

    out.csv("snapshots", &["t", "y", "phi", "pi"], snaps.rows)?;
    norm_outputs(out, &record.norms)?;
    out.dat("h", &record.mode.times, &record.mode.h)?;
    out.json("report", &json!({ "termination": to_value(&record.termination)?, "fate": to_value(&fate)? }))?;
    println!("{:?} at t = {}; fate {:?}", record.termination.reason, num(record.termination.t), fate.fate);
    Ok(0)
}

pub fn modes(cfg: &Config, out: &mut Output) -> Result<i32> {
    let b = basis(cfg)?;
    let state = initial_data(&data_spec(cfg)?, cfg.f64("data.a")?, &b)?;
    let mut ev = Evolver::new(b.grid, evolution(cfg, false)?)?;
    let mut rec = ModeRecorder::new(&b);
    let (_, termination) = ev.evolve(&state, &mut [&mut rec]);
    let mut m = rec.trajectory;
    let (h0, h1) = (m.h.first().copied().unwrap_or(0.0), m.h_dot.first().copied().unwrap_or(0.0));
    m.h_duhamel = duhamel_h(&m, h0, h1, b.k_d());
    let rows = (0..m.times.len()).map(|i| vec![m.times[i], m.h[i], m.h_dot[i], m.h_duhamel[i], m.forcing[i]]);
    out.csv("trajectory", &["t", "h", "h_dot", "h_duhamel", "forcing"], rows)?;
    out.dat("h", &m.times, &m.h)?;
    out.dat("h_duhamel", &m.times, &m.h_duhamel)?;
    out.dat("forcing", &m.times, &m.forcing)?;
    let defect = m.h.iter().zip(&m.h_duhamel).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    out.json("report", &json!({ "k_d": b.k_d(), "duhamel_defect": defect, "termination": to_value(&termination)? }))?;
    println!("duhamel defect {}", num(defect));
    Ok(0)
}

pub fn shooting(cfg: &Config, out: &mut Output) -> Result<i32> {
    let b = basis(cfg)?;
    let data = data_spec(cfg)?;
    let mut sc = ShootingConfig::for_epsilon(cfg.f64("shoot.epsilon")?, evolution(cfg, false)?);
    sc.tol_a = cfg.opt_f64("shoot.tol")?;
    sc.max_bisections = cfg.usize("shoot.max_bisections")?;
    sc.norms = norm_config(cfg)?;
    if cfg.choice("shoot.rule", &["full", "sign"])? == "sign" {
        sc.rule = FateRule::SignOfMode;
    }
    let mut result = shoot(&data, &b, &sc)?;
    let deltas = cfg.f64_list("shoot.deltas")?;
    if !deltas.is_empty() {
        let raw = Profile::Gaussian { width: 1.0, amplitude: 1.0 }.sample(&b)?;
        let direction = Profile::Table { y: b.grid.nodes(), values: b.project_c(&raw, Parity::Even) };
        result.lipschitz_probes = Some(lipschitz_probe(&data, &direction, &deltas, &b, &sc, Some(&result))?);
    }
    let rows: Vec<Vec<String>> = result
        .log
        .iter()
        .map(|it| {
            vec![
                it.iteration.to_string(),
                num(it.a),
                format!("{:?}", it.fate),
                it.event_time.map(num).unwrap_or_default(),
            ]
        })
        .collect();
    out.csv_text("iterations", &["iteration", "a", "fate", "event_time"], &rows)?;
    out.json("result", &to_value(&result)?)?;
    println!("a* = {} after {} bisections", num(result.a_star), result.iterations);
    Ok(0)
}

pub fn cylinder(cfg: &Config, out: &mut Output) -> Result<i32> {
    let s0 = CylinderState { t: 0.0, r: cfg.f64("cylinder.r0")?, r_dot: 0.0 };
    let run = cylinder_evolve(s0, cfg.f64("cylinder.dt")?, cfg.f64("cylinder.t_max")?, DEFAULT_R_MIN)?;
    out.csv("trajectory", &["t", "R"], run.trajectory.iter().map(|s| vec![s.t, s.r]))?;
    out.json("report", &json!({ "collapse_time": run.collapse_time }))?;
    match run.collapse_time {
        Some(t) => println!("collapse at t = {}", num(t)),
        None => println!("no collapse before t = {}", cfg.str("cylinder.t_max")),
    }
    Ok(0)
}

pub fn verify(cfg: &Config, out: &mut Output) -> Result<i32> {
    let suite = SuiteConfig { seed: cfg.u64("verify.seed")?, samples: cfg.usize("verify.samples")? };
    let report = run_suite(&suite)?;
    for c in &report.checks {
        println!("{:<28} {:<5} {} (threshold {})", c.name, if c.passed { "ok" } else { "FAIL" }, num(c.value), num(c.threshold));
    }
    out.json("report", &to_value(&report)?)?;
    Ok(if report.passed() { 0 } else { 3 })
}
