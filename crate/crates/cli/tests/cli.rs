use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn lab(outdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catenoid-lab"))
        .args(args)
        .env("CATENOID_LAB_OUTDIR", outdir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn config_value(dir: &Path, sub: &str, key: &str) -> String {
    json(&dir.join(format!("{sub}_manifest.json")))["config"][key].as_str().unwrap().to_string()
}

#[test]
fn flag_beats_file_beats_default() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("run.cfg");
    fs::write(&file, "# three representative keys\ngrid.n = 301\nevo.cfl = 0.5\ncylinder.dt = 2e-4\n").unwrap();
    let out = tmp.path().join("out");
    let cfg = file.to_str().unwrap();

    assert!(lab(&out, &["cylinder"]).status.success());
    assert_eq!(config_value(&out, "cylinder", "grid.n"), "2001");
    assert_eq!(config_value(&out, "cylinder", "evo.cfl"), "0.25");
    assert_eq!(config_value(&out, "cylinder", "cylinder.dt"), "1e-4");

    assert!(lab(&out, &["cylinder", "--config", cfg]).status.success());
    assert_eq!(config_value(&out, "cylinder", "grid.n"), "301");
    assert_eq!(config_value(&out, "cylinder", "evo.cfl"), "0.5");
    assert_eq!(config_value(&out, "cylinder", "cylinder.dt"), "2e-4");

    let r = lab(&out, &["cylinder", "--config", cfg, "--n", "101", "--cfl", "0.125", "--set", "cylinder.dt=5e-4"]);
    assert!(r.status.success());
    assert_eq!(config_value(&out, "cylinder", "grid.n"), "101");
    assert_eq!(config_value(&out, "cylinder", "evo.cfl"), "0.125");
    assert_eq!(config_value(&out, "cylinder", "cylinder.dt"), "5e-4");
    // the overridden step is the one actually used
    let csv = fs::read_to_string(out.join("cylinder_trajectory.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().starts_with("0.0005,"));
}

#[test]
fn named_flags_beat_set() {
    let tmp = TempDir::new().unwrap();
    assert!(lab(tmp.path(), &["cylinder", "--set", "evo.t_max=7", "--tmax", "3"]).status.success());
    assert_eq!(config_value(tmp.path(), "cylinder", "evo.t_max"), "3.0");
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path();
    assert_eq!(lab(out, &["cylinder", "--bogus"]).status.code(), Some(2));
    assert_eq!(lab(out, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(lab(out, &["cylinder", "--set", "grid.nope=1"]).status.code(), Some(2));
    assert_eq!(lab(out, &["cylinder", "--set", "cylinder.dt=fast"]).status.code(), Some(2));
    assert_eq!(lab(out, &["evolve", "--boundary", "open"]).status.code(), Some(2));
    let file = out.join("bad.cfg");
    fs::write(&file, "evo.t_max = 1\nevo.speed = 2\n").unwrap();
    assert_eq!(lab(out, &["cylinder", "--config", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn undecided_bracket_exits_4() {
    let tmp = TempDir::new().unwrap();
    let r = lab(tmp.path(), &["shoot", "--ymax", "20", "--n", "401", "--tmax", "0.5", "--set", "shoot.max_bisections=2"]);
    assert_eq!(r.status.code(), Some(4), "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(json(&tmp.path().join("shoot_manifest.json"))["exit_code"], 4);
}

#[test]
fn cylinder_collapses_at_half_pi() {
    let tmp = TempDir::new().unwrap();
    assert!(lab(tmp.path(), &["cylinder"]).status.success());
    let t = json(&tmp.path().join("cylinder_report.json"))["collapse_time"].as_f64().unwrap();
    assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-4, "{t}");
}

#[test]
fn verify_passes() {
    let tmp = TempDir::new().unwrap();
    let r = lab(tmp.path(), &["verify"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
    let report = json(&tmp.path().join("verify_report.json"));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 4);
    assert!(checks.iter().all(|c| c["passed"] == true));
}

#[test]
fn spectrum_reports_one_unstable_eigenvalue() {
    let tmp = TempDir::new().unwrap();
    assert!(lab(tmp.path(), &["spectrum", "--ymax", "30", "--n", "1501"]).status.success());
    let r = json(&tmp.path().join("spectrum_report.json"));
    let k = r["k_d_sq"].as_f64().unwrap();
    assert!(k > 0.5 && k < 0.6, "{k}");
    assert_eq!(r["n"], 1501);
    let csv = fs::read_to_string(tmp.path().join("spectrum_modes.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "y,V,g_d,eta_scaling,eta_translation");
    assert_eq!(csv.lines().count(), 1502);
}

#[test]
fn manifest_replay_reproduces_csv_bytes() {
    let tmp = TempDir::new().unwrap();
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    let args = ["evolve", "--ymax", "20", "--n", "301", "--tmax", "2", "--amplitude", "0.05", "--set", "evo.stride=7"];
    assert!(lab(&first, &args).status.success());
    let manifest = first.join("evolve_manifest.json");
    let r = lab(&second, &["evolve", "--manifest", manifest.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for name in ["evolve_snapshots.csv", "evolve_norms.csv", "evolve_h.dat"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
    let outputs = json(&manifest)["outputs"].as_array().unwrap().len();
    assert!(outputs >= 3);
}

#[test]
fn manifest_of_another_subcommand_is_rejected() {
    let tmp = TempDir::new().unwrap();
    assert!(lab(tmp.path(), &["cylinder"]).status.success());
    let m = tmp.path().join("cylinder_manifest.json");
    assert_eq!(lab(tmp.path(), &["spectrum", "--manifest", m.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn collapse_is_a_result_not_a_failure() {
    let tmp = TempDir::new().unwrap();
    let args = [
        "evolve", "--ymax", "20", "--n", "801", "--tmax", "20", "--preset", "bump", "--amplitude", "-0.4",
        "--set", "data.velocity=bump", "--set", "data.velocity_amplitude=-0.3", "--set", "data.project_c=false",
    ];
    let r = lab(tmp.path(), &args);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let report = json(&tmp.path().join("evolve_report.json"));
    assert_eq!(report["fate"]["fate"], "Collapsed");
    assert_ne!(report["termination"]["reason"], "Completed");
}

#[test]
fn profiles_can_come_from_a_file() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data.csv");
    let mut text = String::from("y,phi,pi\n");
    for i in 0..=100 {
        let y = 0.1 * i as f64;
        text.push_str(&format!("{y},{},0\n", 0.01 * (-y * y).exp()));
    }
    fs::write(&data, text).unwrap();
    let set = format!("data.file={}", data.display());
    let r = lab(tmp.path(), &["linear", "--ymax", "20", "--n", "401", "--tmax", "1", "--preset", "file", "--set", &set]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = fs::read_to_string(tmp.path().join("linear_snapshots.csv")).unwrap();
    let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[..2], [0.0, 0.0]);
    assert!(first[2] > 0.0);
}
