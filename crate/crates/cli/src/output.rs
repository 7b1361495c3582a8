use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use crate::config::Config;

pub const OUTDIR_ENV: &str = "CATENOID_LAB_OUTDIR";

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn outdir() -> PathBuf {
    std::env::var_os(OUTDIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from)
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Collects every file written by one subcommand and finishes with its manifest.
pub struct Output {
    dir: PathBuf,
    subcommand: String,
    started: f64,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, subcommand: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), subcommand: subcommand.into(), started: unix_now(), written: Vec::new() })
    }

    fn path(&mut self, suffix: &str) -> PathBuf {
        let p = self.dir.join(format!("{}_{suffix}", self.subcommand));
        self.written.push(p.clone());
        p
    }

    pub fn csv<I>(&mut self, suffix: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.path(&format!("{suffix}.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.into_iter().map(num))?;
        }
        w.flush()?;
        Ok(path)
    }

    /// CSV whose rows mix text and numbers; callers format the numbers with [`num`].
    pub fn csv_text(&mut self, suffix: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let path = self.path(&format!("{suffix}.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// Two whitespace-separated columns, ready for gnuplot.
    pub fn dat(&mut self, suffix: &str, xs: &[f64], ys: &[f64]) -> Result<PathBuf> {
        let path = self.path(&format!("{suffix}.dat"));
        let mut f = std::io::BufWriter::new(fs::File::create(&path)?);
        for (x, y) in xs.iter().zip(ys) {
            writeln!(f, "{} {}", num(*x), num(*y))?;
        }
        f.flush()?;
        Ok(path)
    }

    pub fn json(&mut self, suffix: &str, value: &Value) -> Result<PathBuf> {
        let path = self.path(&format!("{suffix}.json"));
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(path)
    }

    /// Writes `<subcommand>_manifest.json` and returns its path.
    pub fn finish(mut self, config: &Config, exit_code: i32) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}_manifest.json", self.subcommand));
        let manifest = json!({
            "subcommand": self.subcommand,
            "config": config.values(),
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": self.started,
            "finished_unix": unix_now(),
            "exit_code": exit_code,
            "outputs": self.written.drain(..).map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(path)
    }
}

pub struct Manifest {
    pub subcommand: String,
    pub config: std::collections::BTreeMap<String, String>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let subcommand = v["subcommand"].as_str().context("manifest lacks a subcommand")?.to_string();
    let config = v["config"]
        .as_object()
        .context("manifest lacks a config map")?
        .iter()
        .map(|(k, val)| Ok((k.clone(), val.as_str().context("config values must be strings")?.to_string())))
        .collect::<Result<_>>()?;
    Ok(Manifest { subcommand, config })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::f64::consts::PI, 5e-324] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
