//! Flat `key = value` configuration with layered precedence:
//! command-line flag, then config file (or manifest), then built-in default.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context, Result};

/// `(key, default, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("grid.y_max", "40", "truncation radius of the half-line grid"),
    ("grid.n", "2001", "number of grid nodes on [0, y_max]"),
    ("eig.tol", "1e-13", "ground-state solver tolerance"),
    ("evo.cfl", "0.25", "CFL fraction of the stable step"),
    ("evo.t_max", "10", "final time"),
    ("evo.boundary", "outgoing", "outgoing | frozen"),
    ("evo.stride", "50", "steps between snapshots"),
    ("evo.contamination", "flag", "halt | flag | off"),
    ("evo.filter_mode", "false", "remove the ground-state component after each step (linear runs only)"),
    ("data.preset", "gaussian", "position profile: zero | ground | gaussian | bump | file"),
    ("data.amplitude", "0.01", "position profile amplitude"),
    ("data.width", "2", "position profile width"),
    ("data.velocity", "zero", "velocity profile: zero | ground | gaussian | bump | file"),
    ("data.velocity_amplitude", "0", "velocity profile amplitude"),
    ("data.velocity_width", "2", "velocity profile width"),
    ("data.project_c", "true", "remove the ground-state component of both profiles"),
    ("data.a", "0", "ground-state amplitude added to the position"),
    ("data.file", "", "CSV with columns y,phi,pi used by the `file` presets"),
    ("norms.sigma", "1", "weight exponent of the weighted sup norm"),
    ("shoot.epsilon", "0.01", "data size; the bracket is [-eps^1.5, eps^1.5]"),
    ("shoot.tol", "", "final bracket width; 1e-12 of the initial width when empty"),
    ("shoot.max_bisections", "60", "bisection cap"),
    ("shoot.rule", "full", "full | sign"),
    ("shoot.deltas", "", "comma-separated perturbation sizes for Lipschitz probes"),
    ("cylinder.r0", "1", "initial radius"),
    ("cylinder.dt", "1e-4", "time step"),
    ("cylinder.t_max", "3", "final time"),
    ("verify.seed", "7", "seed of the random test fields"),
    ("verify.samples", "1000", "sample points per identity check"),
];

pub fn is_known(key: &str) -> bool {
    KEYS.iter().any(|(k, _, _)| *k == key)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", no + 1))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn parse_assignment(s: &str) -> Result<(String, String)> {
    let (k, v) = s.split_once('=').ok_or_else(|| usage(format!("expected key=value, got {s:?}")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Raised for unknown keys and malformed config input; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: String) -> anyhow::Error {
    UsageError(msg).into()
}

/// Fully resolved configuration; every known key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Layers `file` and then `flags` over the defaults. Unknown keys in
    /// either layer are usage errors.
    pub fn resolve(file: &BTreeMap<String, String>, flags: &[(String, String)]) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            KEYS.iter().map(|(k, v, _)| (k.to_string(), v.to_string())).collect();
        for (k, v) in file.iter().chain(flags.iter().map(|(k, v)| (k, v))) {
            if !is_known(k) {
                return Err(usage(format!("unknown config key {k:?}")));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { values })
    }

    pub fn from_file(path: &Path) -> Result<BTreeMap<String, String>> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        parse_flat(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("unregistered key {key}"))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.str(key);
        v.parse().map_err(|_| usage(format!("{key}: expected a number, got {v:?}")))
    }

    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.str(key).is_empty() {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.str(key);
        v.parse().map_err(|_| usage(format!("{key}: expected a nonnegative integer, got {v:?}")))
    }

    pub fn u64(&self, key: &str) -> Result<u64> {
        let v = self.str(key);
        v.parse().map_err(|_| usage(format!("{key}: expected a nonnegative integer, got {v:?}")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(usage(format!("{key}: expected true or false, got {v:?}"))),
        }
    }

    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        self.str(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| usage(format!("{key}: bad number {s:?}"))))
            .collect()
    }

    pub fn choice<'a>(&self, key: &str, options: &[&'a str]) -> Result<&'a str> {
        let v = self.str(key);
        options
            .iter()
            .find(|o| **o == v)
            .copied()
            .ok_or_else(|| usage(format!("{key}: expected one of {options:?}, got {v:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let m = parse_flat("# header\n\ngrid.n = 11  # trailing\nevo.cfl=0.5\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["grid.n"], "11");
        assert_eq!(m["evo.cfl"], "0.5");
    }

    #[test]
    fn lines_without_equals_are_rejected() {
        assert!(parse_flat("grid.n 11").is_err());
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: BTreeMap<_, _> = [("grid.n", "301"), ("evo.cfl", "0.5")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let flags = vec![("evo.cfl".to_string(), "0.1".to_string())];
        let c = Config::resolve(&file, &flags).unwrap();
        assert_eq!(c.usize("grid.n").unwrap(), 301);
        assert_eq!(c.f64("evo.cfl").unwrap(), 0.1);
        assert_eq!(c.f64("evo.t_max").unwrap(), 10.0);
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let file: BTreeMap<_, _> = [("grid.bogus".to_string(), "1".to_string())].into_iter().collect();
        let err = Config::resolve(&file, &[]).unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }

    #[test]
    fn every_default_parses() {
        let c = Config::resolve(&BTreeMap::new(), &[]).unwrap();
        assert!(c.opt_f64("shoot.tol").unwrap().is_none());
        assert!(c.f64_list("shoot.deltas").unwrap().is_empty());
        assert!(c.bool("data.project_c").unwrap());
    }
}
