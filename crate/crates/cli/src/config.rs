//! Flat `key = value` settings merged from a config file and flags, with
//! typed, field-level validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Every key the runner understands.
pub const KNOWN_KEYS: &[&str] = &[
    "command", "n", "m", "alpha", "constraint", "scale", "trace", "seed", "draws", "grid", "y", "regime", "u",
    "ladder", "criteria", "out", "format",
];

#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Parse a config file. Blank lines and `#` comments are skipped.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config("config", format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::config(&key, format!("unknown key on line {}", lineno + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::config(&key, "given twice in the config file"));
            }
        }
        Ok(Self { values })
    }

    /// Overlay flag values; flags win over the file.
    pub fn overlay(&mut self, flags: Vec<(&'static str, Option<String>)>) {
        for (k, v) in flags {
            if let Some(v) = v {
                self.values.insert(k.to_string(), v);
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    /// Reject keys the command does not use, so nothing is silently ignored.
    pub fn restrict(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::config(k, format!("not used by `{command}`"))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e| CliError::config(key, format!("cannot parse {v:?}: {e}"))),
        }
    }

    /// Finite real, optionally bounded below (exclusive).
    pub fn real(&self, key: &str, above: Option<f64>) -> Result<Option<f64>, CliError> {
        let v: Option<f64> = self.get(key)?;
        if let Some(x) = v {
            if !x.is_finite() {
                return Err(CliError::config(key, "must be finite"));
            }
            if let Some(lo) = above {
                if x <= lo {
                    return Err(CliError::config(key, format!("must exceed {lo}, got {x}")));
                }
            }
        }
        Ok(v)
    }

    pub fn positive_int(&self, key: &str) -> Result<Option<usize>, CliError> {
        let v: Option<usize> = self.get(key)?;
        if v == Some(0) {
            return Err(CliError::config(key, "must be positive"));
        }
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|e| CliError::config(key, format!("cannot parse {s:?}: {e}"))))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }

    /// Canonical echo of the settings that determine the output; the output
    /// path and format are excluded so that reruns compare equal.
    pub fn echo(&self, command: &str) -> String {
        let mut s = format!("schmidt {command}");
        for (k, v) in &self.values {
            if k != "out" && k != "format" && k != "command" {
                s.push_str(&format!(" --{k} {v}"));
            }
        }
        s
    }
}

/// `(lo, hi, points)` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid {
    pub fn from_settings(s: &Settings) -> Result<Option<Self>, CliError> {
        let Some(raw) = s.raw("grid") else { return Ok(None) };
        let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
        let bad = || CliError::config("grid", format!("expected lo,hi,points, got {raw:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let points: usize = parts[2].parse().map_err(|_| bad())?;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(CliError::config("grid", "need finite lo < hi"));
        }
        if points < 2 {
            return Err(CliError::config("grid", "need at least 2 points"));
        }
        Ok(Some(Self { lo, hi, points }))
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.hi } else { self.lo + i as f64 * step })
            .collect()
    }
}
