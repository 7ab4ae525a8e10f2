//! Flat `key = value` configuration for the suite runner.
//!
//! Keys are dot-namespaced (`green.N = 64`). Blank lines and lines starting
//! with `#` are ignored. Every key must be known; sizes must be positive.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// Positive integer.
    Count,
    /// Positive finite real.
    Positive,
}

/// (key, kind, default)
const NUMERIC: &[(&str, Kind, f64)] = &[
    ("green.N", Kind::Count, 32.0),
    ("green.L", Kind::Positive, std::f64::consts::TAU),
    ("green.b0", Kind::Positive, 1.0),
    ("green.depth", Kind::Count, 2.0),
    ("green.test_functions", Kind::Count, 5.0),
    ("green.budget", Kind::Count, 2_097_152.0),
    ("giraud.N", Kind::Count, 64.0),
    ("giraud.pairs", Kind::Count, 10.0),
    ("hardy.mesh", Kind::Count, 3200.0),
    ("hardy_potential.N", Kind::Count, 32.0),
    ("hardy_potential.gamma", Kind::Positive, 0.5),
    ("rates.trace_samples", Kind::Count, 10.0),
    ("rates.weyl_samples", Kind::Count, 20.0),
    ("radial.mc_samples", Kind::Count, 1_000_000.0),
    ("tol.kappa", Kind::Positive, 1e-6),
    ("tol.bubble.residual", Kind::Positive, 1e-10),
    ("tol.bubble.farfield", Kind::Positive, 1e-8),
    ("tol.pohozaev.identity", Kind::Positive, 1e-8),
    ("tol.pohozaev.d_r", Kind::Positive, 1e-8),
    ("tol.pohozaev.spread", Kind::Positive, 1e-10),
    ("tol.pohozaev.commutator", Kind::Positive, 1e-12),
    ("tol.hardy.k1", Kind::Positive, 0.02),
    ("tol.hardy.k2", Kind::Positive, 0.05),
    ("tol.green.deviation", Kind::Positive, 0.05),
    ("tol.green.representation", Kind::Positive, 1e-3),
    ("tol.green.symmetry", Kind::Positive, 1e-3),
    ("tol.green.mass", Kind::Positive, 0.03),
    ("tol.giraud", Kind::Positive, 0.2),
    ("tol.hardy_potential.ratio", Kind::Positive, 3.0),
    ("tol.hardy_potential.exponent", Kind::Positive, 0.1),
    ("tol.trace", Kind::Positive, 1e-6),
    ("tol.weyl", Kind::Positive, 1e-8),
    ("tol.sphere_moment", Kind::Positive, 1e-12),
    ("tol.monte_carlo", Kind::Positive, 4.0),
];

pub const SUITES: &[&str] = &["constants", "radial", "bubble", "pohozaev", "green", "hardy", "rates"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    /// Empty means every suite.
    pub suites: Vec<String>,
    pub seed: u64,
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub timing: bool,
    values: BTreeMap<&'static str, f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            suites: Vec::new(),
            seed: 0,
            json: None,
            csv: None,
            timing: false,
            values: NUMERIC.iter().map(|(k, _, v)| (*k, *v)).collect(),
        }
    }
}

fn lookup(key: &str) -> Option<(&'static str, Kind)> {
    NUMERIC.iter().find(|(k, _, _)| *k == key).map(|(k, kind, _)| (*k, *kind))
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = SuiteConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !seen.insert(k.to_string()) {
                return Err(Error::Parse(format!("line {}: duplicate key {k}", ln + 1)));
            }
            c.set(k, v).map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "suite.select" => {
                let list: Vec<String> =
                    value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
                self.select(&list)?;
            }
            "seed" => {
                self.seed = value.parse().map_err(|_| Error::Parse(format!("seed must be an unsigned integer, got {value:?}")))?;
            }
            "output.json" => self.json = Some(PathBuf::from(value)),
            "output.csv" => self.csv = Some(PathBuf::from(value)),
            "output.timing" => {
                self.timing = value.parse().map_err(|_| Error::Parse(format!("output.timing must be true or false, got {value:?}")))?;
            }
            _ => {
                let (k, kind) = lookup(key).ok_or_else(|| Error::Parse(format!("unknown key {key:?}")))?;
                let v: f64 = value.parse().map_err(|_| Error::Parse(format!("{key}: not a number: {value:?}")))?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Parse(format!("{key} must be positive, got {value}")));
                }
                if kind == Kind::Count && (v.fract() != 0.0 || v > 1e12) {
                    return Err(Error::Parse(format!("{key} must be a positive integer, got {value}")));
                }
                self.values.insert(k, v);
            }
        }
        Ok(())
    }

    pub fn select(&mut self, names: &[String]) -> Result<()> {
        for s in names {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::Parse(format!("unknown suite {s:?}; known: {}", SUITES.join(", "))));
            }
        }
        self.suites = names.to_vec();
        Ok(())
    }

    pub fn selected(&self, suite: &str) -> bool {
        self.suites.is_empty() || self.suites.iter().any(|s| s == suite)
    }

    /// Numeric value of a known key; panics on an unknown key (a registry bug).
    pub fn get(&self, key: &str) -> f64 {
        *self.values.get(key).unwrap_or_else(|| panic!("config key {key} is not registered"))
    }

    pub fn count(&self, key: &str) -> usize {
        self.get(key) as usize
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.get(&format!("tol.{key}"))
    }

    pub fn keys() -> impl Iterator<Item = &'static str> {
        ["suite.select", "seed", "output.json", "output.csv", "output.timing"]
            .into_iter()
            .chain(NUMERIC.iter().map(|(k, _, _)| *k))
    }
}
