//! Structured check results shared by every module.

use serde::Serialize;
use serde_json::{Map, Value};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Paper,
    Trivial,
    Derived,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub inputs: Map<String, Value>,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: Provenance,
    /// Extra named quantities (split terms, fitted slopes, ...).
    pub details: Map<String, Value>,
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl CheckReport {
    /// Pass iff |value - expected| <= tol.
    pub fn compare(name: &str, value: f64, expected: f64, tol: f64, prov: Provenance) -> Self {
        let pass = (value - expected).abs() <= tol;
        CheckReport {
            name: name.to_string(),
            inputs: Map::new(),
            value,
            expected: Some(expected),
            tolerance: tol,
            pass,
            provenance: prov,
            details: Map::new(),
            wall_time_s: 0.0,
        }
    }

    /// Report without an expected value; the caller decides pass.
    pub fn flag(name: &str, value: f64, tol: f64, pass: bool, prov: Provenance) -> Self {
        CheckReport {
            name: name.to_string(),
            inputs: Map::new(),
            value,
            expected: None,
            tolerance: tol,
            pass,
            provenance: prov,
            details: Map::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn input(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.inputs.insert(key.to_string(), v.into());
        self
    }

    pub fn detail(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), v.into());
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.wall_time_s = start.elapsed().as_secs_f64();
        self
    }

    pub fn to_json(&self, timing: bool) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if timing {
            if let Value::Object(m) = &mut v {
                m.insert("wall_time_s".into(), fmt_num(self.wall_time_s));
            }
        }
        round_floats(v)
    }

    pub fn csv_row(&self) -> String {
        let e = self.expected.map(fmt17).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            csv_escape(&self.name),
            fmt17(self.value),
            e,
            fmt17(self.tolerance),
            self.pass
        )
    }
}

pub const CSV_HEADER: &str = "name,value,expected,tol,pass";

/// 17 significant digits, the width that round-trips an f64.
pub fn fmt17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{:.16e}", x)
}

fn fmt_num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(fmt17(x));
    }
    let s = fmt17(x);
    let parsed: f64 = s.parse().unwrap_or(x);
    serde_json::Number::from_f64(parsed)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

/// Rounds every float in a JSON tree to 17 significant digits.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => fmt_num(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Bundle with the schema tag, checks sorted by name.
pub fn bundle_json(reports: &[CheckReport], seed: u64, timing: bool) -> Value {
    let mut sorted: Vec<&CheckReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let checks: Vec<Value> = sorted.iter().map(|r| r.to_json(timing)).collect();
    serde_json::json!({
        "schema": 1,
        "seed": seed,
        "all_pass": reports.iter().all(|r| r.pass),
        "checks": checks,
    })
}

pub fn bundle_csv(reports: &[CheckReport]) -> String {
    let mut sorted: Vec<&CheckReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_sets_pass() {
        let r = CheckReport::compare("x", 1.0, 1.0 + 1e-9, 1e-8, Provenance::Trivial);
        assert!(r.pass);
        let r = CheckReport::compare("x", 1.0, 1.1, 1e-8, Provenance::Trivial);
        assert!(!r.pass);
    }

    #[test]
    fn csv_row_shape() {
        let r = CheckReport::compare("a,b", 0.5, 0.5, 0.0, Provenance::Paper);
        let row = r.csv_row();
        assert!(row.starts_with("\"a,b\","));
        assert!(row.ends_with(",true"));
    }

    #[test]
    fn fmt17_roundtrips() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
