//! Replays the fuzz seed corpus through the same invariants the fuzz targets
//! assert, so the seeds stay meaningful on a stable toolchain.

use polycrit::config::SuiteConfig;
use polycrit::green::KernelTable;
use polycrit::rates::{rate_report, RateCase};
use polycrit::tensor::SymTensor;
use polycrit::RadialProfile;
use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

/// Parses each seed, checks the invariant on accepted ones, returns the accepted names.
fn accepted(target: &str, check: impl Fn(&[u8]) -> bool) -> Vec<String> {
    seeds(target).into_iter().filter(|(_, d)| check(d)).map(|(n, _)| n).collect()
}

#[test]
fn profile_seeds() {
    let ok = accepted("profile_text", |d| {
        let Ok(p) = RadialProfile::parse_text(std::str::from_utf8(d).unwrap()) else { return false };
        let back = RadialProfile::parse_text(&p.to_text()).unwrap();
        assert_eq!(back.terms, p.terms);
        true
    });
    assert_eq!(ok, ["bubble", "kernel", "poly"]);
}

#[test]
fn config_seeds() {
    let ok = accepted("config", |d| {
        let Ok(c) = SuiteConfig::parse(std::str::from_utf8(d).unwrap()) else { return false };
        assert!(c.get("tol.giraud") > 0.0);
        true
    });
    assert_eq!(ok, ["counts", "select"]);
}

#[test]
fn rate_case_seeds() {
    let ok = accepted("rate_case", |d| {
        let Ok(c) = RateCase::from_json(std::str::from_utf8(d).unwrap()) else { return false };
        rate_report(&c).is_ok()
    });
    assert_eq!(ok, ["general", "mass", "sphere"]);
}

#[test]
fn kernel_table_seeds() {
    let ok = accepted("kernel_table", |d| {
        let len = u32::from_le_bytes([d[0], d[1], d[2], d[3]]) as usize;
        let (body, side) = d[4..].split_at(len);
        let Ok(t) = KernelTable::from_parts(body, std::str::from_utf8(side).unwrap()) else { return false };
        assert_eq!(KernelTable::from_parts(&t.to_bytes(), &t.sidecar_json()).unwrap(), t);
        true
    });
    assert_eq!(ok, ["n16"]);
}

#[test]
fn tensor_seeds() {
    let ok = accepted("tensor_text", |d| {
        let Ok(t) = SymTensor::parse_text(std::str::from_utf8(d).unwrap()) else { return false };
        assert_eq!(SymTensor::parse_text(&t.to_text()).unwrap(), t);
        true
    });
    assert_eq!(ok, ["identity", "vector"]);
}
