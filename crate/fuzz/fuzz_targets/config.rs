#![no_main]

use libfuzzer_sys::fuzz_target;
use polycrit::config::SuiteConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = SuiteConfig::parse(text) {
        for k in SuiteConfig::keys().filter(|k| k.contains('.') && !k.starts_with("output.") && *k != "suite.select") {
            let v = c.get(k);
            assert!(v.is_finite() && v > 0.0);
        }
    }
});
