#![no_main]

use libfuzzer_sys::fuzz_target;
use polycrit::rates::{rate_report, RateCase};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = RateCase::from_json(text) {
        if let Ok(r) = rate_report(&c) {
            assert!(!r.name.is_empty());
        }
    }
});
