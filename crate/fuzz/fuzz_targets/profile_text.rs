#![no_main]

use libfuzzer_sys::fuzz_target;
use polycrit::RadialProfile;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(p) = RadialProfile::parse_text(text) {
        // accepted input survives a round trip
        let back = RadialProfile::parse_text(&p.to_text()).expect("own output parses");
        assert_eq!(back.terms, p.terms);
        let _ = p.eval(1.0);
        let _ = p.laplacian(5);
    }
});
