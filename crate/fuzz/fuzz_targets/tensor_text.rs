#![no_main]

use libfuzzer_sys::fuzz_target;
use polycrit::tensor::SymTensor;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = SymTensor::parse_text(text) {
        let back = SymTensor::parse_text(&t.to_text()).expect("own output parses");
        assert_eq!(back, t);
    }
});
