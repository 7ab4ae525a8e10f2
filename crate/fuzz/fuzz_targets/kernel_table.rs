#![no_main]

use libfuzzer_sys::fuzz_target;
use polycrit::green::KernelTable;

// Input layout: 4-byte little-endian length of the binary table, the table,
// then the JSON sidecar.
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let len = u32::from_le_bytes([data[0], data[1], data[2], data[3]]) as usize;
    let rest = &data[4..];
    if len > rest.len() {
        return;
    }
    let (body, side) = rest.split_at(len);
    let Ok(side) = std::str::from_utf8(side) else { return };
    if let Ok(t) = KernelTable::from_parts(body, side) {
        let back = KernelTable::from_parts(&t.to_bytes(), &t.sidecar_json()).expect("own output parses");
        assert_eq!(back, t);
    }
});
