#![no_main]

use libfuzzer_sys::fuzz_target;
use polyddr::mesh::MeshSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = MeshSpec::parse(s);
    }
});
