#![no_main]

use libfuzzer_sys::fuzz_target;
use polyddr::mesh::Mesh;

fuzz_target!(|data: &[u8]| {
    // Anything accepted must survive a write/read round trip unchanged.
    if let Ok(mesh) = Mesh::from_json_slice(data) {
        let json = mesh.to_json();
        let back = Mesh::from_json_slice(json.as_bytes()).expect("re-reading a written mesh failed");
        assert_eq!(back.to_json(), json);
    }
});
