//! Replays the checked-in fuzz corpus through the parsers with the fuzz targets' assertions.

use std::path::PathBuf;

use polyddr::mesh::{Mesh, MeshSpec};

fn corpus(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut seeds: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    seeds.sort();
    assert!(!seeds.is_empty(), "empty corpus {}", dir.display());
    seeds
}

#[test]
fn mesh_json_seeds() {
    let mut accepted = vec![];
    for (name, data) in corpus("mesh_json") {
        if let Ok(mesh) = Mesh::from_json_slice(&data) {
            let json = mesh.to_json();
            let back = Mesh::from_json_slice(json.as_bytes()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(back.to_json(), json, "{name}");
            accepted.push(name);
        }
    }
    assert_eq!(accepted, ["agglo2", "cubic1", "tet1"]);
}

#[test]
fn mesh_spec_seeds() {
    for (name, data) in corpus("mesh_spec") {
        let s = std::str::from_utf8(&data).unwrap();
        let parsed = MeshSpec::parse(s);
        let expect_ok = matches!(name.as_str(), "cubic" | "tet" | "agglo" | "file");
        assert_eq!(parsed.is_ok(), expect_ok, "{name}: {parsed:?}");
    }
}
