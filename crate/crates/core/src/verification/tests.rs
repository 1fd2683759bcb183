use super::spaces::{check_recovery_with, check_traces_with, TraceKinds};
use super::*;
use crate::mesh::{agglomerate_pairs, generate_cubic_mesh, generate_tet_mesh};

fn assert_pass(r: &CheckReport) {
    assert!(r.passed, "{}", r.to_text());
}

fn assert_fail(r: &CheckReport) {
    assert!(!r.passed, "negative control passed:\n{}", r.to_text());
}

#[test]
fn complex_and_ranks_on_small_meshes() {
    let r = check_complex(&generate_cubic_mesh(1), 0);
    assert_pass(&r);
    assert_eq!(r.metrics["nullity uG"], 1.0);
    let r = check_complex(&generate_cubic_mesh(2), 0);
    assert_pass(&r);
    assert_eq!(r.metrics["rank D"], 8.0);
    assert_pass(&check_complex(&generate_tet_mesh(1), 1));
}

#[test]
fn complex_fails_on_flipped_edge_and_names_the_face() {
    let mut mesh = generate_cubic_mesh(2);
    mesh.corrupt_edge_orientation(5, 1);
    let r = check_complex(&mesh, 0);
    assert_fail(&r);
    assert!(r.failures.iter().any(|f| f.contains("face 5")), "{}", r.to_text());
}

#[test]
fn commutation_holds_cellwise() {
    let mesh = generate_cubic_mesh(2);
    for k in 0..=1 {
        assert_pass(&check_commutation(&mesh, k, 11));
    }
    assert_pass(&check_commutation(&agglomerate_pairs(&generate_cubic_mesh(2), 2), 1, 3));
}

#[test]
fn commutation_fails_on_flipped_edge() {
    let mut mesh = generate_cubic_mesh(2);
    mesh.corrupt_edge_orientation(3, 0);
    assert_fail(&check_commutation(&mesh, 0, 11));
}

#[test]
fn polynomial_consistency_and_its_negative_control() {
    for mesh in [generate_cubic_mesh(1), generate_tet_mesh(1), agglomerate_pairs(&generate_cubic_mesh(2), 5)] {
        for k in 0..=2 {
            assert_pass(&check_polynomial_consistency(&mesh, k));
        }
    }
    let mut mesh = generate_cubic_mesh(1);
    mesh.corrupt_face_orientation(0, 2);
    assert_fail(&check_polynomial_consistency(&mesh, 1));
}

#[test]
fn links_hold_and_fail_on_flipped_edge() {
    for mesh in [generate_cubic_mesh(2), agglomerate_pairs(&generate_tet_mesh(1), 4)] {
        for k in 0..=2 {
            assert_pass(&check_links(&mesh, k));
        }
    }
    let mut mesh = generate_cubic_mesh(1);
    mesh.corrupt_edge_orientation(2, 1);
    assert_fail(&check_links(&mesh, 1));
}

#[test]
fn traces_hold_and_fail_for_full_spaces() {
    let mesh = agglomerate_pairs(&generate_cubic_mesh(2), 1);
    assert_pass(&check_traces(&mesh, 3));
    let wrong = TraceKinds { ne: BasisKind::VP, rt: BasisKind::RT };
    assert_fail(&check_traces_with(&generate_cubic_mesh(1), 2, wrong));
}

#[test]
fn recovery_holds_and_fails_for_overlapping_pair() {
    let mesh = agglomerate_pairs(&generate_cubic_mesh(2), 1);
    assert_pass(&check_recovery(&mesh, 3, 7));
    let bad = [(BasisKind::R, BasisKind::G)];
    assert_fail(&check_recovery_with(&generate_cubic_mesh(1), 2, 7, &bad));
}

#[test]
fn primal_consistency_rates_on_cubic() {
    let meshes = family_meshes("cubic", &[2, 4], 0).unwrap();
    assert_pass(&check_primal_consistency(&meshes, 0));
}

#[test]
fn primal_consistency_fails_with_flipped_face_on_every_level() {
    let mut meshes = family_meshes("cubic", &[2, 4], 0).unwrap();
    for m in &mut meshes {
        let t = m.num_cells() / 2;
        m.corrupt_face_orientation(t, 0);
    }
    assert_fail(&check_primal_consistency(&meshes, 0));
}

#[test]
fn adjoint_decay_on_cubic() {
    let meshes = family_meshes("cubic", &[2, 4, 8], 0).unwrap();
    assert_pass(&check_adjoint_decay(&meshes, 0));
}

#[test]
fn poincare_on_small_meshes() {
    assert_pass(&check_poincare_levels(&family_meshes("cubic", &[1, 2], 0).unwrap(), 0));
    assert_pass(&check_poincare(&generate_tet_mesh(1), 0));
}

#[test]
fn poincare_fails_on_broken_complex() {
    let mut mesh = generate_cubic_mesh(2);
    mesh.corrupt_edge_orientation(5, 1);
    assert_fail(&check_poincare(&mesh, 0));
}

#[test]
fn reports_serialize() {
    let mut r = CheckReport::new("x");
    r.below("a", 1.0, 2.0, String::new);
    r.at_least("b", 0.0, 1.0, || "at level 2".into());
    assert!(!r.passed);
    let j: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(j["metrics"]["a"], 1.0);
    assert!(r.to_text().starts_with("[FAIL] x"));
}

