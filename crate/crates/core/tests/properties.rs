//! Property tests for the structural invariants of meshes, quadrature, local spaces, the complex,
//! the products, the solver and the verification harness.

use nalgebra::DVector;
use proptest::prelude::*;

use polyddr::ddr::{DDRCore, SpaceKind};
use polyddr::mesh::{agglomerate_pairs, generate_cubic_mesh, generate_tet_mesh, Entity, Mesh, MeshSpec};
use polyddr::poly::{Family, Frame};
use polyddr::polyspaces::{analytic_dim, subspace_basis, BasisKind};
use polyddr::products::{Products, Stabilization};
use polyddr::quadrature::{cell_rule, entity_rule};
use polyddr::scheme::{assemble, solve, MagnetostaticsProblem};
use polyddr::verification::{check_commutation, check_complex, TrigScalar};

fn light() -> ProptestConfig {
    ProptestConfig { cases: 12, ..ProptestConfig::default() }
}

/// Each edge of each cell lies on exactly two faces of the cell, with opposite w_TF w_FE.
fn assert_orientation_consistency(mesh: &Mesh) {
    for (t, cell) in mesh.cells.iter().enumerate() {
        for &e in &cell.edges {
            let mut terms = vec![];
            for (i, &f) in cell.faces.iter().enumerate() {
                if let Some(j) = mesh.faces[f].edges.iter().position(|&x| x == e) {
                    terms.push(cell.face_orientations[i] * mesh.faces[f].edge_orientations[j]);
                }
            }
            assert_eq!(terms.len(), 2, "cell {t} edge {e}");
            assert_eq!(terms[0] + terms[1], 0.0, "cell {t} edge {e}");
        }
    }
}

proptest! {
    #![proptest_config(light())]

    #[test]
    fn agglomerated_meshes_keep_consistent_orientations(seed in any::<u64>(), n in 1usize..=3) {
        let mesh = agglomerate_pairs(&generate_cubic_mesh(n), seed);
        assert_orientation_consistency(&mesh);
        let vol: f64 = mesh.cells.iter().map(|c| c.volume).sum();
        prop_assert!((vol - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_preserves_meshes(seed in any::<u64>()) {
        let mesh = agglomerate_pairs(&generate_tet_mesh(1), seed);
        let back = Mesh::from_json_slice(mesh.to_json().as_bytes()).unwrap();
        prop_assert_eq!(back.num_cells(), mesh.num_cells());
        prop_assert_eq!(back.num_edges(), mesh.num_edges());
        prop_assert_eq!(back.to_json(), mesh.to_json());
        assert_orientation_consistency(&back);
    }

    #[test]
    fn refined_integrals_agree(c in prop::collection::vec(-1.0f64..1.0, 10)) {
        // A cubic polynomial in global coordinates, integrated cell by cell.
        let f = |p: &nalgebra::Vector3<f64>| {
            c[0] + c[1] * p.x + c[2] * p.y * p.z + c[3] * p.x * p.x * p.y + c[4] * p.z.powi(3)
                + c[5] * p.x * p.y * p.z + c[6] * p.y.powi(2) + c[7] * p.x.powi(2) * p.z + c[8] * p.y.powi(3) + c[9]
        };
        let total = |mesh: &Mesh| (0..mesh.num_cells()).map(|t| cell_rule(mesh, t, 3).integrate(f)).sum::<f64>();
        let i1 = total(&generate_cubic_mesh(1));
        for n in [2, 3] {
            prop_assert!((total(&generate_cubic_mesh(n)) - i1).abs() < 1e-12);
        }
        prop_assert!((total(&generate_tet_mesh(2)) - i1).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn mesh_spec_parsing_never_panics(s in "\\PC{0,24}") {
        let _ = MeshSpec::parse(&s);
    }

    #[test]
    fn mesh_json_never_panics(data in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = Mesh::from_json_slice(&data);
    }

    #[test]
    fn builtin_specs_round_trip(n in 1usize..=64, seed in any::<u64>()) {
        prop_assert_eq!(MeshSpec::parse(&format!("cubic:{n}")).unwrap(), MeshSpec::Cubic(n));
        prop_assert_eq!(MeshSpec::parse(&format!("builtin:agglo:{n}:{seed}")).unwrap(), MeshSpec::Agglo(n, seed));
    }
}

#[test]
fn decompositions_are_complete() {
    for d in [2usize, 3] {
        for l in 0..=5i64 {
            let vp = analytic_dim(BasisKind::VP, l, d);
            assert_eq!(analytic_dim(BasisKind::G, l, d) + analytic_dim(BasisKind::CG, l, d), vp, "d={d} l={l}");
            assert_eq!(analytic_dim(BasisKind::R, l, d) + analytic_dim(BasisKind::CR, l, d), vp, "d={d} l={l}");
        }
    }
}

/// Ratio of extreme singular values of the square matrix of `op` from `src` into `dst`.
fn isomorphism_condition(mesh: &Mesh, e: Entity, src: BasisKind, src_l: i64, dst: BasisKind, op: impl Fn(&Family) -> Family) -> f64 {
    let s = subspace_basis(mesh, e, src, src_l).unwrap();
    let t = subspace_basis(mesh, e, dst, src_l - 1).unwrap();
    assert_eq!(s.dim(), t.dim(), "{src:?}^{src_l} -> {dst:?}^{}", src_l - 1);
    let rule = entity_rule(mesh, e, 2 * src_l as usize + 2).unwrap();
    let m = t.tabulate(&rule).gram(&op(&s.family).tabulate(&rule.points), &rule.weights);
    let sv = m.singular_values();
    sv.max() / sv.min()
}

#[test]
fn differential_isomorphisms_have_full_rank() {
    let mesh = agglomerate_pairs(&generate_tet_mesh(1), 2);
    for l in 1..=3 {
        for e in [Entity::Face(0), Entity::Face(3)] {
            let c = isomorphism_condition(&mesh, e, BasisKind::P0, l, BasisKind::R, |f| f.vrot());
            assert!(c < 1e8, "rot_F l={l}: {c:e}");
            let c = isomorphism_condition(&mesh, e, BasisKind::CR, l, BasisKind::P, |f| f.div());
            assert!(c < 1e8, "div_F l={l}: {c:e}");
        }
        for t in 0..mesh.num_cells() {
            let e = Entity::Cell(t);
            let c = isomorphism_condition(&mesh, e, BasisKind::CR, l, BasisKind::P, |f| f.div());
            assert!(c < 1e8, "div l={l}: {c:e}");
            let c = isomorphism_condition(&mesh, e, BasisKind::CG, l, BasisKind::R, |f| f.curl());
            assert!(c < 1e8, "curl l={l}: {c:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn commutation_holds_for_random_fields(seed in any::<u64>(), k in 0usize..=1) {
        let r = check_commutation(&generate_cubic_mesh(2), k, seed);
        prop_assert!(r.passed, "{}", r.to_text());
    }

    #[test]
    fn full_curl_annihilates_discrete_gradients(seed in any::<u64>(), k in 0usize..=2) {
        let mesh = agglomerate_pairs(&generate_cubic_mesh(2), seed);
        let core = DDRCore::new(&mesh, k).unwrap();
        let q = core.interpolate(SpaceKind::Grad, &TrigScalar::random(seed, 3, 2.0));
        for t in 0..mesh.num_cells() {
            let c = &core.cells[t];
            let qt = DDRCore::restrict(&q, &c.grad_dofs);
            let ct = &c.curl * (core.local_grad(t) * &qt);
            prop_assert!(ct.amax() < 1e-10 * qt.amax().max(1.0), "cell {t}: {:e}", ct.amax());
        }
    }

    #[test]
    fn reports_are_deterministic(seed in any::<u64>()) {
        let mesh = generate_cubic_mesh(1);
        let a = check_commutation(&mesh, 1, seed).to_json();
        let b = check_commutation(&mesh, 1, seed).to_json();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn gradient_kernel_is_one_dimensional() {
    for k in 0..=1 {
        let mesh = generate_cubic_mesh(2);
        let core = DDRCore::new(&mesh, k).unwrap();
        let sv = core.global_grad().to_dense().singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(s[0] < 1e-10 && s[1] > 1e-3, "k={k}: {:e} {:e}", s[0], s[1]);
        assert_eq!(check_complex(&mesh, k).metrics["nullity uG"], 1.0);
    }
}

/// Largest ratio ||P_div w_T|| / |||w_T|||_div,T over the cells.
fn potential_bound(mesh: &Mesh, k: usize) -> f64 {
    let core = DDRCore::new(mesh, k).unwrap();
    let products = Products::new(&core, Stabilization::Trace);
    let mut c = 0.0f64;
    for t in 0..mesh.num_cells() {
        let p = &core.cells[t].pdiv;
        let l = products.cells[t].norm_div.clone().cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let m = &li * (p.transpose() * p) * li.transpose();
        c = c.max(m.symmetric_eigen().eigenvalues.max().sqrt());
    }
    c
}

#[test]
fn div_potential_is_bounded_uniformly_in_h() {
    for k in 0..=1 {
        let c: Vec<f64> = [1, 2, 4].iter().map(|&n| potential_bound(&generate_cubic_mesh(n), k)).collect();
        for w in c.windows(2) {
            assert!(w[1] / w[0] < 1.5 && w[0] / w[1] < 1.5, "k={k}: {c:?}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 4, ..ProptestConfig::default() })]

    #[test]
    fn discrete_curl_sources_give_divergence_free_potentials(seed in any::<u64>()) {
        let mesh = generate_cubic_mesh(2);
        let core = DDRCore::new(&mesh, 1).unwrap();
        let products = Products::new(&core, Stabilization::Trace);
        let zero = |_: &nalgebra::Vector3<f64>| nalgebra::Vector3::zeros();
        let mu = vec![1.0; mesh.num_cells()];
        let mut system = assemble(&core, &products, &MagnetostaticsProblem { mu, source: &zero });
        let z = DVector::from_fn(core.curl_space.dim, |i, _| (((i as u64).wrapping_mul(2654435761) ^ seed) % 1000) as f64 / 500.0 - 1.0);
        let mdiv = products.assemble(&core, SpaceKind::Div, |c| &c.div, |_| 1.0);
        let r = mdiv.mul_vec(&core.global_curl().mul_vec(&z));
        system.rhs.rows_mut(system.dim_curl, system.dim_div).copy_from(&r);
        let sol = solve(&system).unwrap();
        let da = core.global_div().mul_vec(&sol.a).norm();
        let na = products.l2_norm(&core, SpaceKind::Div, &sol.a);
        prop_assert!(da <= 1e-8 * na, "{da:e} vs {na:e}");
    }
}

#[test]
fn frames_are_right_handed() {
    let mesh = agglomerate_pairs(&generate_tet_mesh(2), 9);
    for f in 0..mesh.num_faces() {
        let fr = Frame::of(&mesh, Entity::Face(f));
        let n = fr.axes[0].cross(&fr.axes[1]);
        assert!((n - mesh.faces[f].normal).norm() < 1e-14);
    }
}
