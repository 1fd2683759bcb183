//! Checks on the local polynomial spaces alone: trace properties of the trimmed spaces and the
//! recovery operator of direct-sum pairs.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{describe, CheckReport, POLYNOMIAL_TOL};
use crate::mesh::{Entity, Mesh};
use crate::poly::{Frame, Tab};
use crate::polyspaces::{build_basis, orthonormalize, projection_coupling_norm, projection_matrix, recovery, BasisKind, PolyBasis};
use crate::quadrature::{cell_rule, edge_rule, face_rule, QuadRule};

/// Worst value per key with the entity where it occurred.
struct Worst(std::collections::BTreeMap<String, (f64, Entity)>);

impl Worst {
    fn put(&mut self, key: String, v: f64, e: Entity) {
        let w = self.0.entry(key).or_insert((0.0, e));
        if v > w.0 || v.is_nan() {
            *w = (v, e);
        }
    }

    fn report(self, rep: &mut CheckReport, mesh: &Mesh) {
        for (key, (v, e)) in self.0 {
            rep.below(&key, v, POLYNOMIAL_TOL, || format!("on {}", describe(mesh, e)));
        }
    }
}

/// Largest relative L2 distance on a rule between the members of `vals` and their projections
/// onto the orthonormal `target`. Members are measured against `floor` when nearly zero.
fn distance_to_space(vals: &Tab, target: &PolyBasis, rule: &QuadRule, floor: f64) -> f64 {
    let tt = target.tabulate(rule);
    let coeffs = tt.gram(vals, &rule.weights);
    let res = vals.sub(&tt.combine(&coeffs.transpose()));
    let mut worst = 0.0f64;
    for i in 0..vals.len() {
        let (mut r2, mut f2) = (0.0, 0.0);
        for c in 0..vals.vals.len() {
            for (q, w) in rule.weights.iter().enumerate() {
                r2 += w * res.vals[c][(i, q)].powi(2);
                f2 += w * vals.vals[c][(i, q)].powi(2);
            }
        }
        worst = worst.max(r2.sqrt() / f2.sqrt().max(floor));
    }
    worst
}

/// Trimmed kinds used by the trace checks, replaceable to exercise the negative control.
#[derive(Clone, Copy)]
pub(crate) struct TraceKinds {
    pub ne: BasisKind,
    pub rt: BasisKind,
}

impl Default for TraceKinds {
    fn default() -> TraceKinds {
        TraceKinds { ne: BasisKind::NE, rt: BasisKind::RT }
    }
}

/// Trace properties of the trimmed spaces for 1 <= l <= lmax on every face and cell:
/// tangential traces of NE^l and normal traces of RT^l lie in P^{l-1} of the boundary entity,
/// and rotated tangential traces of NE^l(T) lie in RT^l(F).
pub fn check_traces(mesh: &Mesh, lmax: usize) -> CheckReport {
    check_traces_with(mesh, lmax, TraceKinds::default())
}

pub(crate) fn check_traces_with(mesh: &Mesh, lmax: usize, kinds: TraceKinds) -> CheckReport {
    let mut rep = CheckReport::new(format!("trace properties (l <= {lmax})"));
    let mut worst = Worst(Default::default());
    let basis = |frame: &Frame, e: Entity, kind, l: usize, rule: &QuadRule| {
        build_basis(frame, e, kind, l as i64, rule).map_err(|err| err.to_string())
    };
    let run = |worst: &mut Worst| -> Result<(), String> {
        for l in 1..=lmax {
            let deg = 2 * l + 4;
            let edge_p = |e: usize| -> Result<(QuadRule, PolyBasis), String> {
                let r = edge_rule(mesh, e, deg);
                let b = basis(&Frame::of(mesh, Entity::Edge(e)), Entity::Edge(e), BasisKind::P, l - 1, &r)?;
                Ok((r, b))
            };
            for f in 0..mesh.num_faces() {
                let face = &mesh.faces[f];
                let fe = Entity::Face(f);
                let frame = Frame::of(mesh, fe);
                let rule = face_rule(mesh, f, deg);
                let ne = basis(&frame, fe, kinds.ne, l, &rule)?;
                let rt = basis(&frame, fe, kinds.rt, l, &rule)?;
                for &e in &face.edges {
                    let (er, pe) = edge_p(e)?;
                    let floor = (mesh.edges[e].length / face.area).sqrt();
                    let t = ne.family.tabulate(&er.points).from_plane(&face.frame).dot(&mesh.edges[e].tangent);
                    worst.put(format!("NE^{l}(F) . t_E"), distance_to_space(&t, &pe, &er, floor), fe);
                    let n = rt.family.tabulate(&er.points).from_plane(&face.frame).dot(&mesh.face_edge_normal(f, e));
                    worst.put(format!("RT^{l}(F) . n_FE"), distance_to_space(&n, &pe, &er, floor), fe);
                }
            }
            for t in 0..mesh.num_cells() {
                let cell = &mesh.cells[t];
                let ce = Entity::Cell(t);
                let frame = Frame::of(mesh, ce);
                let rule = cell_rule(mesh, t, deg);
                let ne = basis(&frame, ce, kinds.ne, l, &rule)?;
                let rt = basis(&frame, ce, kinds.rt, l, &rule)?;
                for &e in &cell.edges {
                    let (er, pe) = edge_p(e)?;
                    let floor = (mesh.edges[e].length / cell.volume).sqrt();
                    let v = ne.family.tabulate(&er.points).dot(&mesh.edges[e].tangent);
                    worst.put(format!("NE^{l}(T) . t_E"), distance_to_space(&v, &pe, &er, floor), ce);
                }
                for &f in &cell.faces {
                    let face = &mesh.faces[f];
                    let fr = face_rule(mesh, f, deg);
                    let fframe = Frame::of(mesh, Entity::Face(f));
                    let floor = (face.area / cell.volume).sqrt();
                    let pf = basis(&fframe, Entity::Face(f), BasisKind::P, l - 1, &fr)?;
                    let w = rt.family.tabulate(&fr.points).dot(&face.normal);
                    worst.put(format!("RT^{l}(T) . n_F"), distance_to_space(&w, &pf, &fr, floor), ce);
                    let rtf = basis(&fframe, Entity::Face(f), BasisKind::RT, l, &fr)?;
                    let rtf = PolyBasis { family: orthonormalize(&rtf.family, &fr, true), ..rtf };
                    let v = ne.family.tabulate(&fr.points).cross(&face.normal).to_plane(&face.frame);
                    worst.put(format!("NE^{l}(T) x n_F"), distance_to_space(&v, &rtf, &fr, floor), ce);
                }
            }
        }
        Ok(())
    };
    if let Err(e) = run(&mut worst) {
        rep.fail(e);
    }
    worst.report(&mut rep, mesh);
    rep
}

/// Recovery by the explicit formula (Id - pi_S pi_Sc)^-1 (b - pi_S c) + (Id - pi_Sc pi_S)^-1
/// (c - pi_Sc b), in coefficients of the orthonormal basis of the full space.
fn recovery_formula(qs: &DMatrix<f64>, qc: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<DVector<f64>> {
    let n = qs.nrows();
    let ps = qs * qs.transpose();
    let pc = qc * qc.transpose();
    let (sb, cc) = (qs * b, qc * c);
    let id = DMatrix::<f64>::identity(n, n);
    let x = (&id - &ps * &pc).lu().solve(&(&sb - &ps * &cc))?;
    let y = (&id - &pc * &ps).lu().solve(&(&cc - &pc * &sb))?;
    Some(x + y)
}

/// Direct-sum pairs used by the recovery check, replaceable to exercise the negative control.
pub(crate) const RECOVERY_PAIRS: [(BasisKind, BasisKind); 2] = [(BasisKind::R, BasisKind::CR), (BasisKind::G, BasisKind::CG)];

/// Recovery identities pi_S rec(b, c) = b, pi_Sc rec(b, c) = c and rec(pi_S a, pi_Sc a) = a for
/// the pairs (R^l, cR^l) and (G^l, cG^l) on every face and cell, 0 <= l <= lmax, with the
/// stacked solve checked against the explicit formula.
pub fn check_recovery(mesh: &Mesh, lmax: usize, seed: u64) -> CheckReport {
    check_recovery_with(mesh, lmax, seed, &RECOVERY_PAIRS)
}

pub(crate) fn check_recovery_with(mesh: &Mesh, lmax: usize, seed: u64, pairs: &[(BasisKind, BasisKind)]) -> CheckReport {
    let mut rep = CheckReport::new(format!("recovery (l <= {lmax}, seed={seed})"));
    let mut worst = Worst(Default::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entities: Vec<Entity> = (0..mesh.num_faces()).map(Entity::Face).chain((0..mesh.num_cells()).map(Entity::Cell)).collect();
    let mut coupling = 0.0f64;
    for &ent in &entities {
        let frame = Frame::of(mesh, ent);
        for l in 0..=lmax {
            let rule = match ent {
                Entity::Face(f) => face_rule(mesh, f, 2 * l + 4),
                Entity::Cell(t) => cell_rule(mesh, t, 2 * l + 4),
                _ => unreachable!(),
            };
            for &(ks, kc) in pairs {
                let build = |kind| build_basis(&frame, ent, kind, l as i64, &rule);
                let (s, sc, full) = match (build(ks), build(kc), build(BasisKind::VP)) {
                    (Ok(s), Ok(sc), Ok(full)) => (s, sc, full),
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                        rep.fail(format!("{} at l={l}: {e}", describe(mesh, ent)));
                        continue;
                    }
                };
                let tag = format!("{ks:?}^{l}+{kc:?}^{l}");
                let qs = projection_matrix(&full, &s.family, &rule);
                let qc = projection_matrix(&full, &sc.family, &rule);
                let b = DVector::from_fn(s.dim(), |_, _| rng.random_range(-1.0..1.0));
                let c = DVector::from_fn(sc.dim(), |_, _| rng.random_range(-1.0..1.0));
                let scale = b.norm() + c.norm();
                let a = match recovery(&s, &sc, &full, &rule, &b, &c) {
                    Ok(a) => a,
                    Err(e) => {
                        rep.fail(format!("{tag} on {}: {e}", describe(mesh, ent)));
                        continue;
                    }
                };
                let proj_err = (qs.transpose() * &a - &b).amax().max((qc.transpose() * &a - &c).amax());
                worst.put(format!("{tag} projections of rec(b, c)"), proj_err / scale, ent);
                match recovery_formula(&qs, &qc, &b, &c) {
                    Some(a2) => worst.put(format!("{tag} stacked vs explicit formula"), (&a - a2).amax() / scale, ent),
                    None => rep.fail(format!("{tag} on {}: explicit formula is singular", describe(mesh, ent))),
                }
                let a0 = DVector::from_fn(full.dim(), |_, _| rng.random_range(-1.0..1.0));
                let (b0, c0) = (qs.transpose() * &a0, qc.transpose() * &a0);
                if let Ok(r) = recovery(&s, &sc, &full, &rule, &b0, &c0) {
                    worst.put(format!("{tag} rec(pi_S a, pi_Sc a) - a"), (&r - &a0).amax() / a0.amax(), ent);
                }
                coupling = coupling.max(projection_coupling_norm(&s, &sc, &rule));
            }
        }
    }
    rep.below("max coupling |pi_S on S^c|", coupling, 1.0, || "the pair is not a direct sum".into());
    worst.report(&mut rep, mesh);
    rep
}
