//! Executable checks of the algebraic and approximation properties of the complex. Every check
//! returns a [`CheckReport`] whose failures name the offending entity or mesh level.

mod fields;
mod rates;
mod spaces;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::ddr::{DDRCore, Sampler, ScalarFn, SpaceKind};
use crate::mesh::{Entity, Mesh, MeshError, MeshSpec, Point};
use crate::poly::{Family, Tab};
use crate::polyspaces::{build_basis, projection_matrix, BasisKind};
use crate::products::{alternative_stabilization, Products, Stabilization};
use crate::sparse::Csr;

pub use fields::{TrigScalar, TrigVector};
pub use rates::{check_adjoint_decay, check_poincare, check_poincare_levels, check_primal_consistency, poincare_constants, PoincareConstants};
pub use spaces::{check_recovery, check_traces};

/// Dense stages (SVD ranks, eigenproblems) run only up to this many DOFs in total.
pub const DENSE_LIMIT: usize = 3000;
pub const COMPLEX_TOL: f64 = 1e-10;
pub const COMMUTATION_TOL: f64 = 1e-8;
pub const POLYNOMIAL_TOL: f64 = 1e-9;
pub const SLOPE_TOL: f64 = 0.3;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> CheckReport {
        CheckReport {
            name: name.into(),
            passed: true,
            metrics: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            failures: vec![],
            notes: vec![],
        }
    }

    pub fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    pub fn tolerance(&mut self, key: impl Into<String>, value: f64) {
        self.tolerances.insert(key.into(), value);
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.passed = false;
        self.failures.push(msg.into());
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Records `value` and fails with `msg` unless it is below `tol` (NaN fails).
    pub fn below(&mut self, key: &str, value: f64, tol: f64, msg: impl FnOnce() -> String) {
        self.metric(key, value);
        self.tolerance(key, tol);
        if value.is_nan() || value >= tol {
            let m = msg();
            self.fail(format!("{key} = {value:.3e} (tol {tol:.1e}) {m}"));
        }
    }

    /// Records `value` and fails with `msg` if it exceeds `max`.
    pub fn at_most(&mut self, key: &str, value: f64, max: f64, msg: impl FnOnce() -> String) {
        self.metric(key, value);
        self.tolerance(key, max);
        if value.is_nan() || value > max {
            let m = msg();
            self.fail(format!("{key} = {value:.4} (max {max:.2}) {m}"));
        }
    }

    /// Records `value` and fails with `msg` unless it is at least `min`.
    pub fn at_least(&mut self, key: &str, value: f64, min: f64, msg: impl FnOnce() -> String) {
        self.metric(key, value);
        self.tolerance(key, min);
        if value.is_nan() || value < min {
            let m = msg();
            self.fail(format!("{key} = {value:.4} (min {min:.2}) {m}"));
        }
    }

    /// Merges the metrics and failures of `other`, prefixing its keys.
    pub fn absorb(&mut self, prefix: &str, other: CheckReport) {
        for (k, v) in other.metrics {
            self.metrics.insert(format!("{prefix}.{k}"), v);
        }
        for (k, v) in other.tolerances {
            self.tolerances.insert(format!("{prefix}.{k}"), v);
        }
        for f in other.failures {
            self.fail(format!("{prefix}: {f}"));
        }
        self.notes.extend(other.notes.into_iter().map(|n| format!("{prefix}: {n}")));
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "[{}] {}", if self.passed { "PASS" } else { "FAIL" }, self.name).unwrap();
        for (k, v) in &self.metrics {
            match self.tolerances.get(k) {
                Some(t) => writeln!(s, "  {k} = {v:.6e} (tol {t:.1e})").unwrap(),
                None => writeln!(s, "  {k} = {v:.6e}").unwrap(),
            }
        }
        for n in &self.notes {
            writeln!(s, "  note: {n}").unwrap();
        }
        for f in &self.failures {
            writeln!(s, "  failure: {f}").unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Builds the meshes of a family ("cubic", "tet" or "agglo") at the given resolutions.
pub fn family_meshes(family: &str, levels: &[usize], seed: u64) -> Result<Vec<Mesh>, MeshError> {
    levels
        .iter()
        .map(|&n| {
            let spec = match family {
                "agglo" => format!("builtin:agglo:{n}:{seed}"),
                "cubic" | "tet" => format!("builtin:{family}:{n}"),
                _ => return Err(MeshError::Parse(format!("unknown mesh family '{family}'"))),
            };
            MeshSpec::parse(&spec)?.build()
        })
        .collect()
}

fn describe(mesh: &Mesh, e: Entity) -> String {
    match e {
        Entity::Cell(t) => format!("cell {t}"),
        Entity::Face(f) => format!("face {f} (cells {:?})", mesh.faces[f].cells),
        Entity::Edge(i) => format!("edge {i} (faces {:?})", mesh.edges[i].faces),
        Entity::Vertex(v) => format!("vertex {v}"),
    }
}

/// Largest entry of a sparse matrix and its row.
fn max_entry(m: &Csr) -> (f64, usize) {
    let mut best = (0.0, 0);
    for r in 0..m.nrows {
        for (_, v) in m.row(r) {
            if v.abs() > best.0 {
                best = (v.abs(), r);
            }
        }
    }
    best
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let tol = 1e-9 * sv.max().max(f64::MIN_POSITIVE);
    sv.iter().filter(|&&s| s > tol).count()
}

/// uC uG = 0 and D uC = 0 entrywise, uG I_grad 1 = 0, and the exactness rank identities.
pub fn check_complex(mesh: &Mesh, k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("complex (k={k})"));
    let core = match DDRCore::new(mesh, k) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    rep.metric("mesh regularity", mesh.regularity());
    let (g, c, d) = (core.global_grad(), core.global_curl(), core.global_div());
    let (cg, r) = max_entry(&c.mul(&g));
    rep.below("max|uC uG|", cg, COMPLEX_TOL, || format!("at div DOF {r} on {}", describe(mesh, core.div_space.entity_of(r))));
    let (dc, r) = max_entry(&d.mul(&c));
    rep.below("max|D uC|", dc, COMPLEX_TOL, || format!("on {}", describe(mesh, core.l2_space.entity_of(r))));
    let one = core.interpolate(SpaceKind::Grad, &ScalarFn(|_: &Point| 1.0));
    let g1 = g.mul_vec(&one);
    let r = g1.iamax();
    rep.below("max|uG I 1|", g1.amax(), COMPLEX_TOL, || format!("at curl DOF {r} on {}", describe(mesh, core.curl_space.entity_of(r))));

    let total = core.grad_space.dim + core.curl_space.dim + core.div_space.dim + core.l2_space.dim;
    if total > DENSE_LIMIT {
        rep.note(format!("rank stage skipped: {total} DOFs exceed the dense limit {DENSE_LIMIT}"));
        return rep;
    }
    let (gd, cd, dd) = (g.to_dense(), c.to_dense(), d.to_dense());
    let (rg, rc, rd) = (numerical_rank(&gd), numerical_rank(&cd), numerical_rank(&dd));
    let (ng, nc, nd) = (gd.ncols() - rg, cd.ncols() - rc, dd.ncols() - rd);
    for (key, v) in [("rank uG", rg), ("rank uC", rc), ("rank D", rd), ("nullity uG", ng), ("nullity uC", nc), ("nullity D", nd)] {
        rep.metric(key, v as f64);
    }
    let ncells = mesh.num_cells();
    let pk = core.l2_space.dim;
    if ng != 1 {
        rep.fail(format!("nullity(uG) = {ng}, expected 1"));
    }
    if rg != nc {
        rep.fail(format!("rank(uG) = {rg} but nullity(uC) = {nc}"));
    }
    if rc != nd {
        rep.fail(format!("rank(uC) = {rc} but nullity(D) = {nd}"));
    }
    if rd != pk {
        rep.fail(format!("rank(D) = {rd} but dim P^k over {ncells} cells = {pk}"));
    }
    rep
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1e-300)
}

/// Local commutation uG_T I_grad = I_curl grad, uC_T I_curl = I_div curl and
/// D_T I_div = pi^k div on every cell, with random trigonometric fields.
pub fn check_commutation(mesh: &Mesh, k: usize, seed: u64) -> CheckReport {
    let mut rep = CheckReport::new(format!("commutation (k={k}, seed={seed})"));
    let core = match DDRCore::new(mesh, k) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let q = TrigScalar::random(seed, 3, 2.0);
    let v = TrigVector::random(seed.wrapping_add(1), 3, 2.0);
    let grad_q = q.grad_sampler();
    let curl_v = v.curl_sampler();
    let div_v = v.div_sampler();
    let mut worst = [(0.0f64, 0usize); 3];
    for t in 0..mesh.num_cells() {
        let cell = Entity::Cell(t);
        let c = &core.cells[t];
        let iq = core.interpolate_local(SpaceKind::Grad, cell, &q);
        let igq = core.interpolate_local(SpaceKind::Curl, cell, &grad_q);
        let iv = core.interpolate_local(SpaceKind::Curl, cell, &v);
        let icv = core.interpolate_local(SpaceKind::Div, cell, &curl_v);
        let idv = core.components(SpaceKind::L2, cell, &div_v);
        let iw = core.interpolate_local(SpaceKind::Div, cell, &v);
        let res = [
            rel((core.local_grad(t) * &iq - &igq).amax(), igq.amax()),
            rel((core.local_curl(t) * &iv - &icv).amax(), icv.amax()),
            rel((&c.div * &iw - &idv).amax(), idv.amax()),
        ];
        for i in 0..3 {
            if res[i] > worst[i].0 || res[i].is_nan() {
                worst[i] = (res[i], t);
            }
        }
    }
    for (i, key) in ["grad", "curl", "div"].iter().enumerate() {
        let (r, t) = worst[i];
        rep.below(key, r, COMMUTATION_TOL, || format!("on cell {t}"));
    }
    rep
}

/// Samples a face family (in-plane values) as 3D vectors.
struct PlanarFamily<'a> {
    family: &'a Family,
    axes: [Point; 2],
}

impl Sampler for PlanarFamily<'_> {
    fn sample(&self, points: &[Point]) -> Tab {
        self.family.tabulate(points).from_plane(&self.axes)
    }
}

/// Exact polynomial reproduction by the potentials and traces, and vanishing stabilizations on
/// interpolates of polynomials.
pub fn check_polynomial_consistency(mesh: &Mesh, k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("polynomial consistency (k={k})"));
    let core = match DDRCore::new(mesh, k) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let products = Products::new(&core, Stabilization::Trace);
    let mut worst: BTreeMap<&str, (f64, Entity)> = BTreeMap::new();
    let mut record = |key: &'static str, v: f64, e: Entity| {
        let w = worst.entry(key).or_insert((0.0, e));
        if v > w.0 || v.is_nan() {
            *w = (v, e);
        }
    };
    for t in 0..mesh.num_cells() {
        let c = &core.cells[t];
        let cell = Entity::Cell(t);
        let id = |n: usize| DMatrix::<f64>::identity(n, n);

        let iq = core.interpolate_local(SpaceKind::Grad, cell, &c.p_kp1.family);
        record("P_grad I_grad - id on P^{k+1}", (&c.pgrad * &iq - id(c.p_kp1.dim())).amax(), cell);
        let iv = core.interpolate_local(SpaceKind::Curl, cell, &c.vp_k.family);
        record("P_curl I_curl - id on vP^k", (&c.pcurl * &iv - id(c.vp_k.dim())).amax(), cell);
        let rt = build_basis(&c.p_k.family.frame, cell, BasisKind::RT, k as i64 + 1, &c.rule).expect("RT basis");
        let iw = core.interpolate_local(SpaceKind::Div, cell, &rt.family);
        let pi = projection_matrix(&c.vp_k, &rt.family, &c.rule);
        record("P_div I_div - pi^k on RT^{k+1}", (&c.pdiv * &iw - pi).amax(), cell);

        let iwk = core.interpolate_local(SpaceKind::Div, cell, &c.vp_k.family);
        let cp = &products.cells[t];
        for (key, kind, x) in [
            ("stabilization grad", SpaceKind::Grad, &iq),
            ("stabilization curl", SpaceKind::Curl, &iv),
            ("stabilization div", SpaceKind::Div, &iwk),
        ] {
            let m = cp.product(kind);
            let scale = (x.transpose() * m * x).diagonal().amax();
            record(key, rel((x.transpose() * cp.stab(kind) * x).amax(), scale), cell);
            let alt = alternative_stabilization(&core, kind, t);
            let alt_key = match kind {
                SpaceKind::Grad => "component-norm stabilization grad",
                SpaceKind::Curl => "component-norm stabilization curl",
                _ => "component-norm stabilization div",
            };
            record(alt_key, rel((x.transpose() * alt * x).amax(), scale), cell);
        }
    }
    for f in 0..mesh.num_faces() {
        let fo = &core.faces[f];
        let face = Entity::Face(f);
        let ne = build_basis(&fo.p_k.family.frame, face, BasisKind::NE, k as i64 + 1, &fo.rule).expect("NE basis");
        let s = PlanarFamily { family: &ne.family, axes: mesh.faces[f].frame };
        let iv = core.interpolate_local(SpaceKind::Curl, face, &s);
        let pi = projection_matrix(&fo.vp_k, &ne.family, &fo.rule);
        record("gamma_t I_curl - pi^k on NE^{k+1}(F)", (&fo.tangent_trace * &iv - pi).amax(), face);
    }
    for (key, (v, e)) in worst {
        rep.below(key, v, POLYNOMIAL_TOL, || format!("on {}", describe(mesh, e)));
    }
    rep
}

/// Links between cell and face operators, and between potentials and operators:
/// int_T G_T q . curl z = -sum_F w_TF int_F G_F q . (z x n_F) for z in NE^{k+1}(T),
/// int_T C_T v . grad r = sum_F w_TF int_F C_F v r for r in P^{k+1}(T),
/// P_curl uG_T = G_T, P_div uC_T = C_T and C_T uG_T = 0.
pub fn check_links(mesh: &Mesh, k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("links (k={k})"));
    let core = match DDRCore::new(mesh, k) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let mut worst: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for t in 0..mesh.num_cells() {
        let c = &core.cells[t];
        let cell = &mesh.cells[t];
        let frame = &c.p_k.family.frame;
        let mut put = |key: &'static str, v: f64| {
            let w = worst.entry(key).or_insert((0.0, t));
            if v > w.0 || v.is_nan() {
                *w = (v, t);
            }
        };

        let ne = build_basis(frame, Entity::Cell(t), BasisKind::NE, k as i64 + 1, &c.rule).expect("NE basis");
        let lhs = ne.family.curl().tabulate(&c.rule.points).gram(&c.vp_k.tabulate(&c.rule), &c.rule.weights) * &c.grad;
        let mut rhs = DMatrix::zeros(lhs.nrows(), lhs.ncols());
        for (i, &f) in cell.faces.iter().enumerate() {
            let fo = &core.faces[f];
            let z = ne.family.tabulate(&fo.rule.points).cross(&mesh.faces[f].normal).to_plane(&mesh.faces[f].frame);
            let m = z.gram(&fo.vp_k.tabulate(&fo.rule), &fo.rule.weights) * &fo.grad;
            crate::ddr::scatter(&mut rhs, &c.grad_dofs, &m, &fo.grad_dofs, -cell.face_orientations[i]);
        }
        put("G_T/G_F link", rel((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax())));

        let lhs = c.p_kp1.family.grad().tabulate(&c.rule.points).gram(&c.vp_k.tabulate(&c.rule), &c.rule.weights) * &c.curl;
        let mut rhs = DMatrix::zeros(lhs.nrows(), lhs.ncols());
        for (i, &f) in cell.faces.iter().enumerate() {
            let fo = &core.faces[f];
            let m = c.p_kp1.family.tabulate(&fo.rule.points).gram(&fo.p_k.tabulate(&fo.rule), &fo.rule.weights) * &fo.curl;
            crate::ddr::scatter(&mut rhs, &c.curl_dofs, &m, &fo.curl_dofs, cell.face_orientations[i]);
        }
        put("C_T/C_F link", rel((&lhs - &rhs).amax(), lhs.amax().max(rhs.amax())));

        let ug = core.local_grad(t);
        let uc = core.local_curl(t);
        put("P_curl uG_T - G_T", rel((&c.pcurl * &ug - &c.grad).amax(), c.grad.amax()));
        put("P_div uC_T - C_T", rel((&c.pdiv * &uc - &c.curl).amax(), c.curl.amax().max(1.0)));
        put("C_T uG_T", rel((&c.curl * &ug).amax(), c.grad.amax()));
    }
    for (key, (v, t)) in worst {
        rep.below(key, v, POLYNOMIAL_TOL, || format!("on cell {t}"));
    }
    rep
}

#[cfg(test)]
mod tests;
