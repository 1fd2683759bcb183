//! Discrete L2-products on the DDR spaces: potential-based consistent terms plus stabilization,
//! the h-weighted component norms, and the graph norms used to measure errors.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::ddr::{DDRCore, SpaceKind};
use crate::mesh::Entity;
use crate::poly::Tab;
use crate::sparse::{Csr, Triplet};

/// Which stabilization enters the L2-products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stabilization {
    /// Face and edge differences between the potential and the lower-dimensional traces.
    #[default]
    Trace,
    /// Component-norm inner product of `v - I P v`.
    ComponentNorm,
}

/// Local matrices of one cell, all over the cell closure DOFs of the respective space.
#[derive(Debug, Clone)]
pub struct CellProducts {
    pub stab_grad: DMatrix<f64>,
    pub stab_curl: DMatrix<f64>,
    pub stab_div: DMatrix<f64>,
    pub grad: DMatrix<f64>,
    pub curl: DMatrix<f64>,
    pub div: DMatrix<f64>,
    pub norm_grad: DMatrix<f64>,
    pub norm_curl: DMatrix<f64>,
    pub norm_div: DMatrix<f64>,
}

pub struct Products {
    pub stabilization: Stabilization,
    pub cells: Vec<CellProducts>,
}

/// Adds scale * sum_c V_c^T diag(w) V_c, where V_c is (npts x n).
fn add_weighted_gram(m: &mut DMatrix<f64>, comps: &[DMatrix<f64>], w: &[f64], scale: f64) {
    for v in comps {
        let mut vw = v.clone();
        for (q, wq) in w.iter().enumerate() {
            vw.row_mut(q).scale_mut(*wq);
        }
        m.gemm_tr(scale, v, &vw, 1.0);
    }
}

/// Values (npts x nloc) of the polynomials `coeffs^T tab` for each component.
fn values(tab: &Tab, coeffs: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    tab.vals.iter().map(|v| v.transpose() * coeffs).collect()
}

/// Columns of `src` (over `src_dofs`) moved into a matrix over `dst_dofs`.
fn embed(src: &DMatrix<f64>, src_dofs: &[usize], dst_dofs: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(src.nrows(), dst_dofs.len());
    crate::ddr::scatter(&mut out, dst_dofs, src, src_dofs, 1.0);
    out
}

fn block_identity(m: &mut DMatrix<f64>, dofs: &[usize], own: std::ops::Range<usize>, scale: f64) {
    for d in own {
        let p = dofs.binary_search(&d).unwrap();
        m[(p, p)] += scale;
    }
}

impl CellProducts {
    pub fn stab(&self, kind: SpaceKind) -> &DMatrix<f64> {
        match kind {
            SpaceKind::Grad => &self.stab_grad,
            SpaceKind::Curl => &self.stab_curl,
            SpaceKind::Div => &self.stab_div,
            SpaceKind::L2 => panic!("no stabilization on the L2 space"),
        }
    }

    pub fn product(&self, kind: SpaceKind) -> &DMatrix<f64> {
        match kind {
            SpaceKind::Grad => &self.grad,
            SpaceKind::Curl => &self.curl,
            SpaceKind::Div => &self.div,
            SpaceKind::L2 => panic!("the L2 space uses the plain L2 product"),
        }
    }

    pub fn component_norm(&self, kind: SpaceKind) -> &DMatrix<f64> {
        match kind {
            SpaceKind::Grad => &self.norm_grad,
            SpaceKind::Curl => &self.norm_curl,
            SpaceKind::Div => &self.norm_div,
            SpaceKind::L2 => panic!("no component norm on the L2 space"),
        }
    }
}

/// Trace-difference stabilization of the grad space on cell t.
pub fn stabilization_grad(core: &DDRCore, t: usize) -> DMatrix<f64> {
    let mesh = core.mesh;
    let c = &core.cells[t];
    let n = c.grad_dofs.len();
    let mut s = DMatrix::zeros(n, n);
    for &f in &mesh.cells[t].faces {
        let fo = &core.faces[f];
        let p = values(&c.p_kp1.tabulate(&fo.rule), &c.pgrad);
        let g = values(&fo.p_kp1.tabulate(&fo.rule), &embed(&fo.trace, &fo.grad_dofs, &c.grad_dofs));
        add_weighted_gram(&mut s, &[&p[0] - &g[0]], &fo.rule.weights, mesh.faces[f].diameter);
    }
    for &e in &mesh.cells[t].edges {
        let ed = &core.edges[e];
        let p = values(&c.p_kp1.tabulate(&ed.rule), &c.pgrad);
        let q = values(&ed.p_kp1.tabulate(&ed.rule), &embed(&ed.rec, &ed.grad_dofs, &c.grad_dofs));
        add_weighted_gram(&mut s, &[&p[0] - &q[0]], &ed.rule.weights, mesh.edges[e].length.powi(2));
    }
    s
}

/// Trace-difference stabilization of the curl space on cell t.
pub fn stabilization_curl(core: &DDRCore, t: usize) -> DMatrix<f64> {
    let mesh = core.mesh;
    let c = &core.cells[t];
    let n = c.curl_dofs.len();
    let mut s = DMatrix::zeros(n, n);
    for &f in &mesh.cells[t].faces {
        let fo = &core.faces[f];
        let p = values(&c.vp_k.tabulate(&fo.rule).to_plane(&mesh.faces[f].frame), &c.pcurl);
        let g = values(&fo.vp_k.tabulate(&fo.rule), &embed(&fo.tangent_trace, &fo.curl_dofs, &c.curl_dofs));
        add_weighted_gram(&mut s, &[&p[0] - &g[0], &p[1] - &g[1]], &fo.rule.weights, mesh.faces[f].diameter);
    }
    for &e in &mesh.cells[t].edges {
        let ed = &core.edges[e];
        let p = values(&c.vp_k.tabulate(&ed.rule).dot(&mesh.edges[e].tangent), &c.pcurl);
        let own: Vec<usize> = core.curl_space.entity_dofs(Entity::Edge(e)).collect();
        let ve = values(&ed.p_k.tabulate(&ed.rule), &embed(&DMatrix::identity(own.len(), own.len()), &own, &c.curl_dofs));
        add_weighted_gram(&mut s, &[&p[0] - &ve[0]], &ed.rule.weights, mesh.edges[e].length.powi(2));
    }
    s
}

/// Trace-difference stabilization of the div space on cell t.
pub fn stabilization_div(core: &DDRCore, t: usize) -> DMatrix<f64> {
    let mesh = core.mesh;
    let c = &core.cells[t];
    let n = c.div_dofs.len();
    let mut s = DMatrix::zeros(n, n);
    for &f in &mesh.cells[t].faces {
        let fo = &core.faces[f];
        let p = values(&c.vp_k.tabulate(&fo.rule).dot(&mesh.faces[f].normal), &c.pdiv);
        let own: Vec<usize> = core.div_space.entity_dofs(Entity::Face(f)).collect();
        let wf = values(&fo.p_k.tabulate(&fo.rule), &embed(&DMatrix::identity(own.len(), own.len()), &own, &c.div_dofs));
        add_weighted_gram(&mut s, &[&p[0] - &wf[0]], &fo.rule.weights, mesh.faces[f].diameter);
    }
    s
}

/// Gram matrix of the component norm on cell t over the closure DOFs of the space.
pub fn component_norm_matrix(core: &DDRCore, kind: SpaceKind, t: usize) -> DMatrix<f64> {
    let mesh = core.mesh;
    let c = &core.cells[t];
    let space = core.space(kind);
    let dofs = match kind {
        SpaceKind::Grad => &c.grad_dofs,
        SpaceKind::Curl => &c.curl_dofs,
        SpaceKind::Div => &c.div_dofs,
        SpaceKind::L2 => panic!("no component norm on the L2 space"),
    };
    let mut m = DMatrix::zeros(dofs.len(), dofs.len());
    block_identity(&mut m, dofs, space.entity_dofs(Entity::Cell(t)), 1.0);
    for &f in &mesh.cells[t].faces {
        let hf = mesh.faces[f].diameter;
        block_identity(&mut m, dofs, space.entity_dofs(Entity::Face(f)), hf);
        for &e in &mesh.faces[f].edges {
            let he = mesh.edges[e].length;
            match kind {
                SpaceKind::Grad => {
                    // ||q_E||^2 of the reconstructed edge polynomial, in an orthonormal basis.
                    let ed = &core.edges[e];
                    let r = embed(&ed.rec, &ed.grad_dofs, dofs);
                    m.gemm_tr(hf * he, &r, &r, 1.0);
                }
                SpaceKind::Curl => block_identity(&mut m, dofs, space.entity_dofs(Entity::Edge(e)), hf * he),
                _ => {}
            }
        }
    }
    m
}

/// s~ = (I - I_T P)^T N (I - I_T P) with N the component-norm Gram matrix.
pub fn alternative_stabilization(core: &DDRCore, kind: SpaceKind, t: usize) -> DMatrix<f64> {
    let c = &core.cells[t];
    let (basis, pot) = match kind {
        SpaceKind::Grad => (&c.p_kp1, &c.pgrad),
        SpaceKind::Curl => (&c.vp_k, &c.pcurl),
        SpaceKind::Div => (&c.vp_k, &c.pdiv),
        SpaceKind::L2 => panic!("no stabilization on the L2 space"),
    };
    let ip = core.interpolate_local(kind, Entity::Cell(t), &basis.family) * pot;
    let e = DMatrix::identity(ip.nrows(), ip.ncols()) - ip;
    let n = component_norm_matrix(core, kind, t);
    e.transpose() * n * e
}

impl Products {
    pub fn new(core: &DDRCore, stabilization: Stabilization) -> Products {
        let cells = (0..core.mesh.num_cells())
            .into_par_iter()
            .map(|t| {
                let c = &core.cells[t];
                let (sg, sc, sd) = match stabilization {
                    Stabilization::Trace => (stabilization_grad(core, t), stabilization_curl(core, t), stabilization_div(core, t)),
                    Stabilization::ComponentNorm => (
                        alternative_stabilization(core, SpaceKind::Grad, t),
                        alternative_stabilization(core, SpaceKind::Curl, t),
                        alternative_stabilization(core, SpaceKind::Div, t),
                    ),
                };
                let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
                CellProducts {
                    grad: sym(c.pgrad.transpose() * &c.pgrad + &sg),
                    curl: sym(c.pcurl.transpose() * &c.pcurl + &sc),
                    div: sym(c.pdiv.transpose() * &c.pdiv + &sd),
                    stab_grad: sym(sg),
                    stab_curl: sym(sc),
                    stab_div: sym(sd),
                    norm_grad: component_norm_matrix(core, SpaceKind::Grad, t),
                    norm_curl: component_norm_matrix(core, SpaceKind::Curl, t),
                    norm_div: component_norm_matrix(core, SpaceKind::Div, t),
                }
            })
            .collect();
        Products { stabilization, cells }
    }

    /// Global matrix sum_T weight_T * local_T over the space.
    pub fn assemble(
        &self,
        core: &DDRCore,
        kind: SpaceKind,
        local: impl Fn(&CellProducts) -> &DMatrix<f64> + Sync,
        weight: impl Fn(usize) -> f64 + Sync,
    ) -> Csr {
        let dim = core.space(kind).dim;
        let trips: Vec<Triplet> = self
            .cells
            .par_iter()
            .enumerate()
            .flat_map_iter(|(t, cp)| {
                let dofs = closure(core, kind, t);
                let m = local(cp);
                let w = weight(t);
                let mut out = Vec::with_capacity(m.len());
                for (i, &r) in dofs.iter().enumerate() {
                    for (j, &c) in dofs.iter().enumerate() {
                        out.push((r, c, w * m[(i, j)]));
                    }
                }
                out
            })
            .collect();
        Csr::from_triplets(dim, dim, trips)
    }

    /// Sum over cells of x_T^T M_T x_T.
    pub fn local_quad_form(
        &self,
        core: &DDRCore,
        kind: SpaceKind,
        local: impl Fn(&CellProducts) -> &DMatrix<f64> + Sync,
        x: &DVector<f64>,
    ) -> f64 {
        self.cells
            .par_iter()
            .enumerate()
            .map(|(t, cp)| {
                let xt = DDRCore::restrict(x, closure(core, kind, t));
                xt.dot(&(local(cp) * &xt))
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }

    /// |||x|||_{kind,h}.
    pub fn component_norm(&self, core: &DDRCore, kind: SpaceKind, x: &DVector<f64>) -> f64 {
        self.local_quad_form(core, kind, |c| c.component_norm(kind), x).max(0.0).sqrt()
    }

    /// ||x||_{kind,h} from the discrete L2-product.
    pub fn l2_norm(&self, core: &DDRCore, kind: SpaceKind, x: &DVector<f64>) -> f64 {
        self.local_quad_form(core, kind, |c| c.product(kind), x).max(0.0).sqrt()
    }

    /// Graph norm on the curl space: (sum_T mu_T ||z_T||^2_curl + ||uC z||^2_div)^(1/2).
    pub fn graph_norm_curl(&self, core: &DDRCore, mu: &[f64], uc: &Csr, z: &DVector<f64>) -> f64 {
        let a: f64 = self
            .cells
            .iter()
            .enumerate()
            .map(|(t, cp)| {
                let zt = DDRCore::restrict(z, &core.cells[t].curl_dofs);
                mu[t] * zt.dot(&(&cp.curl * &zt))
            })
            .sum();
        let cz = self.l2_norm(core, SpaceKind::Div, &uc.mul_vec(z));
        (a + cz * cz).max(0.0).sqrt()
    }

    /// Graph norm on the div space: (||v||^2_div + ||D v||^2_L2)^(1/2).
    pub fn graph_norm_div(&self, core: &DDRCore, d: &Csr, v: &DVector<f64>) -> f64 {
        let n = self.l2_norm(core, SpaceKind::Div, v);
        (n * n + d.mul_vec(v).norm_squared()).sqrt()
    }
}

/// Closure DOFs of cell t in the space.
pub fn closure<'a>(core: &'a DDRCore, kind: SpaceKind, t: usize) -> &'a [usize] {
    let c = &core.cells[t];
    match kind {
        SpaceKind::Grad => &c.grad_dofs,
        SpaceKind::Curl => &c.curl_dofs,
        SpaceKind::Div => &c.div_dofs,
        SpaceKind::L2 => panic!("L2 DOFs are cell-local"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{agglomerate_pairs, generate_cubic_mesh, generate_tet_mesh};
    use crate::poly::Family;

    fn min_eig(m: &DMatrix<f64>) -> f64 {
        m.clone().symmetric_eigen().eigenvalues.min()
    }

    #[test]
    fn stabilizations_vanish_on_polynomial_interpolates() {
        for mesh in [generate_tet_mesh(1), agglomerate_pairs(&generate_cubic_mesh(2), 4)] {
            for k in 0..=2 {
                let core = DDRCore::new(&mesh, k).unwrap();
                for stab in [Stabilization::Trace, Stabilization::ComponentNorm] {
                    let p = Products::new(&core, stab);
                    for t in 0..mesh.num_cells() {
                        let frame = core.cells[t].p_k.family.frame.clone();
                        let q = Family::monomials(&frame, 0, k as i64 + 1);
                        let v = Family::monomials(&frame, 0, k as i64).vectorize(3);
                        let e = Entity::Cell(t);
                        let cp = &p.cells[t];
                        let r_g = (&cp.stab_grad * core.interpolate_local(SpaceKind::Grad, e, &q)).amax();
                        let r_c = (&cp.stab_curl * core.interpolate_local(SpaceKind::Curl, e, &v)).amax();
                        let r_d = (&cp.stab_div * core.interpolate_local(SpaceKind::Div, e, &v)).amax();
                        assert!(r_g < 1e-10 && r_c < 1e-10 && r_d < 1e-10, "k={k} {stab:?}: {r_g:e} {r_c:e} {r_d:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn products_are_spd_and_stabilizations_psd() {
        let mesh = agglomerate_pairs(&generate_cubic_mesh(2), 9);
        for k in 0..=1 {
            let core = DDRCore::new(&mesh, k).unwrap();
            let p = Products::new(&core, Stabilization::Trace);
            for cp in &p.cells {
                for kind in [SpaceKind::Grad, SpaceKind::Curl, SpaceKind::Div] {
                    let m = cp.product(kind);
                    assert!((m - m.transpose()).amax() < 1e-12 * m.amax());
                    assert!(min_eig(m) > 1e-10 * m.amax(), "{kind:?} k={k}");
                    assert!(min_eig(cp.stab(kind)) > -1e-12, "{kind:?} k={k}");
                }
            }
        }
    }

    #[test]
    fn component_norm_weights() {
        let mesh = generate_cubic_mesh(2);
        let core = DDRCore::new(&mesh, 1).unwrap();
        let p = Products::new(&core, Stabilization::Trace);
        let mut x = DVector::zeros(core.curl_space.dim);
        assert_eq!(p.component_norm(&core, SpaceKind::Curl, &x), 0.0);
        x[core.curl_space.entity_dofs(Entity::Cell(3)).start] = 1.0;
        assert!((p.component_norm(&core, SpaceKind::Curl, &x) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn divergence_stabilizations_coincide() {
        let mesh = generate_tet_mesh(1);
        let core = DDRCore::new(&mesh, 1).unwrap();
        for t in 0..mesh.num_cells() {
            let a = stabilization_div(&core, t);
            let b = alternative_stabilization(&core, SpaceKind::Div, t);
            assert!((&a - &b).amax() < 1e-10 * a.amax(), "cell {t}");
        }
    }
}
