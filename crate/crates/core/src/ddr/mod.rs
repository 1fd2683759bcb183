//! The discrete de Rham complex: DOF spaces, local discrete operators (gradients, curls,
//! divergence, traces, potentials), interpolators and global operator matrices.

mod global;
mod interp;
pub mod space;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

pub use interp::{closure_entities, Sampler, ScalarFn, VectorFn};
pub use space::{Component, DofSpace, SpaceKind};

use crate::mesh::{Entity, Mesh};
use crate::poly::{Frame, Tab};
use crate::polyspaces::{build_basis, BasisError, BasisKind, PolyBasis};
use crate::quadrature::{edge_rule, face_rule, cell_rule, QuadRule};

/// Local systems whose condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdrError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("ill-conditioned {what} system on {entity:?} (condition number {cond:.3e})")]
    IllConditioned { what: &'static str, entity: Entity, cond: f64 },
}

/// Bases and operators attached to one edge.
#[derive(Debug, Clone)]
pub struct EdgeOps {
    pub rule: QuadRule,
    pub p_km1: PolyBasis,
    pub p_k: PolyBasis,
    pub p_kp1: PolyBasis,
    /// Grad closure DOFs: lower vertex, upper vertex, moments.
    pub grad_dofs: Vec<usize>,
    pub curl_dofs: Vec<usize>,
    /// Coefficients of q_E in `p_kp1` from the grad closure DOFs.
    pub rec: DMatrix<f64>,
    /// G_E into `p_k`.
    pub grad: DMatrix<f64>,
}

/// Bases and operators attached to one face.
#[derive(Debug, Clone)]
pub struct FaceOps {
    pub rule: QuadRule,
    pub p_km1: PolyBasis,
    pub p_k: PolyBasis,
    pub p_kp1: PolyBasis,
    pub vp_k: PolyBasis,
    pub r_km1: PolyBasis,
    pub cr_k: PolyBasis,
    pub cr_kp2: PolyBasis,
    pub p0_kp1: PolyBasis,
    pub grad_dofs: Vec<usize>,
    pub curl_dofs: Vec<usize>,
    pub div_dofs: Vec<usize>,
    /// G_F into `vp_k`.
    pub grad: DMatrix<f64>,
    /// gamma_F^{k+1} into `p_kp1`.
    pub trace: DMatrix<f64>,
    /// C_F into `p_k`.
    pub curl: DMatrix<f64>,
    /// gamma_{t,F}^k into `vp_k`.
    pub tangent_trace: DMatrix<f64>,
    /// Face rows of the global gradient: (pi_R^{k-1} G_F, pi_cR^k G_F).
    pub ug_rows: DMatrix<f64>,
}

/// Bases and operators attached to one cell.
#[derive(Debug, Clone)]
pub struct CellOps {
    pub rule: QuadRule,
    pub p_km1: PolyBasis,
    pub p_k: PolyBasis,
    pub p_kp1: PolyBasis,
    pub vp_k: PolyBasis,
    pub r_km1: PolyBasis,
    pub cr_k: PolyBasis,
    pub g_km1: PolyBasis,
    pub cg_k: PolyBasis,
    pub cr_kp2: PolyBasis,
    pub cg_kp1: PolyBasis,
    pub p0_kp1: PolyBasis,
    pub grad_dofs: Vec<usize>,
    pub curl_dofs: Vec<usize>,
    pub div_dofs: Vec<usize>,
    /// G_T into `vp_k`.
    pub grad: DMatrix<f64>,
    /// P_grad into `p_kp1`.
    pub pgrad: DMatrix<f64>,
    /// C_T into `vp_k`.
    pub curl: DMatrix<f64>,
    /// P_curl into `vp_k`.
    pub pcurl: DMatrix<f64>,
    /// D_T into `p_k`.
    pub div: DMatrix<f64>,
    /// P_div into `vp_k`.
    pub pdiv: DMatrix<f64>,
    /// Cell rows of the global gradient: (pi_R^{k-1} G_T, pi_cR^k G_T).
    pub ug_rows: DMatrix<f64>,
    /// Cell rows of the global curl: (pi_G^{k-1} C_T, pi_cG^k C_T).
    pub uc_rows: DMatrix<f64>,
}

pub struct DDRCore<'m> {
    pub mesh: &'m Mesh,
    pub k: usize,
    pub grad_space: DofSpace,
    pub curl_space: DofSpace,
    pub div_space: DofSpace,
    pub l2_space: DofSpace,
    pub edges: Vec<EdgeOps>,
    pub faces: Vec<FaceOps>,
    pub cells: Vec<CellOps>,
}

/// Adds `scale * src` into the columns of `dst` whose global DOFs match `src_dofs`.
pub(crate) fn scatter(dst: &mut DMatrix<f64>, dst_dofs: &[usize], src: &DMatrix<f64>, src_dofs: &[usize], scale: f64) {
    assert_eq!(src.ncols(), src_dofs.len());
    for (j, d) in src_dofs.iter().enumerate() {
        let p = dst_dofs.binary_search(d).expect("DOF outside closure");
        for i in 0..src.nrows() {
            dst[(i, p)] += scale * src[(i, j)];
        }
    }
}

/// Solves the square system a x = rhs after checking its conditioning.
pub(crate) fn solve_checked(
    a: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    what: &'static str,
    entity: Entity,
) -> Result<DMatrix<f64>, DdrError> {
    assert_eq!(a.nrows(), a.ncols(), "{what} system on {entity:?} is not square");
    if a.nrows() == 0 {
        return Ok(DMatrix::zeros(0, rhs.ncols()));
    }
    let sv = a.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(DdrError::IllConditioned { what, entity, cond });
    }
    Ok(a.clone().lu().solve(rhs).expect("checked nonsingular"))
}

fn stack_rows(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.iter().map(|p| p.ncols()).max().unwrap_or(0);
    let rows = parts.iter().map(|p| p.nrows()).sum();
    let mut m = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        if p.nrows() > 0 {
            m.view_mut((r, 0), (p.nrows(), p.ncols())).copy_from(p);
        }
        r += p.nrows();
    }
    m
}

fn gram(a: &Tab, b: &Tab, rule: &QuadRule) -> DMatrix<f64> {
    a.gram(b, &rule.weights)
}

/// (basis_i, basis_j) restricted to a subset, i.e. the projection matrix of `from` onto `to`.
fn proj(to: &PolyBasis, from: &PolyBasis, rule: &QuadRule) -> DMatrix<f64> {
    gram(&to.tabulate(rule), &from.tabulate(rule), rule)
}

impl<'m> DDRCore<'m> {
    /// Builds every local basis and operator of degree k on the mesh, in parallel over entities.
    pub fn new(mesh: &'m Mesh, k: usize) -> Result<DDRCore<'m>, DdrError> {
        let grad_space = DofSpace::new(mesh, SpaceKind::Grad, k);
        let curl_space = DofSpace::new(mesh, SpaceKind::Curl, k);
        let div_space = DofSpace::new(mesh, SpaceKind::Div, k);
        let l2_space = DofSpace::new(mesh, SpaceKind::L2, k);
        let mut core = DDRCore {
            mesh,
            k,
            grad_space,
            curl_space,
            div_space,
            l2_space,
            edges: vec![],
            faces: vec![],
            cells: vec![],
        };
        core.edges = (0..mesh.num_edges()).into_par_iter().map(|e| core.build_edge(e)).collect::<Result<_, _>>()?;
        core.faces = (0..mesh.num_faces()).into_par_iter().map(|f| core.build_face(f)).collect::<Result<_, _>>()?;
        core.cells = (0..mesh.num_cells()).into_par_iter().map(|t| core.build_cell(t)).collect::<Result<_, _>>()?;
        Ok(core)
    }

    fn quad_degree(&self) -> usize {
        2 * self.k + 4
    }

    fn build_edge(&self, e: usize) -> Result<EdgeOps, DdrError> {
        let k = self.k as i64;
        let ent = Entity::Edge(e);
        let frame = Frame::of(self.mesh, ent);
        let rule = edge_rule(self.mesh, e, self.quad_degree());
        let p_km1 = build_basis(&frame, ent, BasisKind::P, k - 1, &rule)?;
        let p_k = build_basis(&frame, ent, BasisKind::P, k, &rule)?;
        let p_kp1 = build_basis(&frame, ent, BasisKind::P, k + 1, &rule)?;
        let n = p_kp1.dim();
        let ends = self.mesh.edges[e].vertices.map(|v| self.mesh.vertices[v]);
        let mut m = DMatrix::zeros(n, n);
        for (r, x) in ends.iter().enumerate() {
            let vals = p_kp1.family.eval(x);
            for j in 0..n {
                m[(r, j)] = vals[(j, 0)];
            }
        }
        if p_km1.dim() > 0 {
            m.view_mut((2, 0), (p_km1.dim(), n)).copy_from(&proj(&p_km1, &p_kp1, &rule));
        }
        let rec = solve_checked(&m, &DMatrix::identity(n, n), "edge reconstruction", ent)?;
        let dq = p_kp1.family.d_phys(0).tabulate(&rule.points);
        let grad = gram(&p_k.tabulate(&rule), &dq, &rule) * &rec;
        Ok(EdgeOps {
            grad_dofs: self.grad_space.closure_dofs(self.mesh, ent),
            curl_dofs: self.curl_space.closure_dofs(self.mesh, ent),
            rule,
            p_km1,
            p_k,
            p_kp1,
            rec,
            grad,
        })
    }

    fn build_face(&self, f: usize) -> Result<FaceOps, DdrError> {
        let k = self.k as i64;
        let mesh = self.mesh;
        let ent = Entity::Face(f);
        let face = &mesh.faces[f];
        let frame = Frame::of(mesh, ent);
        let axes = frame.axes.clone();
        let rule = face_rule(mesh, f, self.quad_degree());
        let b = |kind, l| build_basis(&frame, ent, kind, l, &rule);
        let p_km1 = b(BasisKind::P, k - 1)?;
        let p_k = b(BasisKind::P, k)?;
        let p_kp1 = b(BasisKind::P, k + 1)?;
        let vp_k = b(BasisKind::VP, k)?;
        let r_km1 = b(BasisKind::R, k - 1)?;
        let cr_k = b(BasisKind::CR, k)?;
        let cr_kp2 = b(BasisKind::CR, k + 2)?;
        let p0_kp1 = b(BasisKind::P0, k + 1)?;
        let grad_dofs = self.grad_space.closure_dofs(mesh, ent);
        let curl_dofs = self.curl_space.closure_dofs(mesh, ent);
        let div_dofs = self.div_space.closure_dofs(mesh, ent);
        let own_grad: Vec<usize> = self.grad_space.entity_dofs(ent).collect();
        let own_curl: Vec<usize> = self.curl_space.entity_dofs(ent).collect();
        let vp_tab = vp_k.tabulate(&rule);

        // Boundary term sum_E omega_FE int_E q_E (v . n_FE) for a face vector family v.
        let edge_term_grad = |v: &PolyBasis, out: &mut DMatrix<f64>| {
            for (i, &e) in face.edges.iter().enumerate() {
                let ed = &self.edges[e];
                let vn = v.family.tabulate(&ed.rule.points).from_plane(&axes).dot(&mesh.face_edge_normal(f, e));
                let m = gram(&vn, &ed.p_kp1.tabulate(&ed.rule), &ed.rule) * &ed.rec;
                scatter(out, &grad_dofs, &m, &ed.grad_dofs, face.edge_orientations[i]);
            }
        };

        let mut grad = DMatrix::zeros(vp_k.dim(), grad_dofs.len());
        let div_w = vp_k.family.div().tabulate(&rule.points);
        scatter(&mut grad, &grad_dofs, &-gram(&div_w, &p_km1.tabulate(&rule), &rule), &own_grad, 1.0);
        edge_term_grad(&vp_k, &mut grad);

        let a = gram(&cr_kp2.family.div().tabulate(&rule.points), &p_kp1.tabulate(&rule), &rule);
        let mut rhs = -gram(&cr_kp2.tabulate(&rule), &vp_tab, &rule) * &grad;
        edge_term_grad(&cr_kp2, &mut rhs);
        let trace = solve_checked(&a, &rhs, "scalar trace", ent)?;

        // Edge term sum_E omega_FE int_E v_E r for a scalar face family r.
        let edge_term_curl = |r: &PolyBasis, out: &mut DMatrix<f64>, scale: f64| {
            for (i, &e) in face.edges.iter().enumerate() {
                let ed = &self.edges[e];
                let m = gram(&r.family.tabulate(&ed.rule.points), &ed.p_k.tabulate(&ed.rule), &ed.rule);
                scatter(out, &curl_dofs, &m, &ed.curl_dofs, scale * face.edge_orientations[i]);
            }
        };
        let mut curl = DMatrix::zeros(p_k.dim(), curl_dofs.len());
        let own_r = &own_curl[..r_km1.dim()];
        let own_cr = &own_curl[r_km1.dim()..];
        scatter(&mut curl, &curl_dofs, &gram(&p_k.family.vrot().tabulate(&rule.points), &r_km1.tabulate(&rule), &rule), own_r, 1.0);
        edge_term_curl(&p_k, &mut curl, -1.0);

        let n0 = p0_kp1.dim();
        let lhs = stack_rows(&[
            &gram(&p0_kp1.family.vrot().tabulate(&rule.points), &vp_tab, &rule),
            &gram(&cr_k.tabulate(&rule), &vp_tab, &rule),
        ]);
        let mut top = proj(&p0_kp1, &p_k, &rule) * &curl;
        edge_term_curl(&p0_kp1, &mut top, 1.0);
        let mut rhs = DMatrix::zeros(lhs.nrows(), curl_dofs.len());
        rhs.view_mut((0, 0), (n0, curl_dofs.len())).copy_from(&top);
        for (i, d) in own_cr.iter().enumerate() {
            let p = curl_dofs.binary_search(d).unwrap();
            rhs[(n0 + i, p)] = 1.0;
        }
        let tangent_trace = solve_checked(&lhs, &rhs, "tangential trace", ent)?;

        let ug_rows = stack_rows(&[&(proj(&r_km1, &vp_k, &rule) * &grad), &(proj(&cr_k, &vp_k, &rule) * &grad)]);
        Ok(FaceOps {
            rule,
            p_km1,
            p_k,
            p_kp1,
            vp_k,
            r_km1,
            cr_k,
            cr_kp2,
            p0_kp1,
            grad_dofs,
            curl_dofs,
            div_dofs,
            grad,
            trace,
            curl,
            tangent_trace,
            ug_rows,
        })
    }

    fn build_cell(&self, t: usize) -> Result<CellOps, DdrError> {
        let k = self.k as i64;
        let mesh = self.mesh;
        let ent = Entity::Cell(t);
        let cell = &mesh.cells[t];
        let frame = Frame::of(mesh, ent);
        let rule = cell_rule(mesh, t, self.quad_degree());
        let b = |kind, l| build_basis(&frame, ent, kind, l, &rule);
        let p_km1 = b(BasisKind::P, k - 1)?;
        let p_k = b(BasisKind::P, k)?;
        let p_kp1 = b(BasisKind::P, k + 1)?;
        let vp_k = b(BasisKind::VP, k)?;
        let r_km1 = b(BasisKind::R, k - 1)?;
        let cr_k = b(BasisKind::CR, k)?;
        let g_km1 = b(BasisKind::G, k - 1)?;
        let cg_k = b(BasisKind::CG, k)?;
        let cr_kp2 = b(BasisKind::CR, k + 2)?;
        let cg_kp1 = b(BasisKind::CG, k + 1)?;
        let p0_kp1 = b(BasisKind::P0, k + 1)?;
        let grad_dofs = self.grad_space.closure_dofs(mesh, ent);
        let curl_dofs = self.curl_space.closure_dofs(mesh, ent);
        let div_dofs = self.div_space.closure_dofs(mesh, ent);
        let own_grad: Vec<usize> = self.grad_space.entity_dofs(ent).collect();
        let own_curl: Vec<usize> = self.curl_space.entity_dofs(ent).collect();
        let own_div: Vec<usize> = self.div_space.entity_dofs(ent).collect();
        let vp_tab = vp_k.tabulate(&rule);
        let faces: Vec<(usize, f64)> = cell.faces.iter().copied().zip(cell.face_orientations.iter().copied()).collect();

        // sum_F omega_TF int_F gamma_F q (v . n_F) for a cell vector family v.
        let face_term_grad = |v: &PolyBasis, out: &mut DMatrix<f64>| {
            for &(f, w) in &faces {
                let fo = &self.faces[f];
                let vn = v.family.tabulate(&fo.rule.points).dot(&mesh.faces[f].normal);
                let m = gram(&vn, &fo.p_kp1.tabulate(&fo.rule), &fo.rule) * &fo.trace;
                scatter(out, &grad_dofs, &m, &fo.grad_dofs, w);
            }
        };
        let mut grad = DMatrix::zeros(vp_k.dim(), grad_dofs.len());
        scatter(&mut grad, &grad_dofs, &-gram(&vp_k.family.div().tabulate(&rule.points), &p_km1.tabulate(&rule), &rule), &own_grad, 1.0);
        face_term_grad(&vp_k, &mut grad);

        let a = gram(&cr_kp2.family.div().tabulate(&rule.points), &p_kp1.tabulate(&rule), &rule);
        let mut rhs = -gram(&cr_kp2.tabulate(&rule), &vp_tab, &rule) * &grad;
        face_term_grad(&cr_kp2, &mut rhs);
        let pgrad = solve_checked(&a, &rhs, "scalar potential", ent)?;

        // sum_F omega_TF int_F gamma_{t,F} v_F . (z x n_F) for a cell vector family z.
        let face_term_curl = |z: &PolyBasis, out: &mut DMatrix<f64>, scale: f64| {
            for &(f, w) in &faces {
                let fo = &self.faces[f];
                let zxn = z.family.tabulate(&fo.rule.points).cross(&mesh.faces[f].normal).to_plane(&mesh.faces[f].frame);
                let m = gram(&zxn, &fo.vp_k.tabulate(&fo.rule), &fo.rule) * &fo.tangent_trace;
                scatter(out, &curl_dofs, &m, &fo.curl_dofs, scale * w);
            }
        };
        let own_r = &own_curl[..r_km1.dim()];
        let own_cr = &own_curl[r_km1.dim()..];
        let mut curl = DMatrix::zeros(vp_k.dim(), curl_dofs.len());
        scatter(&mut curl, &curl_dofs, &gram(&vp_k.family.curl().tabulate(&rule.points), &r_km1.tabulate(&rule), &rule), own_r, 1.0);
        face_term_curl(&vp_k, &mut curl, 1.0);

        let n1 = cg_kp1.dim();
        let lhs = stack_rows(&[
            &gram(&cg_kp1.family.curl().tabulate(&rule.points), &vp_tab, &rule),
            &gram(&cr_k.tabulate(&rule), &vp_tab, &rule),
        ]);
        let mut top = gram(&cg_kp1.tabulate(&rule), &vp_tab, &rule) * &curl;
        face_term_curl(&cg_kp1, &mut top, -1.0);
        let mut rhs = DMatrix::zeros(lhs.nrows(), curl_dofs.len());
        rhs.view_mut((0, 0), (n1, curl_dofs.len())).copy_from(&top);
        for (i, d) in own_cr.iter().enumerate() {
            rhs[(n1 + i, curl_dofs.binary_search(d).unwrap())] = 1.0;
        }
        let pcurl = solve_checked(&lhs, &rhs, "vector potential (curl)", ent)?;

        // sum_F omega_TF int_F w_F r for a scalar cell family r.
        let face_term_div = |r: &PolyBasis, out: &mut DMatrix<f64>| {
            for &(f, w) in &faces {
                let fo = &self.faces[f];
                let m = gram(&r.family.tabulate(&fo.rule.points), &fo.p_k.tabulate(&fo.rule), &fo.rule);
                scatter(out, &div_dofs, &m, &fo.div_dofs, w);
            }
        };
        let own_g = &own_div[..g_km1.dim()];
        let own_cg = &own_div[g_km1.dim()..];
        let mut div = DMatrix::zeros(p_k.dim(), div_dofs.len());
        scatter(&mut div, &div_dofs, &-gram(&p_k.family.grad().tabulate(&rule.points), &g_km1.tabulate(&rule), &rule), own_g, 1.0);
        face_term_div(&p_k, &mut div);

        let n0 = p0_kp1.dim();
        let lhs = stack_rows(&[
            &gram(&p0_kp1.family.grad().tabulate(&rule.points), &vp_tab, &rule),
            &gram(&cg_k.tabulate(&rule), &vp_tab, &rule),
        ]);
        let mut top = -(proj(&p0_kp1, &p_k, &rule) * &div);
        face_term_div(&p0_kp1, &mut top);
        let mut rhs = DMatrix::zeros(lhs.nrows(), div_dofs.len());
        rhs.view_mut((0, 0), (n0, div_dofs.len())).copy_from(&top);
        for (i, d) in own_cg.iter().enumerate() {
            rhs[(n0 + i, div_dofs.binary_search(d).unwrap())] = 1.0;
        }
        let pdiv = solve_checked(&lhs, &rhs, "vector potential (div)", ent)?;

        let ug_rows = stack_rows(&[&(proj(&r_km1, &vp_k, &rule) * &grad), &(proj(&cr_k, &vp_k, &rule) * &grad)]);
        let uc_rows = stack_rows(&[&(proj(&g_km1, &vp_k, &rule) * &curl), &(proj(&cg_k, &vp_k, &rule) * &curl)]);
        Ok(CellOps {
            rule,
            p_km1,
            p_k,
            p_kp1,
            vp_k,
            r_km1,
            cr_k,
            g_km1,
            cg_k,
            cr_kp2,
            cg_kp1,
            p0_kp1,
            grad_dofs,
            curl_dofs,
            div_dofs,
            grad,
            pgrad,
            curl,
            pcurl,
            div,
            pdiv,
            ug_rows,
            uc_rows,
        })
    }

    /// Restriction of a global DOF vector to the given closure DOFs.
    pub fn restrict(x: &nalgebra::DVector<f64>, dofs: &[usize]) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_iterator(dofs.len(), dofs.iter().map(|&d| x[d]))
    }

    /// Local uG_T: cell curl closure DOFs from cell grad closure DOFs.
    pub fn local_grad(&self, t: usize) -> DMatrix<f64> {
        let c = &self.cells[t];
        let cell = &self.mesh.cells[t];
        let mut m = DMatrix::zeros(c.curl_dofs.len(), c.grad_dofs.len());
        let mut put = |rows: &[usize], block: &DMatrix<f64>, cols: &[usize]| {
            for (i, r) in rows.iter().enumerate() {
                let pr = c.curl_dofs.binary_search(r).unwrap();
                for (j, col) in cols.iter().enumerate() {
                    let pc = c.grad_dofs.binary_search(col).unwrap();
                    m[(pr, pc)] += block[(i, j)];
                }
            }
        };
        for &e in &cell.edges {
            let rows: Vec<usize> = self.curl_space.entity_dofs(Entity::Edge(e)).collect();
            put(&rows, &self.edges[e].grad, &self.edges[e].grad_dofs);
        }
        for &f in &cell.faces {
            let rows: Vec<usize> = self.curl_space.entity_dofs(Entity::Face(f)).collect();
            put(&rows, &self.faces[f].ug_rows, &self.faces[f].grad_dofs);
        }
        let rows: Vec<usize> = self.curl_space.entity_dofs(Entity::Cell(t)).collect();
        put(&rows, &c.ug_rows, &c.grad_dofs);
        m
    }

    /// Local uC_T: cell div closure DOFs from cell curl closure DOFs.
    pub fn local_curl(&self, t: usize) -> DMatrix<f64> {
        let c = &self.cells[t];
        let cell = &self.mesh.cells[t];
        let mut m = DMatrix::zeros(c.div_dofs.len(), c.curl_dofs.len());
        let mut put = |rows: &[usize], block: &DMatrix<f64>, cols: &[usize]| {
            for (i, r) in rows.iter().enumerate() {
                let pr = c.div_dofs.binary_search(r).unwrap();
                for (j, col) in cols.iter().enumerate() {
                    let pc = c.curl_dofs.binary_search(col).unwrap();
                    m[(pr, pc)] += block[(i, j)];
                }
            }
        };
        for &f in &cell.faces {
            let rows: Vec<usize> = self.div_space.entity_dofs(Entity::Face(f)).collect();
            put(&rows, &self.faces[f].curl, &self.faces[f].curl_dofs);
        }
        let rows: Vec<usize> = self.div_space.entity_dofs(Entity::Cell(t)).collect();
        put(&rows, &c.uc_rows, &c.curl_dofs);
        m
    }
}
