//! Interpolators onto the discrete spaces: L2 projections of traces and components on every
//! entity, with point values at vertices.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;

use super::{DDRCore, SpaceKind};
use crate::mesh::{Entity, Mesh, Point};
use crate::poly::{Family, Tab};
use crate::polyspaces::PolyBasis;
use crate::quadrature::{cell_rule, edge_rule, face_rule, QuadRule};

/// A field (or a family of fields) that can be sampled at points.
pub trait Sampler: Sync {
    /// Values at the points: one (members x npts) matrix per component (1 or 3 components).
    fn sample(&self, points: &[Point]) -> Tab;
}

pub struct ScalarFn<F>(pub F);
pub struct VectorFn<F>(pub F);

impl<F: Fn(&Point) -> f64 + Sync> Sampler for ScalarFn<F> {
    fn sample(&self, points: &[Point]) -> Tab {
        Tab::scalar(DMatrix::from_fn(1, points.len(), |_, q| (self.0)(&points[q])))
    }
}

impl<F: Fn(&Point) -> Vector3<f64> + Sync> Sampler for VectorFn<F> {
    fn sample(&self, points: &[Point]) -> Tab {
        let v: Vec<Vector3<f64>> = points.iter().map(&self.0).collect();
        Tab { vals: (0..3).map(|c| DMatrix::from_fn(1, points.len(), |_, q| v[q][c])).collect() }
    }
}

/// Cell families (scalar or 3D vector) sample as all their members at once.
impl Sampler for Family {
    fn sample(&self, points: &[Point]) -> Tab {
        self.tabulate(points)
    }
}

/// Entities whose DOFs make up `closure_dofs` of `e`, in the same order.
pub fn closure_entities(mesh: &Mesh, e: Entity) -> Vec<Entity> {
    let (mut vs, mut es, mut fs) = match e {
        Entity::Vertex(_) => (vec![], vec![], vec![]),
        Entity::Edge(i) => (mesh.edges[i].vertices.to_vec(), vec![], vec![]),
        Entity::Face(f) => (mesh.faces[f].vertices.clone(), mesh.faces[f].edges.clone(), vec![]),
        Entity::Cell(t) => {
            let c = &mesh.cells[t];
            (c.vertices.clone(), c.edges.clone(), c.faces.clone())
        }
    };
    vs.sort_unstable();
    es.sort_unstable();
    fs.sort_unstable();
    let mut out: Vec<Entity> = vs.into_iter().map(Entity::Vertex).collect();
    out.extend(es.into_iter().map(Entity::Edge));
    out.extend(fs.into_iter().map(Entity::Face));
    out.push(e);
    out
}

fn project(bases: &[&PolyBasis], rule: &QuadRule, values: &Tab) -> DMatrix<f64> {
    let rows: usize = bases.iter().map(|b| b.dim()).sum();
    let mut out = DMatrix::zeros(rows, values.len());
    let mut r = 0;
    for b in bases {
        if b.dim() > 0 {
            out.view_mut((r, 0), (b.dim(), values.len())).copy_from(&b.tabulate(rule).gram(values, &rule.weights));
        }
        r += b.dim();
    }
    out
}

impl<'m> DDRCore<'m> {
    /// Rule used by the interpolators, two degrees above the operator rules.
    pub fn interpolation_rule(&self, e: Entity) -> QuadRule {
        let deg = 2 * self.k + 6;
        match e {
            Entity::Vertex(v) => QuadRule { points: vec![self.mesh.vertices[v]], weights: vec![1.0], degree: 0 },
            Entity::Edge(i) => edge_rule(self.mesh, i, deg),
            Entity::Face(f) => face_rule(self.mesh, f, deg),
            Entity::Cell(t) => cell_rule(self.mesh, t, deg),
        }
    }

    pub fn space(&self, kind: SpaceKind) -> &super::DofSpace {
        match kind {
            SpaceKind::Grad => &self.grad_space,
            SpaceKind::Curl => &self.curl_space,
            SpaceKind::Div => &self.div_space,
            SpaceKind::L2 => &self.l2_space,
        }
    }

    /// Interpolated DOFs of `s` attached to entity `e` in the space `kind`: a matrix with one
    /// column per sampled member.
    pub fn components(&self, kind: SpaceKind, e: Entity, s: &dyn Sampler) -> DMatrix<f64> {
        if self.space(kind).per_entity[e.dim()] == 0 {
            return DMatrix::zeros(0, s.sample(&[Point::zeros()]).len());
        }
        let rule = self.interpolation_rule(e);
        let vals = s.sample(&rule.points);
        let mesh = self.mesh;
        match (kind, e) {
            (SpaceKind::Grad, Entity::Vertex(_)) => vals.vals[0].transpose(),
            (SpaceKind::Grad, Entity::Edge(i)) => project(&[&self.edges[i].p_km1], &rule, &vals),
            (SpaceKind::Grad, Entity::Face(f)) => project(&[&self.faces[f].p_km1], &rule, &vals),
            (SpaceKind::Grad, Entity::Cell(t)) => project(&[&self.cells[t].p_km1], &rule, &vals),
            (SpaceKind::Curl, Entity::Edge(i)) => project(&[&self.edges[i].p_k], &rule, &vals.dot(&mesh.edges[i].tangent)),
            (SpaceKind::Curl, Entity::Face(f)) => {
                let fo = &self.faces[f];
                project(&[&fo.r_km1, &fo.cr_k], &rule, &vals.to_plane(&mesh.faces[f].frame))
            }
            (SpaceKind::Curl, Entity::Cell(t)) => project(&[&self.cells[t].r_km1, &self.cells[t].cr_k], &rule, &vals),
            (SpaceKind::Div, Entity::Face(f)) => project(&[&self.faces[f].p_k], &rule, &vals.dot(&mesh.faces[f].normal)),
            (SpaceKind::Div, Entity::Cell(t)) => project(&[&self.cells[t].g_km1, &self.cells[t].cg_k], &rule, &vals),
            (SpaceKind::L2, Entity::Cell(t)) => project(&[&self.cells[t].p_k], &rule, &vals),
            _ => unreachable!("no {kind:?} DOFs on {e:?}"),
        }
    }

    /// Global interpolate of a single field.
    pub fn interpolate(&self, kind: SpaceKind, s: &dyn Sampler) -> DVector<f64> {
        let space = self.space(kind);
        let mut out = DVector::zeros(space.dim);
        for d in 0..4 {
            if space.per_entity[d] == 0 {
                continue;
            }
            let ents: Vec<Entity> = (0..space.counts[d])
                .map(|i| match d {
                    0 => Entity::Vertex(i),
                    1 => Entity::Edge(i),
                    2 => Entity::Face(i),
                    _ => Entity::Cell(i),
                })
                .collect();
            let parts: Vec<DMatrix<f64>> = ents.par_iter().map(|&e| self.components(kind, e, s)).collect();
            for (e, p) in ents.iter().zip(parts) {
                let r = space.entity_dofs(*e);
                out.rows_mut(r.start, r.len()).copy_from(&p.column(0));
            }
        }
        out
    }

    /// Local interpolate on the closure of an edge, face or cell (one column per member).
    pub fn interpolate_local(&self, kind: SpaceKind, e: Entity, s: &dyn Sampler) -> DMatrix<f64> {
        let parts: Vec<DMatrix<f64>> =
            closure_entities(self.mesh, e).into_iter().map(|x| self.components(kind, x, s)).collect();
        let rows = parts.iter().map(|p| p.nrows()).sum();
        let cols = parts.iter().map(|p| p.ncols()).max().unwrap_or(0);
        let mut out = DMatrix::zeros(rows, cols);
        let mut r = 0;
        for p in parts {
            if p.nrows() > 0 {
                out.view_mut((r, 0), (p.nrows(), cols)).copy_from(&p);
            }
            r += p.nrows();
        }
        out
    }
}
