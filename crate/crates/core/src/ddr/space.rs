//! Global degree-of-freedom layouts of the discrete spaces.

use std::ops::Range;

use serde::Serialize;

use crate::mesh::{Entity, Mesh};
use crate::polyspaces::{analytic_dim, BasisKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpaceKind {
    Grad,
    Curl,
    Div,
    L2,
}

/// One polynomial component attached to entities of a given dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub kind: BasisKind,
    pub degree: i64,
    pub dim: usize,
}

/// Numbering: vertices, then edges, then faces, then cells; within an entity the components in
/// the order of `components`, each in orthonormal-basis order.
#[derive(Debug, Clone)]
pub struct DofSpace {
    pub kind: SpaceKind,
    pub k: usize,
    pub components: [Vec<Component>; 4],
    pub per_entity: [usize; 4],
    pub counts: [usize; 4],
    pub offsets: [usize; 4],
    pub dim: usize,
}

fn comp(kind: BasisKind, degree: i64, d: usize) -> Component {
    Component { kind, degree, dim: analytic_dim(kind, degree, d) }
}

/// Component layout by entity dimension.
pub fn layout(kind: SpaceKind, k: usize) -> [Vec<Component>; 4] {
    let k = k as i64;
    match kind {
        SpaceKind::Grad => [
            vec![Component { kind: BasisKind::P, degree: 0, dim: 1 }],
            vec![comp(BasisKind::P, k - 1, 1)],
            vec![comp(BasisKind::P, k - 1, 2)],
            vec![comp(BasisKind::P, k - 1, 3)],
        ],
        SpaceKind::Curl => [
            vec![],
            vec![comp(BasisKind::P, k, 1)],
            vec![comp(BasisKind::R, k - 1, 2), comp(BasisKind::CR, k, 2)],
            vec![comp(BasisKind::R, k - 1, 3), comp(BasisKind::CR, k, 3)],
        ],
        SpaceKind::Div => [
            vec![],
            vec![],
            vec![comp(BasisKind::P, k, 2)],
            vec![comp(BasisKind::G, k - 1, 3), comp(BasisKind::CG, k, 3)],
        ],
        SpaceKind::L2 => [vec![], vec![], vec![], vec![comp(BasisKind::P, k, 3)]],
    }
}

impl DofSpace {
    pub fn new(mesh: &Mesh, kind: SpaceKind, k: usize) -> DofSpace {
        DofSpace::from_counts(
            [mesh.num_vertices(), mesh.num_edges(), mesh.num_faces(), mesh.num_cells()],
            kind,
            k,
        )
    }

    /// Layout for a mesh with the given numbers of vertices, edges, faces and cells.
    pub fn from_counts(counts: [usize; 4], kind: SpaceKind, k: usize) -> DofSpace {
        let components = layout(kind, k);
        let per_entity = [0, 1, 2, 3].map(|d| components[d].iter().map(|c| c.dim).sum::<usize>());
        let mut offsets = [0; 4];
        let mut acc = 0;
        for d in 0..4 {
            offsets[d] = acc;
            acc += per_entity[d] * counts[d];
        }
        DofSpace { kind, k, components, per_entity, counts, offsets, dim: acc }
    }

    pub fn entity_dofs(&self, e: Entity) -> Range<usize> {
        let (d, i) = match e {
            Entity::Vertex(i) => (0, i),
            Entity::Edge(i) => (1, i),
            Entity::Face(i) => (2, i),
            Entity::Cell(i) => (3, i),
        };
        let s = self.offsets[d] + i * self.per_entity[d];
        s..s + self.per_entity[d]
    }

    /// Entity owning a global DOF.
    pub fn entity_of(&self, dof: usize) -> Entity {
        assert!(dof < self.dim);
        let d = (0..4).rev().find(|&d| self.per_entity[d] > 0 && dof >= self.offsets[d]).unwrap();
        let i = (dof - self.offsets[d]) / self.per_entity[d];
        match d {
            0 => Entity::Vertex(i),
            1 => Entity::Edge(i),
            2 => Entity::Face(i),
            _ => Entity::Cell(i),
        }
    }

    /// Global indices of the DOFs attached to the closure of an edge, face or cell, in increasing
    /// order (vertices, edges, faces sorted by index, then the entity itself).
    pub fn closure_dofs(&self, mesh: &Mesh, e: Entity) -> Vec<usize> {
        let (mut vs, mut es, mut fs, own): (Vec<usize>, Vec<usize>, Vec<usize>, Entity) = match e {
            Entity::Vertex(v) => (vec![], vec![], vec![], Entity::Vertex(v)),
            Entity::Edge(i) => (mesh.edges[i].vertices.to_vec(), vec![], vec![], e),
            Entity::Face(f) => (mesh.faces[f].vertices.clone(), mesh.faces[f].edges.clone(), vec![], e),
            Entity::Cell(t) => {
                let c = &mesh.cells[t];
                (c.vertices.clone(), c.edges.clone(), c.faces.clone(), e)
            }
        };
        vs.sort_unstable();
        es.sort_unstable();
        fs.sort_unstable();
        let mut out = Vec::new();
        for v in vs {
            out.extend(self.entity_dofs(Entity::Vertex(v)));
        }
        for i in es {
            out.extend(self.entity_dofs(Entity::Edge(i)));
        }
        for f in fs {
            out.extend(self.entity_dofs(Entity::Face(f)));
        }
        out.extend(self.entity_dofs(own));
        out
    }

    /// Local dimension on a cell with the given numbers of vertices, edges and faces.
    pub fn local_dim(kind: SpaceKind, k: usize, nv: usize, ne: usize, nf: usize) -> usize {
        let s = DofSpace::from_counts([nv, ne, nf, 1], kind, k);
        s.dim
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_two_local_dims() {
        let expect = [
            ((4, 6, 4), [(4, 6, 4, 1), (15, 28, 18, 4), (32, 65, 44, 10)]),
            ((8, 12, 6), [(8, 12, 6, 1), (27, 46, 24, 4), (54, 99, 56, 10)]),
        ];
        for ((nv, ne, nf), rows) in expect {
            for (k, row) in rows.iter().enumerate() {
                let got = (
                    DofSpace::local_dim(SpaceKind::Grad, k, nv, ne, nf),
                    DofSpace::local_dim(SpaceKind::Curl, k, nv, ne, nf),
                    DofSpace::local_dim(SpaceKind::Div, k, nv, ne, nf),
                    DofSpace::local_dim(SpaceKind::L2, k, nv, ne, nf),
                );
                assert_eq!(got, *row, "k={k}");
            }
        }
    }

    #[test]
    fn entity_of_inverts_entity_dofs() {
        let s = DofSpace::from_counts([5, 7, 4, 2], SpaceKind::Curl, 1);
        for (d, n) in [(1, 7), (2, 4), (3, 2)] {
            for i in 0..n {
                let e = [Entity::Vertex(i), Entity::Edge(i), Entity::Face(i), Entity::Cell(i)][d];
                for dof in s.entity_dofs(e) {
                    assert_eq!(s.entity_of(dof), e);
                }
            }
        }
    }
}
