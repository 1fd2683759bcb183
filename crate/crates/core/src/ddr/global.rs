//! Global discrete gradient, curl and divergence as sparse matrices, assembled entity by entity.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::DDRCore;
use crate::mesh::Entity;
use crate::sparse::{Csr, Triplet};

fn block(rows: std::ops::Range<usize>, m: &DMatrix<f64>, cols: &[usize]) -> Vec<Triplet> {
    let mut t = Vec::with_capacity(m.len());
    for (i, r) in rows.enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let v = m[(i, j)];
            if v != 0.0 {
                t.push((r, c, v));
            }
        }
    }
    t
}

impl<'m> DDRCore<'m> {
    /// uG: grad space to curl space.
    pub fn global_grad(&self) -> Csr {
        let cs = &self.curl_space;
        let mut t: Vec<Triplet> = self
            .edges
            .par_iter()
            .enumerate()
            .flat_map_iter(|(e, ed)| block(cs.entity_dofs(Entity::Edge(e)), &ed.grad, &ed.grad_dofs))
            .collect();
        t.extend(
            self.faces
                .par_iter()
                .enumerate()
                .flat_map_iter(|(f, fo)| block(cs.entity_dofs(Entity::Face(f)), &fo.ug_rows, &fo.grad_dofs))
                .collect::<Vec<_>>(),
        );
        t.extend(
            self.cells
                .par_iter()
                .enumerate()
                .flat_map_iter(|(c, co)| block(cs.entity_dofs(Entity::Cell(c)), &co.ug_rows, &co.grad_dofs))
                .collect::<Vec<_>>(),
        );
        Csr::from_triplets(cs.dim, self.grad_space.dim, t)
    }

    /// uC: curl space to div space.
    pub fn global_curl(&self) -> Csr {
        let ds = &self.div_space;
        let mut t: Vec<Triplet> = self
            .faces
            .par_iter()
            .enumerate()
            .flat_map_iter(|(f, fo)| block(ds.entity_dofs(Entity::Face(f)), &fo.curl, &fo.curl_dofs))
            .collect();
        t.extend(
            self.cells
                .par_iter()
                .enumerate()
                .flat_map_iter(|(c, co)| block(ds.entity_dofs(Entity::Cell(c)), &co.uc_rows, &co.curl_dofs))
                .collect::<Vec<_>>(),
        );
        Csr::from_triplets(ds.dim, self.curl_space.dim, t)
    }

    /// D: div space to the cellwise P^k space.
    pub fn global_div(&self) -> Csr {
        let ls = &self.l2_space;
        let t: Vec<Triplet> = self
            .cells
            .par_iter()
            .enumerate()
            .flat_map_iter(|(c, co)| block(ls.entity_dofs(Entity::Cell(c)), &co.div, &co.div_dofs))
            .collect();
        Csr::from_triplets(ls.dim, self.div_space.dim, t)
    }
}
