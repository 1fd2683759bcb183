//! Polynomial families in scaled monomial coordinates, their exact derivatives and Koszul
//! products, and tabulation at quadrature points.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::mesh::{Entity, Mesh, Point};

/// Highest total degree supported by the monomial tables.
pub const MAX_DEGREE: usize = 16;

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of monomials of total degree at most `deg` in `d` variables (0 for negative degrees).
pub fn num_monomials(d: usize, deg: i64) -> usize {
    if deg < 0 {
        0
    } else {
        binomial(deg as usize + d, d)
    }
}

pub struct MonomialTable {
    pub exps: Vec<[u8; 3]>,
    index: HashMap<[u8; 3], usize>,
}

impl MonomialTable {
    pub fn index(&self, e: [u8; 3]) -> usize {
        self.index[&e]
    }
}

/// Graded monomial ordering in `d` variables; the monomials of degree <= L form a prefix.
pub fn monomial_table(d: usize) -> &'static MonomialTable {
    static TABLES: OnceLock<[MonomialTable; 4]> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        let build = |d: usize| {
            let mut exps = Vec::new();
            for deg in 0..=MAX_DEGREE as u8 {
                match d {
                    0 => {
                        if deg == 0 {
                            exps.push([0, 0, 0]);
                        }
                    }
                    1 => exps.push([deg, 0, 0]),
                    2 => {
                        for a in (0..=deg).rev() {
                            exps.push([a, deg - a, 0]);
                        }
                    }
                    _ => {
                        for a in (0..=deg).rev() {
                            for b in (0..=deg - a).rev() {
                                exps.push([a, b, deg - a - b]);
                            }
                        }
                    }
                }
            }
            let index = exps.iter().enumerate().map(|(i, e)| (*e, i)).collect();
            MonomialTable { exps, index }
        };
        [build(0), build(1), build(2), build(3)]
    });
    &tables[d]
}

/// Affine local coordinates xi_i = (x - origin) . axes[i] / scale.
#[derive(Debug, Clone)]
pub struct Frame {
    pub origin: Point,
    pub scale: f64,
    pub axes: Vec<Point>,
}

impl Frame {
    pub fn of(mesh: &Mesh, entity: Entity) -> Frame {
        match entity {
            Entity::Vertex(v) => Frame { origin: mesh.vertices[v], scale: 1.0, axes: vec![] },
            Entity::Edge(e) => {
                let ed = &mesh.edges[e];
                Frame { origin: ed.center, scale: ed.length, axes: vec![ed.tangent] }
            }
            Entity::Face(f) => {
                let fc = &mesh.faces[f];
                Frame { origin: fc.center, scale: fc.diameter, axes: fc.frame.to_vec() }
            }
            Entity::Cell(t) => {
                let c = &mesh.cells[t];
                Frame { origin: c.center, scale: c.diameter, axes: vec![Point::x(), Point::y(), Point::z()] }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn local(&self, x: &Point) -> [f64; 3] {
        let r = x - self.origin;
        let mut out = [0.0; 3];
        for (i, a) in self.axes.iter().enumerate() {
            out[i] = r.dot(a) / self.scale;
        }
        out
    }

    /// Monomial values of degree <= deg at the given points: an (N x npts) matrix.
    pub fn monomial_values(&self, deg: usize, points: &[Point]) -> DMatrix<f64> {
        let d = self.dim();
        let n = num_monomials(d, deg as i64);
        let table = monomial_table(d);
        let mut m = DMatrix::zeros(n, points.len());
        let mut pows = vec![[1.0f64; MAX_DEGREE + 1]; 3];
        for (q, p) in points.iter().enumerate() {
            let xi = self.local(p);
            for i in 0..d {
                for k in 1..=deg {
                    pows[i][k] = pows[i][k - 1] * xi[i];
                }
            }
            for (j, e) in table.exps[..n].iter().enumerate() {
                m[(j, q)] = pows[0][e[0] as usize] * pows[1][e[1] as usize] * pows[2][e[2] as usize];
            }
        }
        m
    }
}

/// A finite family of (possibly vector-valued) polynomial functions on one entity, stored as
/// coefficients over the scaled monomials of its frame. Row i, block c holds component c of
/// member i.
#[derive(Debug, Clone)]
pub struct Family {
    pub frame: Frame,
    pub value_dim: usize,
    pub degree: usize,
    pub coeffs: DMatrix<f64>,
}

/// Values of a family at points: one (members x npts) matrix per component.
#[derive(Debug, Clone)]
pub struct Tab {
    pub vals: Vec<DMatrix<f64>>,
}

impl Family {
    pub fn nmono(&self) -> usize {
        num_monomials(self.frame.dim(), self.degree as i64)
    }

    pub fn len(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.nrows() == 0
    }

    pub fn empty(frame: Frame, value_dim: usize) -> Family {
        let n = num_monomials(frame.dim(), 0);
        Family { frame, value_dim, degree: 0, coeffs: DMatrix::zeros(0, value_dim * n) }
    }

    /// Scalar monomials of degree in [lo, hi].
    pub fn monomials(frame: &Frame, lo: usize, hi: i64) -> Family {
        let d = frame.dim();
        let deg = hi.max(0) as usize;
        let n = num_monomials(d, deg as i64);
        let start = if lo == 0 { 0 } else { num_monomials(d, lo as i64 - 1) };
        let end = num_monomials(d, hi);
        let rows = end.saturating_sub(start);
        let mut c = DMatrix::zeros(rows, n);
        for i in 0..rows {
            c[(i, start + i)] = 1.0;
        }
        Family { frame: frame.clone(), value_dim: 1, degree: deg, coeffs: c }
    }

    /// Same functions with coefficients over monomials of a higher degree.
    pub fn raise(&self, deg: usize) -> Family {
        if deg <= self.degree {
            return self.clone();
        }
        let (n0, n1) = (self.nmono(), num_monomials(self.frame.dim(), deg as i64));
        let mut c = DMatrix::zeros(self.len(), self.value_dim * n1);
        for comp in 0..self.value_dim {
            c.view_mut((0, comp * n1), (self.len(), n0)).copy_from(&self.coeffs.view((0, comp * n0), (self.len(), n0)));
        }
        Family { frame: self.frame.clone(), value_dim: self.value_dim, degree: deg, coeffs: c }
    }

    pub fn component(&self, comp: usize) -> Family {
        let n = self.nmono();
        Family {
            frame: self.frame.clone(),
            value_dim: 1,
            degree: self.degree,
            coeffs: self.coeffs.columns(comp * n, n).into_owned(),
        }
    }

    /// Builds a vector family whose component c is `parts[c]` (all scalar, same frame).
    pub fn from_components(parts: &[Family]) -> Family {
        let deg = parts.iter().map(|p| p.degree).max().unwrap_or(0);
        let parts: Vec<Family> = parts.iter().map(|p| p.raise(deg)).collect();
        let n = parts[0].nmono();
        let rows = parts[0].len();
        let mut c = DMatrix::zeros(rows, n * parts.len());
        for (comp, p) in parts.iter().enumerate() {
            assert_eq!(p.value_dim, 1);
            assert_eq!(p.len(), rows);
            c.view_mut((0, comp * n), (rows, n)).copy_from(&p.coeffs);
        }
        Family { frame: parts[0].frame.clone(), value_dim: parts.len(), degree: deg, coeffs: c }
    }

    /// Tensor family {b e_c}: for each component c, each scalar member b placed in component c.
    pub fn vectorize(&self, value_dim: usize) -> Family {
        assert_eq!(self.value_dim, 1);
        let n = self.nmono();
        let rows = self.len();
        let mut c = DMatrix::zeros(rows * value_dim, n * value_dim);
        for comp in 0..value_dim {
            c.view_mut((comp * rows, comp * n), (rows, n)).copy_from(&self.coeffs);
        }
        Family { frame: self.frame.clone(), value_dim, degree: self.degree, coeffs: c }
    }

    /// Concatenation of members (same frame and value dimension).
    pub fn stack(parts: &[&Family]) -> Family {
        let deg = parts.iter().map(|p| p.degree).max().unwrap_or(0);
        let raised: Vec<Family> = parts.iter().map(|p| p.raise(deg)).collect();
        let cols = raised[0].coeffs.ncols();
        let rows: usize = raised.iter().map(|p| p.len()).sum();
        let mut c = DMatrix::zeros(rows, cols);
        let mut r = 0;
        for p in &raised {
            assert_eq!(p.value_dim, raised[0].value_dim);
            c.view_mut((r, 0), (p.len(), cols)).copy_from(&p.coeffs);
            r += p.len();
        }
        Family { frame: raised[0].frame.clone(), value_dim: raised[0].value_dim, degree: deg, coeffs: c }
    }

    /// Linear combinations: row i of the result is sum_j m[i,j] * member j.
    pub fn combine(&self, m: &DMatrix<f64>) -> Family {
        Family { frame: self.frame.clone(), value_dim: self.value_dim, degree: self.degree, coeffs: m * &self.coeffs }
    }

    pub fn select(&self, rows: &[usize]) -> Family {
        Family {
            frame: self.frame.clone(),
            value_dim: self.value_dim,
            degree: self.degree,
            coeffs: self.coeffs.select_rows(rows),
        }
    }

    fn map_scalar(&self, new_deg: usize, f: impl Fn(&[u8; 3]) -> Option<([u8; 3], f64)>) -> Family {
        let d = self.frame.dim();
        let table = monomial_table(d);
        let n0 = self.nmono();
        let n1 = num_monomials(d, new_deg as i64);
        let mut c = DMatrix::zeros(self.len(), self.value_dim * n1);
        for j in 0..n0 {
            if let Some((e, s)) = f(&table.exps[j]) {
                let k = table.index(e);
                for comp in 0..self.value_dim {
                    for i in 0..self.len() {
                        c[(i, comp * n1 + k)] += s * self.coeffs[(i, comp * n0 + j)];
                    }
                }
            }
        }
        Family { frame: self.frame.clone(), value_dim: self.value_dim, degree: new_deg, coeffs: c }
    }

    /// Derivative with respect to the local coordinate xi_i (componentwise).
    pub fn d_local(&self, i: usize) -> Family {
        let nd = self.degree.saturating_sub(1);
        self.map_scalar(nd, |e| {
            if e[i] == 0 {
                None
            } else {
                let mut e2 = *e;
                e2[i] -= 1;
                Some((e2, e[i] as f64))
            }
        })
    }

    /// Multiplication by the local coordinate xi_i (componentwise).
    pub fn times_local(&self, i: usize) -> Family {
        self.map_scalar(self.degree + 1, |e| {
            let mut e2 = *e;
            e2[i] += 1;
            Some((e2, 1.0))
        })
    }

    pub fn scaled(&self, s: f64) -> Family {
        let mut f = self.clone();
        f.coeffs *= s;
        f
    }

    pub fn add(&self, other: &Family) -> Family {
        let deg = self.degree.max(other.degree);
        let (a, b) = (self.raise(deg), other.raise(deg));
        Family { frame: a.frame.clone(), value_dim: a.value_dim, degree: deg, coeffs: a.coeffs + b.coeffs }
    }

    /// Physical derivative along local axis i.
    pub fn d_phys(&self, i: usize) -> Family {
        self.d_local(i).scaled(1.0 / self.frame.scale)
    }

    /// Gradient of a scalar family, components along the frame axes.
    pub fn grad(&self) -> Family {
        assert_eq!(self.value_dim, 1);
        let parts: Vec<Family> = (0..self.frame.dim()).map(|i| self.d_phys(i)).collect();
        Family::from_components(&parts)
    }

    /// Divergence of a vector family with components along the frame axes.
    pub fn div(&self) -> Family {
        let d = self.frame.dim();
        assert_eq!(self.value_dim, d);
        let mut acc = self.component(0).d_phys(0);
        for i in 1..d {
            acc = acc.add(&self.component(i).d_phys(i));
        }
        acc
    }

    /// Curl of a 3D vector family.
    pub fn curl(&self) -> Family {
        assert_eq!((self.value_dim, self.frame.dim()), (3, 3));
        let c: Vec<Family> = (0..3).map(|i| self.component(i)).collect();
        Family::from_components(&[
            c[2].d_phys(1).add(&c[1].d_phys(2).scaled(-1.0)),
            c[0].d_phys(2).add(&c[2].d_phys(0).scaled(-1.0)),
            c[1].d_phys(0).add(&c[0].d_phys(1).scaled(-1.0)),
        ])
    }

    /// Face vector rot: the gradient rotated by -pi/2, (d_2 r, -d_1 r).
    pub fn vrot(&self) -> Family {
        assert_eq!((self.value_dim, self.frame.dim()), (1, 2));
        Family::from_components(&[self.d_phys(1), self.d_phys(0).scaled(-1.0)])
    }

    /// Face scalar rot of a tangent field: d_1 v_2 - d_2 v_1.
    pub fn rot(&self) -> Family {
        assert_eq!((self.value_dim, self.frame.dim()), (2, 2));
        self.component(1).d_phys(0).add(&self.component(0).d_phys(1).scaled(-1.0))
    }

    /// Koszul products xi * b of a scalar family: the vector family (xi_1 b, ..., xi_d b).
    pub fn koszul_radial(&self) -> Family {
        assert_eq!(self.value_dim, 1);
        let parts: Vec<Family> = (0..self.frame.dim()).map(|i| self.times_local(i)).collect();
        Family::from_components(&parts)
    }

    /// Face Koszul products xi^perp * b = (xi_2 b, -xi_1 b).
    pub fn koszul_perp(&self) -> Family {
        assert_eq!((self.value_dim, self.frame.dim()), (1, 2));
        Family::from_components(&[self.times_local(1), self.times_local(0).scaled(-1.0)])
    }

    /// Cell Koszul products xi x v of a 3D vector family.
    pub fn koszul_cross(&self) -> Family {
        assert_eq!((self.value_dim, self.frame.dim()), (3, 3));
        let c: Vec<Family> = (0..3).map(|i| self.component(i)).collect();
        Family::from_components(&[
            c[2].times_local(1).add(&c[1].times_local(2).scaled(-1.0)),
            c[0].times_local(2).add(&c[2].times_local(0).scaled(-1.0)),
            c[1].times_local(0).add(&c[0].times_local(1).scaled(-1.0)),
        ])
    }

    pub fn tabulate(&self, points: &[Point]) -> Tab {
        let m = self.frame.monomial_values(self.degree, points);
        let n = self.nmono();
        let vals = (0..self.value_dim).map(|c| self.coeffs.columns(c * n, n) * &m).collect();
        Tab { vals }
    }

    /// Values at a single point: (members x value_dim).
    pub fn eval(&self, x: &Point) -> DMatrix<f64> {
        let t = self.tabulate(std::slice::from_ref(x));
        DMatrix::from_fn(self.len(), self.value_dim, |i, c| t.vals[c][(i, 0)])
    }

    /// Coefficients of the members in the target family, assuming the target is orthonormal and
    /// spans them, via quadrature.
    pub fn express_in(&self, target: &Family, weights: &[f64], points: &[Point]) -> DMatrix<f64> {
        let a = self.tabulate(points);
        let b = target.tabulate(points);
        a.gram(&b, weights)
    }
}

impl Tab {
    pub fn value_dim(&self) -> usize {
        self.vals.len()
    }

    pub fn len(&self) -> usize {
        self.vals[0].nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.vals[0].nrows() == 0
    }

    pub fn npts(&self) -> usize {
        self.vals[0].ncols()
    }

    pub fn scalar(v: DMatrix<f64>) -> Tab {
        Tab { vals: vec![v] }
    }

    /// Weighted L2 Gram: G[i,j] = sum_q w_q self_i(q) . other_j(q).
    pub fn gram(&self, other: &Tab, weights: &[f64]) -> DMatrix<f64> {
        assert_eq!(self.value_dim(), other.value_dim());
        let mut g = DMatrix::zeros(self.len(), other.len());
        for (a, b) in self.vals.iter().zip(&other.vals) {
            let mut bw = b.clone();
            for (q, w) in weights.iter().enumerate() {
                bw.column_mut(q).scale_mut(*w);
            }
            g.gemm(1.0, a, &bw.transpose(), 1.0);
        }
        g
    }

    /// Dot product of 3D values with a constant vector.
    pub fn dot(&self, v: &Point) -> Tab {
        assert_eq!(self.value_dim(), 3);
        Tab::scalar(&self.vals[0] * v.x + &self.vals[1] * v.y + &self.vals[2] * v.z)
    }

    /// Pointwise cross product u x v of 3D values with a constant vector.
    pub fn cross(&self, v: &Point) -> Tab {
        assert_eq!(self.value_dim(), 3);
        let u = &self.vals;
        Tab {
            vals: vec![
                &u[1] * v.z - &u[2] * v.y,
                &u[2] * v.x - &u[0] * v.z,
                &u[0] * v.y - &u[1] * v.x,
            ],
        }
    }

    /// In-plane components (v . e1, v . e2) of 3D values.
    pub fn to_plane(&self, frame: &[Point]) -> Tab {
        Tab { vals: frame.iter().map(|e| self.dot(e).vals.remove(0)).collect() }
    }

    /// 3D values e1 v_1 + e2 v_2 of in-plane values.
    pub fn from_plane(&self, frame: &[Point]) -> Tab {
        assert_eq!(self.value_dim(), 2);
        Tab {
            vals: (0..3)
                .map(|c| &self.vals[0] * frame[0][c] + &self.vals[1] * frame[1][c])
                .collect(),
        }
    }

    /// Row-wise linear combination: result_i = sum_j m[i,j] self_j.
    pub fn combine(&self, m: &DMatrix<f64>) -> Tab {
        Tab { vals: self.vals.iter().map(|v| m * v).collect() }
    }

    pub fn sub(&self, other: &Tab) -> Tab {
        Tab { vals: self.vals.iter().zip(&other.vals).map(|(a, b)| a - b).collect() }
    }

    pub fn stack(parts: &[&Tab]) -> Tab {
        let vd = parts[0].value_dim();
        let npts = parts[0].npts();
        let rows: usize = parts.iter().map(|p| p.len()).sum();
        let mut vals = vec![DMatrix::zeros(rows, npts); vd];
        let mut r = 0;
        for p in parts {
            for c in 0..vd {
                vals[c].view_mut((r, 0), (p.len(), npts)).copy_from(&p.vals[c]);
            }
            r += p.len();
        }
        Tab { vals }
    }

    /// Tabulation of sampled field values (one member) given per point as value_dim-vectors.
    pub fn from_samples(samples: &[Vec<f64>], value_dim: usize) -> Tab {
        Tab {
            vals: (0..value_dim)
                .map(|c| DMatrix::from_fn(1, samples.len(), |_, q| samples[q][c]))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cubic_mesh;

    #[test]
    fn table_prefix_and_counts() {
        for d in 1..=3 {
            let t = monomial_table(d);
            for deg in 0..=6 {
                let n = num_monomials(d, deg);
                assert!(t.exps[..n].iter().all(|e| (e[0] + e[1] + e[2]) as i64 <= deg));
            }
        }
        assert_eq!(num_monomials(3, 2), 10);
        assert_eq!(num_monomials(2, -1), 0);
    }

    #[test]
    fn exact_calculus_on_cell() {
        let m = generate_cubic_mesh(1);
        let fr = Frame::of(&m, Entity::Cell(0));
        let p = Family::monomials(&fr, 0, 3);
        let x = Point::new(0.3, 0.7, 0.2);
        let h = 1e-6;
        let g = p.grad().eval(&x);
        for c in 0..3 {
            let mut e = Point::zeros();
            e[c] = h;
            let fd = (p.eval(&(x + e)) - p.eval(&(x - e))) / (2.0 * h);
            for i in 0..p.len() {
                assert!((g[(i, c)] - fd[(i, 0)]).abs() < 1e-7);
            }
        }
        let v = p.vectorize(3);
        let dc = v.curl().div().eval(&x);
        assert!(dc.iter().all(|z| z.abs() < 1e-12));
        let cg = p.grad().curl().eval(&x);
        assert!(cg.iter().all(|z| z.abs() < 1e-12));
    }

    #[test]
    fn koszul_identities() {
        let m = generate_cubic_mesh(1);
        let fr = Frame::of(&m, Entity::Cell(0));
        let p = Family::monomials(&fr, 0, 2);
        // xi x (xi b) = 0
        let z = p.koszul_radial().koszul_cross().eval(&Point::new(0.1, 0.9, 0.4));
        assert!(z.iter().all(|v| v.abs() < 1e-14));
    }
}
