//! Quadrature on edges, polygonal faces and polyhedral cells by star-point subdivision into
//! simplices, each integrated with a collapsed Gauss-Jacobi rule exact to the requested degree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::mesh::{Entity, Mesh, MeshError, Point};

#[derive(Debug, Clone)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn extend(&mut self, other: QuadRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }
}

/// Gauss-Jacobi nodes and weights on [-1, 1] for the weight (1-x)^alpha, computed by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let b = 0.0;
    let ab = alpha + b;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (b - alpha) / (ab + 2.0)
        } else {
            (b * b - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jac[(i, i)] = diag;
        if i + 1 < n {
            let k = k + 1.0;
            let num = 4.0 * k * (k + alpha) * (k + b) * (k + ab);
            let den = (2.0 * k + ab).powi(2) * (2.0 * k + ab + 1.0) * (2.0 * k + ab - 1.0);
            let off = (num / den).sqrt();
            jac[(i, i + 1)] = off;
            jac[(i + 1, i)] = off;
        }
    }
    // Zeroth moment of (1-x)^alpha on [-1, 1].
    let mu0 = 2f64.powf(alpha + 1.0) / (alpha + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Reference rules: (barycentric-free) coordinates in the unit simplex and weights.
struct RefRules {
    line: Vec<(f64, f64)>,
    tri: Vec<([f64; 2], f64)>,
    tet: Vec<([f64; 3], f64)>,
}

fn reference_rules(degree: usize) -> Arc<RefRules> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<RefRules>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&degree) {
        return r.clone();
    }
    let n = degree / 2 + 1;
    let (x0, w0) = gauss_jacobi(n, 0.0);
    let (x1, w1) = gauss_jacobi(n, 1.0);
    let (x2, w2) = gauss_jacobi(n, 2.0);
    let to01 = |x: f64| 0.5 * (1.0 + x);
    let line: Vec<(f64, f64)> = x0.iter().zip(&w0).map(|(&x, &w)| (to01(x), 0.5 * w)).collect();
    let mut tri = Vec::with_capacity(n * n);
    for (i, &s) in x0.iter().enumerate() {
        for (j, &t) in x1.iter().enumerate() {
            let (s, t) = (to01(s), to01(t));
            tri.push(([s * (1.0 - t), t], 0.5 * w0[i] * 0.25 * w1[j]));
        }
    }
    let mut tet = Vec::with_capacity(n * n * n);
    for (i, &s) in x0.iter().enumerate() {
        for (j, &t) in x1.iter().enumerate() {
            for (l, &r) in x2.iter().enumerate() {
                let (s, t, r) = (to01(s), to01(t), to01(r));
                tet.push((
                    [s * (1.0 - t) * (1.0 - r), t * (1.0 - r), r],
                    0.5 * w0[i] * 0.25 * w1[j] * 0.125 * w2[l],
                ));
            }
        }
    }
    let rules = Arc::new(RefRules { line, tri, tet });
    cache.lock().unwrap().insert(degree, rules.clone());
    rules
}

pub fn segment_rule(a: &Point, b: &Point, degree: usize) -> QuadRule {
    let r = reference_rules(degree);
    let len = (b - a).norm();
    QuadRule {
        points: r.line.iter().map(|&(s, _)| a + (b - a) * s).collect(),
        weights: r.line.iter().map(|&(_, w)| w * len).collect(),
        degree,
    }
}

pub fn triangle_rule(a: &Point, b: &Point, c: &Point, degree: usize) -> QuadRule {
    let r = reference_rules(degree);
    let area2 = (b - a).cross(&(c - a)).norm();
    QuadRule {
        points: r.tri.iter().map(|&(u, _)| a + (b - a) * u[0] + (c - a) * u[1]).collect(),
        weights: r.tri.iter().map(|&(_, w)| w * area2).collect(),
        degree,
    }
}

pub fn tetrahedron_rule(a: &Point, b: &Point, c: &Point, d: &Point, degree: usize) -> QuadRule {
    let r = reference_rules(degree);
    let vol6 = (b - a).cross(&(c - a)).dot(&(d - a)).abs();
    QuadRule {
        points: r.tet.iter().map(|&(u, _)| a + (b - a) * u[0] + (c - a) * u[1] + (d - a) * u[2]).collect(),
        weights: r.tet.iter().map(|&(_, w)| w * vol6).collect(),
        degree,
    }
}

pub fn edge_rule(mesh: &Mesh, e: usize, degree: usize) -> QuadRule {
    let [a, b] = mesh.edges[e].vertices;
    segment_rule(&mesh.vertices[a], &mesh.vertices[b], degree)
}

pub fn face_rule(mesh: &Mesh, f: usize, degree: usize) -> QuadRule {
    let face = &mesh.faces[f];
    let mut rule = QuadRule { points: Vec::new(), weights: Vec::new(), degree };
    let nv = face.vertices.len();
    for i in 0..nv {
        let a = &mesh.vertices[face.vertices[i]];
        let b = &mesh.vertices[face.vertices[(i + 1) % nv]];
        rule.extend(triangle_rule(&face.center, a, b, degree));
    }
    rule
}

pub fn cell_rule(mesh: &Mesh, t: usize, degree: usize) -> QuadRule {
    let cell = &mesh.cells[t];
    let mut rule = QuadRule { points: Vec::new(), weights: Vec::new(), degree };
    for &f in &cell.faces {
        let face = &mesh.faces[f];
        let nv = face.vertices.len();
        for i in 0..nv {
            let a = &mesh.vertices[face.vertices[i]];
            let b = &mesh.vertices[face.vertices[(i + 1) % nv]];
            rule.extend(tetrahedron_rule(&cell.center, &face.center, a, b, degree));
        }
    }
    rule
}

/// Rule for any edge, face or cell; fails when a sub-simplex of the fan has non-positive volume.
pub fn entity_rule(mesh: &Mesh, entity: Entity, degree: usize) -> Result<QuadRule, MeshError> {
    match entity {
        Entity::Vertex(_) => Err(MeshError::Invalid("no quadrature on vertices".into())),
        Entity::Edge(e) => Ok(edge_rule(mesh, e, degree)),
        Entity::Face(f) => {
            let face = &mesh.faces[f];
            let nv = face.vertices.len();
            for i in 0..nv {
                let a = mesh.vertices[face.vertices[i]] - face.center;
                let b = mesh.vertices[face.vertices[(i + 1) % nv]] - face.center;
                if a.cross(&b).dot(&face.normal) <= 0.0 {
                    return Err(MeshError::NotStarShaped { entity: "face", index: f });
                }
            }
            Ok(face_rule(mesh, f, degree))
        }
        Entity::Cell(t) => {
            let cell = &mesh.cells[t];
            for (&f, &w) in cell.faces.iter().zip(&cell.face_orientations) {
                let face = &mesh.faces[f];
                let nv = face.vertices.len();
                let c = face.center - cell.center;
                for i in 0..nv {
                    let a = mesh.vertices[face.vertices[i]] - cell.center;
                    let b = mesh.vertices[face.vertices[(i + 1) % nv]] - cell.center;
                    if w * c.dot(&a.cross(&b)) <= 0.0 {
                        return Err(MeshError::NotStarShaped { entity: "cell", index: t });
                    }
                }
            }
            Ok(cell_rule(mesh, t, degree))
        }
    }
}
