//! Polyhedral meshes: topology, orientation signs, geometry, JSON ingestion and
//! the builtin generators (cubic, Kuhn tetrahedra, agglomerated pairs).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = Vector3<f64>;

const PLANARITY_TOL: f64 = 1e-10;
const CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh parse error: {0}")]
    Parse(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("face {face} is not planar (deviation {deviation:.3e})")]
    NonPlanarFace { face: usize, deviation: f64 },
    #[error("cell {cell} has a non-closed boundary: {reason}")]
    OpenCell { cell: usize, reason: String },
    #[error("face {0} belongs to no cell")]
    DanglingFace(usize),
    #[error("face {face} is shared by {count} cells")]
    OvershareFace { face: usize, count: usize },
    #[error("{entity} {index} is not star-shaped with respect to its centroid")]
    NotStarShaped { entity: &'static str, index: usize },
}

#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoints, lower global index first; `tangent` points from `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    pub tangent: Point,
    pub length: f64,
    pub center: Point,
    pub faces: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: Vec<usize>,
    /// Edges in loop order; `edges[i]` joins `vertices[i]` and `vertices[i+1]`.
    pub edges: Vec<usize>,
    /// omega_FE per entry of `edges`.
    pub edge_orientations: Vec<f64>,
    pub normal: Point,
    /// Orthonormal in-plane axes with `frame[0] x frame[1] = normal`.
    pub frame: [Point; 2],
    pub center: Point,
    pub diameter: f64,
    pub area: f64,
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub faces: Vec<usize>,
    /// omega_TF per entry of `faces`.
    pub face_orientations: Vec<f64>,
    /// Sorted global indices.
    pub edges: Vec<usize>,
    /// Sorted global indices.
    pub vertices: Vec<usize>,
    pub center: Point,
    pub diameter: f64,
    pub volume: f64,
}

/// Mesh entity addressed by kind and index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entity {
    Vertex(usize),
    Edge(usize),
    Face(usize),
    Cell(usize),
}

impl Entity {
    pub fn dim(self) -> usize {
        match self {
            Entity::Vertex(_) => 0,
            Entity::Edge(_) => 1,
            Entity::Face(_) => 2,
            Entity::Cell(_) => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 3]>,
    faces: Vec<Vec<usize>>,
    cells: Vec<Vec<usize>>,
}

fn diameter_of(points: impl Iterator<Item = Point> + Clone) -> f64 {
    let pts: Vec<Point> = points.collect();
    let mut d: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            d = d.max((pts[i] - pts[j]).norm());
        }
    }
    d
}

fn centroid(points: &[Point]) -> Point {
    points.iter().fold(Point::zeros(), |a, p| a + p) / points.len() as f64
}

impl Mesh {
    /// Builds a mesh from raw vertex coordinates, face vertex loops and cell face lists,
    /// deriving edges, orientations and geometry, then validating every invariant.
    pub fn from_raw(
        vertices: Vec<Point>,
        face_loops: Vec<Vec<usize>>,
        cell_faces: Vec<Vec<usize>>,
    ) -> Result<Mesh, MeshError> {
        let nv = vertices.len();
        if nv == 0 || face_loops.is_empty() || cell_faces.is_empty() {
            return Err(MeshError::Invalid("mesh needs vertices, faces and cells".into()));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(MeshError::Invalid("non-finite vertex coordinate".into()));
        }

        // Edges in order of first appearance along the face loops.
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_verts: Vec<[usize; 2]> = Vec::new();
        let mut face_edges: Vec<Vec<usize>> = Vec::with_capacity(face_loops.len());
        for (f, lp) in face_loops.iter().enumerate() {
            if lp.len() < 3 {
                return Err(MeshError::Invalid(format!("face {f} has fewer than 3 vertices")));
            }
            let mut seen = lp.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != lp.len() {
                return Err(MeshError::Invalid(format!("face {f} repeats a vertex")));
            }
            if let Some(&bad) = lp.iter().find(|&&v| v >= nv) {
                return Err(MeshError::Invalid(format!("face {f} references missing vertex {bad}")));
            }
            let mut es = Vec::with_capacity(lp.len());
            for i in 0..lp.len() {
                let (a, b) = (lp[i], lp[(i + 1) % lp.len()]);
                let key = (a.min(b), a.max(b));
                let id = *edge_index.entry(key).or_insert_with(|| {
                    edge_verts.push([key.0, key.1]);
                    edge_verts.len() - 1
                });
                es.push(id);
            }
            face_edges.push(es);
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(edge_verts.len());
        for (e, ev) in edge_verts.iter().enumerate() {
            let d = vertices[ev[1]] - vertices[ev[0]];
            let length = d.norm();
            if !(length > 0.0) {
                return Err(MeshError::Invalid(format!("edge {e} has zero length")));
            }
            edges.push(Edge {
                vertices: *ev,
                tangent: d / length,
                length,
                center: (vertices[ev[0]] + vertices[ev[1]]) * 0.5,
                faces: Vec::new(),
            });
        }

        let mut faces = Vec::with_capacity(face_loops.len());
        for (f, lp) in face_loops.iter().enumerate() {
            let pts: Vec<Point> = lp.iter().map(|&v| vertices[v]).collect();
            let center = centroid(&pts);
            // Newell's formula: twice the vector area.
            let mut nraw = Point::zeros();
            for i in 0..pts.len() {
                nraw += (pts[i] - center).cross(&(pts[(i + 1) % pts.len()] - center));
            }
            let area = 0.5 * nraw.norm();
            let diameter = diameter_of(pts.iter().copied());
            if !(area > 1e-14 * diameter * diameter) {
                return Err(MeshError::Invalid(format!("face {f} has zero area")));
            }
            let normal = nraw.normalize();
            let deviation = pts
                .iter()
                .map(|p| (p - center).dot(&normal).abs())
                .fold(0.0, f64::max);
            if deviation > PLANARITY_TOL * diameter {
                return Err(MeshError::NonPlanarFace { face: f, deviation });
            }
            let mut e1 = pts[1] - pts[0];
            e1 -= normal * e1.dot(&normal);
            let e1 = e1.normalize();
            let e2 = normal.cross(&e1);
            for i in 0..pts.len() {
                let a = pts[i] - center;
                let b = pts[(i + 1) % pts.len()] - center;
                if a.cross(&b).dot(&normal) <= 1e-14 * diameter * diameter {
                    return Err(MeshError::NotStarShaped { entity: "face", index: f });
                }
            }
            let mut edge_orientations = Vec::with_capacity(lp.len());
            for &e in &face_edges[f] {
                let nfe = normal.cross(&edges[e].tangent);
                let s = (edges[e].center - center).dot(&nfe);
                edge_orientations.push(if s > 0.0 { 1.0 } else { -1.0 });
                edges[e].faces.push(f);
            }
            faces.push(Face {
                vertices: lp.clone(),
                edges: face_edges[f].clone(),
                edge_orientations,
                normal,
                frame: [e1, e2],
                center,
                diameter,
                area,
                cells: Vec::new(),
            });
        }

        let mut cells = Vec::with_capacity(cell_faces.len());
        for (t, fl) in cell_faces.iter().enumerate() {
            if fl.len() < 4 {
                return Err(MeshError::OpenCell { cell: t, reason: "fewer than 4 faces".into() });
            }
            if let Some(&bad) = fl.iter().find(|&&f| f >= faces.len()) {
                return Err(MeshError::Invalid(format!("cell {t} references missing face {bad}")));
            }
            let mut sorted = fl.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != fl.len() {
                return Err(MeshError::Invalid(format!("cell {t} repeats a face")));
            }
            let mut vs: Vec<usize> = fl.iter().flat_map(|&f| faces[f].vertices.iter().copied()).collect();
            vs.sort_unstable();
            vs.dedup();
            let mut edge_count: BTreeMap<usize, usize> = BTreeMap::new();
            for &f in fl {
                for &e in &faces[f].edges {
                    *edge_count.entry(e).or_insert(0) += 1;
                }
            }
            if let Some((&e, &c)) = edge_count.iter().find(|(_, &c)| c != 2) {
                return Err(MeshError::OpenCell {
                    cell: t,
                    reason: format!("edge {e} bounds {c} of its faces"),
                });
            }
            let pts: Vec<Point> = vs.iter().map(|&v| vertices[v]).collect();
            let center = centroid(&pts);
            let diameter = diameter_of(pts.iter().copied());
            let mut orient = Vec::with_capacity(fl.len());
            let mut closure = Point::zeros();
            let mut volume = 0.0;
            for &f in fl {
                let face = &faces[f];
                let s = (face.center - center).dot(&face.normal);
                let w = if s > 0.0 { 1.0 } else { -1.0 };
                for i in 0..face.vertices.len() {
                    let a = vertices[face.vertices[i]] - center;
                    let b = vertices[face.vertices[(i + 1) % face.vertices.len()]] - center;
                    let c = face.center - center;
                    if w * c.dot(&a.cross(&b)) <= 1e-14 * diameter.powi(3) {
                        return Err(MeshError::NotStarShaped { entity: "cell", index: t });
                    }
                }
                closure += face.normal * (w * face.area);
                volume += w * face.area * face.normal.dot(&(face.center - center)) / 3.0;
                orient.push(w);
            }
            if closure.norm() > CLOSURE_TOL * diameter * diameter {
                return Err(MeshError::OpenCell {
                    cell: t,
                    reason: format!("sum of oriented face vector areas is {:.3e}", closure.norm()),
                });
            }
            let mut es: Vec<usize> = edge_count.keys().copied().collect();
            es.sort_unstable();
            for &f in fl {
                faces[f].cells.push(t);
            }
            cells.push(Cell {
                faces: fl.clone(),
                face_orientations: orient,
                edges: es,
                vertices: vs,
                center,
                diameter,
                volume,
            });
        }

        for (f, face) in faces.iter().enumerate() {
            match face.cells.len() {
                0 => return Err(MeshError::DanglingFace(f)),
                1 | 2 => {}
                c => return Err(MeshError::OvershareFace { face: f, count: c }),
            }
        }
        let used: usize = {
            let mut u = vec![false; nv];
            for c in &cells {
                for &v in &c.vertices {
                    u[v] = true;
                }
            }
            u.iter().filter(|&&b| b).count()
        };
        if used != nv {
            return Err(MeshError::Invalid("some vertices belong to no cell".into()));
        }

        let mesh = Mesh { vertices, edges, faces, cells };
        for (f, face) in mesh.faces.iter().enumerate() {
            if face.cells.len() == 2 {
                let s = mesh.face_orientation(face.cells[0], f) + mesh.face_orientation(face.cells[1], f);
                if s != 0.0 {
                    return Err(MeshError::Invalid(format!("face {f} has inconsistent cell orientations")));
                }
            }
        }
        Ok(mesh)
    }

    pub fn from_json_slice(data: &[u8]) -> Result<Mesh, MeshError> {
        let file: MeshFile = serde_json::from_slice(data).map_err(|e| MeshError::Parse(e.to_string()))?;
        let vertices = file.vertices.iter().map(|v| Point::new(v[0], v[1], v[2])).collect();
        Mesh::from_raw(vertices, file.faces, file.cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
        let data = std::fs::read(path.as_ref())
            .map_err(|e| MeshError::Parse(format!("{}: {e}", path.as_ref().display())))?;
        Mesh::from_json_slice(&data)
    }

    pub fn to_json(&self) -> String {
        let file = MeshFile {
            vertices: self.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
            faces: self.faces.iter().map(|f| f.vertices.clone()).collect(),
            cells: self.cells.iter().map(|c| c.faces.clone()).collect(),
        };
        serde_json::to_string(&file).expect("mesh serialization")
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// omega_TF, or 0 when F is not a face of T.
    pub fn face_orientation(&self, t: usize, f: usize) -> f64 {
        let c = &self.cells[t];
        c.faces.iter().position(|&g| g == f).map_or(0.0, |i| c.face_orientations[i])
    }

    /// omega_FE, or 0 when E is not an edge of F.
    pub fn edge_orientation(&self, f: usize, e: usize) -> f64 {
        let fc = &self.faces[f];
        fc.edges.iter().position(|&g| g == e).map_or(0.0, |i| fc.edge_orientations[i])
    }

    /// n_FE = n_F x t_E.
    pub fn face_edge_normal(&self, f: usize, e: usize) -> Point {
        self.faces[f].normal.cross(&self.edges[e].tangent)
    }

    /// Maximum cell diameter.
    pub fn meshsize(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.faces[f].cells.len() == 1
    }

    /// Minimum over cells of (distance from x_T to the nearest face plane) / h_T.
    pub fn regularity(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| {
                c.faces
                    .iter()
                    .map(|&f| (self.faces[f].center - c.center).dot(&self.faces[f].normal).abs())
                    .fold(f64::INFINITY, f64::min)
                    / c.diameter
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Flips a stored omega_FE sign; used by negative controls of the verification harness.
    #[doc(hidden)]
    pub fn corrupt_edge_orientation(&mut self, f: usize, local_edge: usize) {
        self.faces[f].edge_orientations[local_edge] *= -1.0;
    }

    /// Flips a stored omega_TF sign; used by negative controls of the verification harness.
    #[doc(hidden)]
    pub fn corrupt_face_orientation(&mut self, t: usize, local_face: usize) {
        self.cells[t].face_orientations[local_face] *= -1.0;
    }
}

/// Uniform n x n x n hexahedral partition of the unit cube.
pub fn generate_cubic_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "cubic mesh needs n >= 1");
    let m = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    let mut faces = Vec::new();
    let mut xface = HashMap::new();
    let mut yface = HashMap::new();
    let mut zface = HashMap::new();
    for i in 0..m {
        for j in 0..n {
            for k in 0..n {
                xface.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]);
            }
        }
    }
    for j in 0..m {
        for k in 0..n {
            for i in 0..n {
                yface.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]);
            }
        }
    }
    for k in 0..m {
        for i in 0..n {
            for j in 0..n {
                zface.insert((i, j, k), faces.len());
                faces.push(vec![vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]);
            }
        }
    }
    let mut cells = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![
                    xface[&(i, j, k)],
                    xface[&(i + 1, j, k)],
                    yface[&(i, j, k)],
                    yface[&(i, j + 1, k)],
                    zface[&(i, j, k)],
                    zface[&(i, j, k + 1)],
                ]);
            }
        }
    }
    Mesh::from_raw(vertices, faces, cells).expect("cubic mesh is valid")
}

/// Kuhn subdivision of the n x n x n cubic grid: six tetrahedra per cube sharing its main diagonal.
pub fn generate_tet_mesh(n: usize) -> Mesh {
    assert!(n >= 1, "tetrahedral mesh needs n >= 1");
    let m = n + 1;
    let vid = |i: usize, j: usize, k: usize| i + m * (j + m * k);
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                vertices.push(Point::new(i as f64 * h, j as f64 * h, k as f64 * h));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut faces: Vec<Vec<usize>> = Vec::new();
    let mut face_of: HashMap<[usize; 3], usize> = HashMap::new();
    let mut cells = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for p in PERMS {
                    let mut c = [i, j, k];
                    let mut tv = [vid(c[0], c[1], c[2]); 4];
                    for (s, &axis) in p.iter().enumerate() {
                        c[axis] += 1;
                        tv[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    let mut cf = Vec::with_capacity(4);
                    for skip in 0..4 {
                        let tri: Vec<usize> = (0..4).filter(|&q| q != skip).map(|q| tv[q]).collect();
                        let mut key = [tri[0], tri[1], tri[2]];
                        key.sort_unstable();
                        let id = *face_of.entry(key).or_insert_with(|| {
                            faces.push(tri.clone());
                            faces.len() - 1
                        });
                        cf.push(id);
                    }
                    cells.push(cf);
                }
            }
        }
    }
    Mesh::from_raw(vertices, faces, cells).expect("tetrahedral mesh is valid")
}

fn cell_is_star_shaped(mesh: &Mesh, faces: &[usize]) -> bool {
    let mut vs: Vec<usize> = faces.iter().flat_map(|&f| mesh.faces[f].vertices.iter().copied()).collect();
    vs.sort_unstable();
    vs.dedup();
    let pts: Vec<Point> = vs.iter().map(|&v| mesh.vertices[v]).collect();
    let center = centroid(&pts);
    let diameter = diameter_of(pts.iter().copied());
    faces.iter().all(|&f| {
        let face = &mesh.faces[f];
        let w = (face.center - center).dot(&face.normal).signum();
        (0..face.vertices.len()).all(|i| {
            let a = mesh.vertices[face.vertices[i]] - center;
            let b = mesh.vertices[face.vertices[(i + 1) % face.vertices.len()]] - center;
            w * (face.center - center).dot(&a.cross(&b)) > 1e-14 * diameter.powi(3)
        })
    })
}

/// Greedily merges random face-adjacent cell pairs, deleting their shared face. Pairs whose union
/// is not star-shaped with respect to its vertex centroid are left unmerged.
pub fn agglomerate_pairs(mesh: &Mesh, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interior: Vec<usize> = (0..mesh.num_faces()).filter(|&f| mesh.faces[f].cells.len() == 2).collect();
    interior.shuffle(&mut rng);
    let mut merged = vec![false; mesh.num_cells()];
    let mut removed = vec![false; mesh.num_faces()];
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for f in interior {
        let (a, b) = (mesh.faces[f].cells[0], mesh.faces[f].cells[1]);
        if merged[a] || merged[b] {
            continue;
        }
        let shared: Vec<usize> =
            mesh.cells[a].faces.iter().copied().filter(|g| mesh.cells[b].faces.contains(g)).collect();
        let union: Vec<usize> = mesh.cells[a]
            .faces
            .iter()
            .chain(mesh.cells[b].faces.iter())
            .copied()
            .filter(|g| !shared.contains(g))
            .collect();
        if !cell_is_star_shaped(mesh, &union) {
            continue;
        }
        merged[a] = true;
        merged[b] = true;
        for g in shared {
            removed[g] = true;
        }
        pairs.push((a.min(b), a.max(b), f));
    }
    let mut new_face_id = vec![usize::MAX; mesh.num_faces()];
    let mut faces = Vec::new();
    for f in 0..mesh.num_faces() {
        if !removed[f] {
            new_face_id[f] = faces.len();
            faces.push(mesh.faces[f].vertices.clone());
        }
    }
    let partner: HashMap<usize, usize> = pairs.iter().flat_map(|&(a, b, _)| [(a, b), (b, a)]).collect();
    let mut cells = Vec::new();
    for t in 0..mesh.num_cells() {
        match partner.get(&t) {
            Some(&o) if o < t => continue,
            Some(&o) => {
                let fl = mesh.cells[t]
                    .faces
                    .iter()
                    .chain(mesh.cells[o].faces.iter())
                    .filter(|&&g| !removed[g])
                    .map(|&g| new_face_id[g])
                    .collect();
                cells.push(fl);
            }
            None => cells.push(mesh.cells[t].faces.iter().map(|&g| new_face_id[g]).collect()),
        }
    }
    Mesh::from_raw(mesh.vertices.clone(), faces, cells).expect("agglomerated mesh is valid")
}

/// Mesh source: a builtin generator spec or a JSON file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshSpec {
    Cubic(usize),
    Tet(usize),
    Agglo(usize, u64),
    File(String),
}

/// Largest builtin resolution accepted by [`MeshSpec::parse`].
pub const MAX_BUILTIN_N: usize = 64;

impl MeshSpec {
    /// Parses `builtin:cubic:N`, `builtin:tet:N`, `builtin:agglo:N:SEED` (the `builtin:` prefix is
    /// optional for these) or treats anything else as a file path.
    pub fn parse(s: &str) -> Result<MeshSpec, MeshError> {
        let body = s.strip_prefix("builtin:");
        let parts: Vec<&str> = body.unwrap_or(s).split(':').collect();
        let int = |p: &str| -> Result<usize, MeshError> {
            let n: usize = p.parse().map_err(|_| MeshError::Parse(format!("bad mesh size '{p}' in '{s}'")))?;
            if n == 0 || n > MAX_BUILTIN_N {
                return Err(MeshError::Parse(format!("mesh size must be in 1..={MAX_BUILTIN_N}, got {n}")));
            }
            Ok(n)
        };
        match parts.as_slice() {
            ["cubic", n] => Ok(MeshSpec::Cubic(int(n)?)),
            ["tet", n] => Ok(MeshSpec::Tet(int(n)?)),
            ["agglo", n, seed] => {
                let seed = seed.parse().map_err(|_| MeshError::Parse(format!("bad seed '{seed}' in '{s}'")))?;
                Ok(MeshSpec::Agglo(int(n)?, seed))
            }
            _ if body.is_some() => Err(MeshError::Parse(format!("unknown builtin mesh '{s}'"))),
            _ if s.is_empty() => Err(MeshError::Parse("empty mesh spec".into())),
            _ => Ok(MeshSpec::File(s.to_string())),
        }
    }

    pub fn build(&self) -> Result<Mesh, MeshError> {
        match self {
            MeshSpec::Cubic(n) => Ok(generate_cubic_mesh(*n)),
            MeshSpec::Tet(n) => Ok(generate_tet_mesh(*n)),
            MeshSpec::Agglo(n, seed) => Ok(agglomerate_pairs(&generate_cubic_mesh(*n), *seed)),
            MeshSpec::File(p) => Mesh::load(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_invariants(mesh: &Mesh) {
        for (f, face) in mesh.faces.iter().enumerate() {
            assert!((face.frame[0].cross(&face.frame[1]) - face.normal).norm() < 1e-14);
            for (i, &e) in face.edges.iter().enumerate() {
                let nfe = mesh.face_edge_normal(f, e);
                let t = mesh.edges[e].tangent;
                assert!((t.cross(&nfe) - face.normal).norm() < 1e-14);
                let w = face.edge_orientations[i];
                assert!((mesh.edges[e].center - face.center).dot(&(nfe * w)) > 0.0);
            }
        }
        for (t, cell) in mesh.cells.iter().enumerate() {
            let mut s = Point::zeros();
            for (i, &f) in cell.faces.iter().enumerate() {
                s += mesh.faces[f].normal * (mesh.faces[f].area * cell.face_orientations[i]);
            }
            assert!(s.norm() < 1e-12 * cell.diameter.powi(2), "cell {t}");
            // Each cell edge sits in two faces of the cell with opposite omega_TF*omega_FE.
            for &e in &cell.edges {
                let sum: f64 = cell
                    .faces
                    .iter()
                    .zip(&cell.face_orientations)
                    .map(|(&f, &w)| w * mesh.edge_orientation(f, e))
                    .sum();
                assert_eq!(sum, 0.0, "cell {t} edge {e}");
            }
        }
    }

    #[test]
    fn cubic_counts() {
        let m = generate_cubic_mesh(1);
        assert_eq!((m.num_cells(), m.num_faces(), m.num_edges(), m.num_vertices()), (1, 6, 12, 8));
        assert!(m.cells[0].face_orientations.iter().all(|w| w.abs() == 1.0));
        let m = generate_cubic_mesh(2);
        assert_eq!((m.num_cells(), m.num_faces(), m.num_edges(), m.num_vertices()), (8, 36, 54, 27));
        check_invariants(&m);
        for n in [3usize, 5] {
            let m = generate_cubic_mesh(n);
            assert_eq!(m.num_faces(), 3 * n * n * (n + 1));
            assert_eq!(m.num_edges(), 3 * n * (n + 1) * (n + 1));
        }
    }

    #[test]
    fn cubic_16_counts() {
        let m = generate_cubic_mesh(16);
        assert_eq!((m.num_cells(), m.num_faces(), m.num_edges()), (4096, 13056, 13872));
    }

    #[test]
    fn meshsize_halves() {
        let a = generate_cubic_mesh(2).meshsize();
        let b = generate_cubic_mesh(4).meshsize();
        assert_eq!(a, 2.0 * b);
    }

    #[test]
    fn tet_counts_and_invariants() {
        let m = generate_tet_mesh(1);
        assert_eq!(m.num_cells(), 6);
        let diag = m.edges.iter().position(|e| e.vertices == [0, 7]).unwrap();
        for c in &m.cells {
            assert!(c.edges.contains(&diag));
            assert!((c.volume - 1.0 / 6.0).abs() < 1e-15);
        }
        let m = generate_tet_mesh(2);
        assert_eq!(m.num_cells(), 48);
        check_invariants(&m);
        let total: f64 = m.cells.iter().map(|c| c.volume).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn agglomeration() {
        let m = agglomerate_pairs(&generate_cubic_mesh(2), 0);
        assert!((4..=8).contains(&m.num_cells()));
        check_invariants(&m);
        assert!(m.cells.iter().any(|c| c.faces.len() == 10));
        let total: f64 = m.cells.iter().map(|c| c.volume).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let one = agglomerate_pairs(&generate_cubic_mesh(1), 3);
        assert_eq!(one.num_cells(), 1);
        assert_eq!(one.num_faces(), 6);
        let tets = agglomerate_pairs(&generate_tet_mesh(1), 1);
        assert!(tets.num_cells() < 6);
        check_invariants(&tets);
        let again = agglomerate_pairs(&generate_cubic_mesh(2), 0);
        assert_eq!(again.to_json(), m.to_json());
    }

    #[test]
    fn json_round_trip() {
        let m = generate_cubic_mesh(1);
        let back = Mesh::from_json_slice(m.to_json().as_bytes()).unwrap();
        assert_eq!(back.num_edges(), 12);
        assert!(back.cells[0].face_orientations.iter().all(|w| w.abs() == 1.0));
    }

    #[test]
    fn json_rejects_bad_meshes() {
        let m = generate_cubic_mesh(1);
        let mut file: MeshFile = serde_json::from_str(&m.to_json()).unwrap();
        let lifted = file.faces[0][3];
        file.vertices[lifted][0] += 1e-3;
        let err = Mesh::from_json_slice(serde_json::to_string(&file).unwrap().as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::NonPlanarFace { .. }), "{err}");

        let mut file: MeshFile = serde_json::from_str(&m.to_json()).unwrap();
        file.cells[0].pop();
        let err = Mesh::from_json_slice(serde_json::to_string(&file).unwrap().as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::OpenCell { cell: 0, .. }), "{err}");

        let mut file: MeshFile = serde_json::from_str(&m.to_json()).unwrap();
        file.faces.push(vec![0, 1, 2]);
        let err = Mesh::from_json_slice(serde_json::to_string(&file).unwrap().as_bytes()).unwrap_err();
        assert!(matches!(err, MeshError::DanglingFace(6) | MeshError::NotStarShaped { .. }), "{err}");

        assert!(matches!(Mesh::from_json_slice(b"{"), Err(MeshError::Parse(_))));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(MeshSpec::parse("builtin:cubic:2").unwrap(), MeshSpec::Cubic(2));
        assert_eq!(MeshSpec::parse("tet:1").unwrap(), MeshSpec::Tet(1));
        assert_eq!(MeshSpec::parse("builtin:agglo:2:7").unwrap(), MeshSpec::Agglo(2, 7));
        assert_eq!(MeshSpec::parse("mesh.json").unwrap(), MeshSpec::File("mesh.json".into()));
        assert!(MeshSpec::parse("builtin:cubic:0").is_err());
        assert!(MeshSpec::parse("builtin:sphere:2").is_err());
        assert!(MeshSpec::parse("cubic:x").is_err());
    }
}
