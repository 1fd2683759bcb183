//! Magnetostatics on the DDR complex: mu H - curl A = 0, curl H = J, div A = 0 with A x n = 0,
//! discretized as a saddle-point system over the curl and div spaces.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::ddr::{DDRCore, DdrError, SpaceKind, VectorFn};
use crate::mesh::{Mesh, Point};
use crate::products::{Products, Stabilization};
use crate::sparse::{sparse_lu_solve, Csr, SolveError};

pub type Field = dyn Fn(&Point) -> Vector3<f64> + Sync;

pub struct MagnetostaticsProblem<'a> {
    /// Permeability per cell.
    pub mu: Vec<f64>,
    pub source: &'a Field,
}

pub struct SparseSystem {
    pub matrix: Csr,
    pub rhs: DVector<f64>,
    pub dim_curl: usize,
    pub dim_div: usize,
}

pub struct Solution {
    pub h: DVector<f64>,
    pub a: DVector<f64>,
    /// ||M x - r|| / ||r|| (0 for a zero right-hand side).
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorNorms {
    pub e_curl: f64,
    pub e_div: f64,
    pub e_rel: f64,
}

/// The manufactured solution on (0,1)^3 built from w = sin^2(pi x) sin^2(pi y) sin(pi z), with
/// A = (d_y w, -d_x w, 0), H = curl A and J = curl H (mu = 1).
pub mod manufactured {
    use super::*;

    fn a0(t: f64) -> f64 {
        (PI * t).sin().powi(2)
    }
    fn a1(t: f64) -> f64 {
        PI * (2.0 * PI * t).sin()
    }
    fn a2(t: f64) -> f64 {
        2.0 * PI * PI * (2.0 * PI * t).cos()
    }
    fn a3(t: f64) -> f64 {
        -4.0 * PI.powi(3) * (2.0 * PI * t).sin()
    }
    fn b0(z: f64) -> f64 {
        (PI * z).sin()
    }
    fn b1(z: f64) -> f64 {
        PI * (PI * z).cos()
    }
    fn b2(z: f64) -> f64 {
        -PI * PI * (PI * z).sin()
    }

    pub fn w(p: &Point) -> f64 {
        a0(p.x) * a0(p.y) * b0(p.z)
    }

    pub fn grad_w(p: &Point) -> Vector3<f64> {
        Vector3::new(a1(p.x) * a0(p.y) * b0(p.z), a0(p.x) * a1(p.y) * b0(p.z), a0(p.x) * a0(p.y) * b1(p.z))
    }

    pub fn potential(p: &Point) -> Vector3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        Vector3::new(a0(x) * a1(y) * b0(z), -a1(x) * a0(y) * b0(z), 0.0)
    }

    pub fn field(p: &Point) -> Vector3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        Vector3::new(
            a1(x) * a0(y) * b1(z),
            a0(x) * a1(y) * b1(z),
            -(a2(x) * a0(y) + a0(x) * a2(y)) * b0(z),
        )
    }

    pub fn current(p: &Point) -> Vector3<f64> {
        let (x, y, z) = (p.x, p.y, p.z);
        Vector3::new(
            -a2(x) * a1(y) * b0(z) - a0(x) * a3(y) * b0(z) - a0(x) * a1(y) * b2(z),
            a1(x) * a0(y) * b2(z) + a3(x) * a0(y) * b0(z) + a1(x) * a2(y) * b0(z),
            0.0,
        )
    }
}

/// Rhs entries sum_T int_T J . P_div v_T over the div space, with the interpolation rule.
pub fn source_vector(core: &DDRCore, source: &Field) -> DVector<f64> {
    let parts: Vec<(usize, DVector<f64>)> = (0..core.mesh.num_cells())
        .into_par_iter()
        .map(|t| {
            let c = &core.cells[t];
            let rule = core.interpolation_rule(crate::mesh::Entity::Cell(t));
            let tab = c.vp_k.tabulate(&rule);
            let mut proj = DVector::zeros(c.vp_k.dim());
            for (q, (p, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
                let j = source(p);
                for comp in 0..3 {
                    proj.axpy(w * j[comp], &tab.vals[comp].column(q), 1.0);
                }
            }
            (t, c.pdiv.transpose() * proj)
        })
        .collect();
    let mut rhs = DVector::zeros(core.div_space.dim);
    for (t, b) in parts {
        for (i, &d) in core.cells[t].div_dofs.iter().enumerate() {
            rhs[d] += b[i];
        }
    }
    rhs
}

/// Block system [[A, -B^T], [B, C]] with A = sum mu_T M_curl, B = M_div uC, C = D^T D.
pub fn assemble(core: &DDRCore, products: &Products, problem: &MagnetostaticsProblem) -> SparseSystem {
    let (nc, nd) = (core.curl_space.dim, core.div_space.dim);
    let a = products.assemble(core, SpaceKind::Curl, |c| &c.curl, |t| problem.mu[t]);
    let mdiv = products.assemble(core, SpaceKind::Div, |c| &c.div, |_| 1.0);
    let b = mdiv.mul(&core.global_curl());
    let d = core.global_div();
    let c = d.transpose().mul(&d);
    let mut trips = a.triplets();
    for (r, col, v) in b.triplets() {
        trips.push((nc + r, col, v));
        trips.push((col, nc + r, -v));
    }
    trips.extend(c.triplets().into_iter().map(|(r, col, v)| (nc + r, nc + col, v)));
    let mut rhs = DVector::zeros(nc + nd);
    rhs.rows_mut(nc, nd).copy_from(&source_vector(core, problem.source));
    SparseSystem { matrix: Csr::from_triplets(nc + nd, nc + nd, trips), rhs, dim_curl: nc, dim_div: nd }
}

pub fn solve(system: &SparseSystem) -> Result<Solution, SolveError> {
    let x = sparse_lu_solve(&system.matrix, &system.rhs)?;
    let rn = system.rhs.norm();
    let residual = if rn == 0.0 { (system.matrix.mul_vec(&x)).norm() } else { (system.matrix.mul_vec(&x) - &system.rhs).norm() / rn };
    Ok(Solution {
        h: x.rows(0, system.dim_curl).into_owned(),
        a: x.rows(system.dim_curl, system.dim_div).into_owned(),
        residual,
    })
}

/// Graph-norm errors against the interpolates of the exact fields and the relative error
/// sqrt(e_curl^2 + e_div^2) / sqrt(|I H|^2 + |I A|^2).
pub fn error_norms(
    core: &DDRCore,
    products: &Products,
    mu: &[f64],
    sol: &Solution,
    exact_h: &Field,
    exact_a: &Field,
) -> ErrorNorms {
    let ih = core.interpolate(SpaceKind::Curl, &VectorFn(exact_h));
    let ia = core.interpolate(SpaceKind::Div, &VectorFn(exact_a));
    let uc = core.global_curl();
    let d = core.global_div();
    let e_curl = products.graph_norm_curl(core, mu, &uc, &(&sol.h - &ih));
    let e_div = products.graph_norm_div(core, &d, &(&sol.a - &ia));
    let n_h = products.graph_norm_curl(core, mu, &uc, &ih);
    let n_a = products.graph_norm_div(core, &d, &ia);
    ErrorNorms { e_curl, e_div, e_rel: (e_curl.powi(2) + e_div.powi(2)).sqrt() / (n_h.powi(2) + n_a.powi(2)).sqrt() }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub bases: f64,
    pub model: f64,
    pub solve: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub num_cells: usize,
    pub mesh_size: f64,
    pub dim_xcurl: usize,
    pub dim_xdiv: usize,
    pub residual: f64,
    pub errors: ErrorNorms,
    #[serde(skip)]
    pub timings: Timings,
}

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    #[error(transparent)]
    Ddr(#[from] DdrError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Builds the complex, assembles and solves the manufactured problem with mu = 1.
pub fn run_manufactured(mesh: &Mesh, k: usize) -> Result<RunReport, SchemeError> {
    let t0 = Instant::now();
    let core = DDRCore::new(mesh, k)?;
    let t1 = Instant::now();
    let products = Products::new(&core, Stabilization::Trace);
    let mu = vec![1.0; mesh.num_cells()];
    let problem = MagnetostaticsProblem { mu: mu.clone(), source: &manufactured::current };
    let system = assemble(&core, &products, &problem);
    let t2 = Instant::now();
    let sol = solve(&system)?;
    let t3 = Instant::now();
    let errors = error_norms(&core, &products, &mu, &sol, &manufactured::field, &manufactured::potential);
    Ok(RunReport {
        num_cells: mesh.num_cells(),
        mesh_size: mesh.meshsize(),
        dim_xcurl: system.dim_curl,
        dim_xdiv: system.dim_div,
        residual: sol.residual,
        errors,
        timings: Timings {
            bases: (t1 - t0).as_secs_f64(),
            model: (t2 - t1).as_secs_f64(),
            solve: (t3 - t2).as_secs_f64(),
        },
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub family: String,
    pub level: usize,
    pub degree: usize,
    pub report: RunReport,
    pub rate: Option<f64>,
}

/// Slope of log(e) against log(h) between two levels.
pub fn rate(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).ln() / (h0 / h1).ln()
}

/// Fills in the rates between consecutive levels of the same degree.
pub fn with_rates(mut rows: Vec<ConvergenceRow>) -> Vec<ConvergenceRow> {
    for i in 1..rows.len() {
        let (p, c) = (&rows[i - 1], &rows[i]);
        if p.degree == c.degree && p.family == c.family {
            let r = rate(p.report.mesh_size, p.report.errors.e_rel, c.report.mesh_size, c.report.errors.e_rel);
            rows[i].rate = Some(r);
        }
    }
    rows
}

pub const CSV_HEADER: &str = "mesh_family,level,mesh_size_h,num_cells,dim_xcurl,dim_xdiv,err_hcurl_hdiv_rel,rate,degree";

pub fn to_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let rate = r.rate.map(|v| format!("{v:.6}")).unwrap_or_default();
        writeln!(
            s,
            "{},{},{:.10e},{},{},{},{:.10e},{},{}",
            r.family, r.level, r.report.mesh_size, r.report.num_cells, r.report.dim_xcurl, r.report.dim_xdiv, r.report.errors.e_rel, rate, r.degree
        )
        .unwrap();
    }
    s
}

/// Dense copy of the upper-left block, for small diagnostic checks.
pub fn curl_block(system: &SparseSystem) -> DMatrix<f64> {
    let full = system.matrix.to_dense();
    full.view((0, 0), (system.dim_curl, system.dim_curl)).into_owned()
}
