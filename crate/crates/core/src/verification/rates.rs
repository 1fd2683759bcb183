//! Convergence-rate checks over mesh sequences (primal consistency, adjoint consistency) and
//! discrete Poincare constants.

use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use super::{CheckReport, TrigScalar, TrigVector, DENSE_LIMIT, SLOPE_TOL};
use crate::ddr::{DDRCore, Sampler, ScalarFn, SpaceKind, VectorFn};
use crate::mesh::{Entity, Mesh, Point};
use crate::poly::Tab;
use crate::polyspaces::PolyBasis;
use crate::products::{Products, Stabilization};
use crate::scheme::{manufactured, rate};

/// Seed of the fixed smooth fields used by the rate checks.
const FIELD_SEED: u64 = 20;

/// Squared L2 error on a rule between `coeffs` (one column) in `basis` and sampled exact values.
fn sq_err(basis: &PolyBasis, coeffs: &DMatrix<f64>, pts: &[Point], w: &[f64], exact: &Tab) -> f64 {
    let t = basis.family.tabulate(pts);
    let mut s = 0.0;
    for (c, v) in t.vals.iter().enumerate() {
        let approx = coeffs.transpose() * v;
        for q in 0..w.len() {
            s += w[q] * (approx[(0, q)] - exact.vals[c][(0, q)]).powi(2);
        }
    }
    s
}

/// Moments int_T f . basis_i of a sampled field (one member) against a cell basis.
fn moments(basis: &PolyBasis, pts: &[Point], w: &[f64], f: &Tab) -> DVector<f64> {
    let g = basis.family.tabulate(pts).gram(f, w);
    DVector::from_column_slice(g.column(0).as_slice())
}

/// Fits the rate on the finest consecutive pair of levels and checks it against `expected`.
fn rate_check(rep: &mut CheckReport, key: &str, h: &[f64], e: &[f64], expected: f64) {
    for (l, v) in e.iter().enumerate() {
        rep.metric(format!("{key} [level {l}]"), *v);
    }
    let n = h.len();
    let slope = rate(h[n - 2], e[n - 2], h[n - 1], e[n - 1]);
    rep.at_least(&format!("{key} slope"), slope, expected - SLOPE_TOL, || format!("between levels {} and {}", n - 2, n - 1));
}

/// Errors of the potentials, operators and stabilizations applied to interpolates of fixed smooth
/// fields, on one mesh.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PrimalErrors {
    pub p_grad: f64,
    pub p_curl: f64,
    pub p_div: f64,
    pub c_t: f64,
    pub d_t: f64,
    pub s_grad: f64,
    pub s_curl: f64,
    pub s_div: f64,
}

pub fn primal_errors(core: &DDRCore, products: &Products) -> PrimalErrors {
    let q = TrigScalar::random(FIELD_SEED, 2, 2.0);
    let v = TrigVector::random(FIELD_SEED + 1, 2, 2.0);
    let w = TrigVector::random(FIELD_SEED + 2, 2, 2.0);
    let parts: Vec<[f64; 8]> = (0..core.mesh.num_cells())
        .into_par_iter()
        .map(|t| {
            let c = &core.cells[t];
            let cell = Entity::Cell(t);
            let rule = core.interpolation_rule(cell);
            let (pts, wt) = (&rule.points, &rule.weights);
            let cp = &products.cells[t];
            let iq = core.interpolate_local(SpaceKind::Grad, cell, &q);
            let iv = core.interpolate_local(SpaceKind::Curl, cell, &v);
            let iw = core.interpolate_local(SpaceKind::Div, cell, &w);
            [
                sq_err(&c.p_kp1, &(&c.pgrad * &iq), pts, wt, &q.sample(pts)),
                sq_err(&c.vp_k, &(&c.pcurl * &iv), pts, wt, &v.sample(pts)),
                sq_err(&c.vp_k, &(&c.pdiv * &iw), pts, wt, &w.sample(pts)),
                sq_err(&c.vp_k, &(&c.curl * &iv), pts, wt, &v.curl_sampler().sample(pts)),
                sq_err(&c.p_k, &(&c.div * &iw), pts, wt, &w.div_sampler().sample(pts)),
                (iq.transpose() * &cp.stab_grad * &iq)[(0, 0)],
                (iv.transpose() * &cp.stab_curl * &iv)[(0, 0)],
                (iw.transpose() * &cp.stab_div * &iw)[(0, 0)],
            ]
        })
        .collect();
    let mut s = [0.0; 8];
    for p in &parts {
        for i in 0..8 {
            s[i] += p[i];
        }
    }
    let r = s.map(|x| x.max(0.0).sqrt());
    PrimalErrors { p_grad: r[0], p_curl: r[1], p_div: r[2], c_t: r[3], d_t: r[4], s_grad: r[5], s_curl: r[6], s_div: r[7] }
}

/// Rates of the primal consistency errors on a sequence of refined meshes (at least two).
pub fn check_primal_consistency(meshes: &[Mesh], k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("primal consistency (k={k}, {} levels)", meshes.len()));
    let kf = k as f64;
    let mut h = vec![];
    let mut errs = vec![];
    for (l, mesh) in meshes.iter().enumerate() {
        match DDRCore::new(mesh, k) {
            Ok(core) => {
                let products = Products::new(&core, Stabilization::Trace);
                h.push(mesh.meshsize());
                errs.push(primal_errors(&core, &products));
            }
            Err(e) => {
                rep.fail(format!("level {l}: {e}"));
                return rep;
            }
        }
    }
    if h.len() < 2 {
        rep.fail("at least two levels are needed to fit a rate");
        return rep;
    }
    let col = |f: fn(&PrimalErrors) -> f64| errs.iter().map(f).collect::<Vec<f64>>();
    rate_check(&mut rep, "|P_grad I q - q|", &h, &col(|e| e.p_grad), kf + 2.0);
    rate_check(&mut rep, "|P_curl I v - v|", &h, &col(|e| e.p_curl), kf + 1.0);
    rate_check(&mut rep, "|P_div I w - w|", &h, &col(|e| e.p_div), kf + 1.0);
    rate_check(&mut rep, "|C_T I v - curl v|", &h, &col(|e| e.c_t), kf + 1.0);
    rate_check(&mut rep, "|D_T I w - div w|", &h, &col(|e| e.d_t), kf + 1.0);
    rate_check(&mut rep, "s_grad(I q, I q)^1/2", &h, &col(|e| e.s_grad), kf + 2.0);
    rate_check(&mut rep, "s_curl(I v, I v)^1/2", &h, &col(|e| e.s_curl), kf + 1.0);
    rate_check(&mut rep, "s_div(I w, I w)^1/2", &h, &col(|e| e.s_div), kf + 1.0);
    rep
}

/// Exponents of the normal-free field, chosen without symmetries of the unit cube.
const NORMAL_FREE_EXP: [[f64; 3]; 3] = [[0.3, 0.7, -0.4], [-0.5, 0.2, 0.6], [0.4, -0.3, 0.5]];

/// A field in H0(div) on the unit cube with nonzero divergence: v_i = sin(pi x_i) exp(a_i . x).
fn normal_free(p: &Point) -> Vector3<f64> {
    use std::f64::consts::PI;
    Vector3::from_fn(|i, _| (PI * p[i]).sin() * Vector3::from(NORMAL_FREE_EXP[i]).dot(p).exp())
}

fn normal_free_div(p: &Point) -> f64 {
    use std::f64::consts::PI;
    (0..3)
        .map(|i| {
            let a = NORMAL_FREE_EXP[i];
            (PI * (PI * p[i]).cos() + a[i] * (PI * p[i]).sin()) * Vector3::from(a).dot(p).exp()
        })
        .sum()
}

/// Normalized adjoint consistency errors on one mesh: (E_grad, E_curl, E_div). The continuous
/// arguments are a normal-free field, the manufactured potential and the manufactured scalar
/// factor; the discrete ones are interpolates of a trigonometric scalar, the manufactured field
/// and the normal-free field.
pub fn adjoint_errors(core: &DDRCore, products: &Products) -> [f64; 3] {
    let mesh = core.mesh;
    let q = TrigScalar::random(FIELD_SEED + 3, 2, 2.0);
    let iq = core.interpolate(SpaceKind::Grad, &q);
    let ih = core.interpolate(SpaceKind::Curl, &VectorFn(manufactured::field));
    let ib = core.interpolate(SpaceKind::Div, &VectorFn(normal_free));
    let uc = core.global_curl();
    let parts: Vec<[f64; 3]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|t| {
            let c = &core.cells[t];
            let cp = &products.cells[t];
            let cell = Entity::Cell(t);
            let rule = core.interpolation_rule(cell);
            let (pts, wt) = (&rule.points, &rule.weights);

            let qt = DDRCore::restrict(&iq, &c.grad_dofs);
            let ivt = core.interpolate_local(SpaceKind::Curl, cell, &VectorFn(normal_free)).column(0).into_owned();
            let div_v = ScalarFn(normal_free_div).sample(pts);
            let e_grad = ivt.dot(&(&cp.curl * (core.local_grad(t) * &qt)))
                + moments(&c.p_kp1, pts, wt, &div_v).dot(&(&c.pgrad * &qt));

            let ht = DDRCore::restrict(&ih, &c.curl_dofs);
            let iwt = core.interpolate_local(SpaceKind::Div, cell, &VectorFn(manufactured::potential)).column(0).into_owned();
            let curl_w = VectorFn(manufactured::field).sample(pts);
            let e_curl = iwt.dot(&(&cp.div * (core.local_curl(t) * &ht))) - moments(&c.vp_k, pts, wt, &curl_w).dot(&(&c.pcurl * &ht));

            let at = DDRCore::restrict(&ib, &c.div_dofs);
            let pq = core.components(SpaceKind::L2, cell, &ScalarFn(manufactured::w)).column(0).into_owned();
            let grad_q = VectorFn(manufactured::grad_w).sample(pts);
            let e_div = pq.dot(&(&c.div * &at)) + moments(&c.vp_k, pts, wt, &grad_q).dot(&(&c.pdiv * &at));
            [e_grad, e_curl, e_div]
        })
        .collect();
    let mut e = [0.0; 3];
    for p in &parts {
        for i in 0..3 {
            e[i] += p[i];
        }
    }
    let n_grad = products.l2_norm(core, SpaceKind::Curl, &core.global_grad().mul_vec(&iq));
    let n_curl = products.l2_norm(core, SpaceKind::Curl, &ih) + products.l2_norm(core, SpaceKind::Div, &uc.mul_vec(&ih));
    let n_div = products.l2_norm(core, SpaceKind::Div, &ib);
    [e[0].abs() / n_grad, e[1].abs() / n_curl, e[2].abs() / n_div]
}

/// Decay of the adjoint consistency errors on a sequence of refined unit-cube meshes.
pub fn check_adjoint_decay(meshes: &[Mesh], k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("adjoint consistency (k={k}, {} levels)", meshes.len()));
    let mut h = vec![];
    let mut errs = vec![];
    for (l, mesh) in meshes.iter().enumerate() {
        match DDRCore::new(mesh, k) {
            Ok(core) => {
                let products = Products::new(&core, Stabilization::Trace);
                h.push(mesh.meshsize());
                errs.push(adjoint_errors(&core, &products));
            }
            Err(e) => {
                rep.fail(format!("level {l}: {e}"));
                return rep;
            }
        }
    }
    if h.len() < 2 {
        rep.fail("at least two levels are needed to fit a rate");
        return rep;
    }
    let expected = k as f64 + 1.0;
    for (i, key) in ["E_grad", "E_curl", "E_div"].iter().enumerate() {
        let e: Vec<f64> = errs.iter().map(|x| x[i]).collect();
        rate_check(&mut rep, key, &h, &e, expected);
    }
    rep
}

/// Upper bound on the discrete Poincare constants checked by the harness.
pub const POINCARE_BOUND: f64 = 50.0;
/// Largest admissible growth of a Poincare constant between two refinement levels.
pub const POINCARE_RATIO: f64 = 1.5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_free_field_has_the_stated_divergence_and_boundary_values() {
        let p = Point::new(0.3, 0.55, 0.8);
        let h = 1e-5;
        let fd: f64 = (0..3)
            .map(|i| {
                let e = Vector3::from_fn(|r, _| if r == i { h } else { 0.0 });
                (normal_free(&(p + e))[i] - normal_free(&(p - e))[i]) / (2.0 * h)
            })
            .sum();
        assert!((fd - normal_free_div(&p)).abs() < 1e-7);
        for i in 0..3 {
            for side in [0.0, 1.0] {
                let mut q = p;
                q[i] = side;
                assert!(normal_free(&q)[i].abs() < 1e-14);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoincareConstants {
    pub grad: f64,
    pub curl: f64,
    pub div: f64,
    /// Zero eigenvalues found for the curl and div problems.
    pub kernel_curl: usize,
    pub kernel_div: usize,
}

/// Eigenvalues of K x = lambda N x for symmetric K and SPD N, ascending.
fn generalized_eigenvalues(k: &DMatrix<f64>, n: &DMatrix<f64>) -> Option<Vec<f64>> {
    if n.is_empty() {
        return Some(vec![]);
    }
    let l = n.clone().cholesky()?.l();
    let li = l.try_inverse()?;
    let m = &li * k * li.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some(ev)
}

/// Smallest eigenvalue above the relative zero threshold, and the number below it.
fn smallest_nonzero(ev: &[f64]) -> (f64, usize) {
    let top = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zeros = ev.iter().filter(|v| v.abs() <= 1e-10 * top).count();
    (ev.get(zeros).copied().unwrap_or(f64::NAN), zeros)
}

/// Ratios |||x||| / |||d x||| maximized over the complements of the kernels, in component norms.
/// The grad constant uses the constraint sum_T int_T P_grad q = 0.
pub fn poincare_constants(core: &DDRCore) -> Result<PoincareConstants, String> {
    let total = core.grad_space.dim + core.curl_space.dim + core.div_space.dim;
    if total > DENSE_LIMIT {
        return Err(format!("{total} DOFs exceed the dense limit {DENSE_LIMIT}"));
    }
    let products = Products::new(core, Stabilization::Trace);
    let norm = |kind| products.assemble(core, kind, |c| c.component_norm(kind), |_| 1.0).to_dense();
    let (ng, nc, nd) = (norm(SpaceKind::Grad), norm(SpaceKind::Curl), norm(SpaceKind::Div));
    let (g, c, d) = (core.global_grad().to_dense(), core.global_curl().to_dense(), core.global_div().to_dense());

    let mut mean = DMatrix::<f64>::zeros(1, core.grad_space.dim);
    for cell in &core.cells {
        let ints = cell.p_kp1.tabulate(&cell.rule).vals[0].clone() * DVector::from_column_slice(&cell.rule.weights);
        let row = ints.transpose() * &cell.pgrad;
        for (j, &dof) in cell.grad_dofs.iter().enumerate() {
            mean[(0, dof)] += row[(0, j)];
        }
    }
    // Basis of the constraint's null space: eliminate the entry of largest magnitude.
    let n = mean.ncols();
    let j = mean.iamax_full().1;
    let mut z = DMatrix::zeros(n, n - 1);
    for (col, i) in (0..n).filter(|&i| i != j).enumerate() {
        z[(i, col)] = 1.0;
        z[(j, col)] = -mean[(0, i)] / mean[(0, j)];
    }
    let kz = z.transpose() * g.transpose() * &nc * &g * &z;
    let nz = z.transpose() * &ng * &z;
    let ev = generalized_eigenvalues(&kz, &nz).ok_or("grad norm matrix is not positive definite")?;
    let lg = ev.first().copied().unwrap_or(f64::NAN);

    let ev = generalized_eigenvalues(&(c.transpose() * &nd * &c), &nc).ok_or("curl norm matrix is not positive definite")?;
    let (lc, kernel_curl) = smallest_nonzero(&ev);
    let ev = generalized_eigenvalues(&(d.transpose() * &d), &nd).ok_or("div norm matrix is not positive definite")?;
    let (ld, kernel_div) = smallest_nonzero(&ev);
    Ok(PoincareConstants { grad: 1.0 / lg.sqrt(), curl: 1.0 / lc.sqrt(), div: 1.0 / ld.sqrt(), kernel_curl, kernel_div })
}

/// Poincare constants on one mesh: finite, below the bound, with the kernel dimensions of an
/// exact complex.
pub fn check_poincare(mesh: &Mesh, k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("poincare (k={k})"));
    let core = match DDRCore::new(mesh, k) {
        Ok(c) => c,
        Err(e) => {
            rep.fail(e.to_string());
            return rep;
        }
    };
    let pc = match poincare_constants(&core) {
        Ok(p) => p,
        Err(e) => {
            rep.fail(e);
            return rep;
        }
    };
    for (key, v) in [("C_grad", pc.grad), ("C_curl", pc.curl), ("C_div", pc.div)] {
        rep.below(key, v, POINCARE_BOUND, || "is not a bounded finite constant".into());
    }
    let expected_curl = core.grad_space.dim - 1;
    rep.metric("kernel dim curl", pc.kernel_curl as f64);
    rep.metric("kernel dim div", pc.kernel_div as f64);
    if pc.kernel_curl != expected_curl {
        rep.fail(format!("curl kernel has dimension {}, expected rank(uG) = {expected_curl}", pc.kernel_curl));
    }
    let expected_div = core.curl_space.dim - pc.kernel_curl;
    if pc.kernel_div != expected_div {
        rep.fail(format!("div kernel has dimension {}, expected rank(uC) = {expected_div}", pc.kernel_div));
    }
    rep
}

/// Poincare constants on consecutive refinement levels, with bounded growth.
pub fn check_poincare_levels(meshes: &[Mesh], k: usize) -> CheckReport {
    let mut rep = CheckReport::new(format!("poincare (k={k}, {} levels)", meshes.len()));
    let mut prev: Option<[f64; 3]> = None;
    for (l, mesh) in meshes.iter().enumerate() {
        let r = check_poincare(mesh, k);
        let cur = ["C_grad", "C_curl", "C_div"].map(|key| r.metrics.get(key).copied().unwrap_or(f64::NAN));
        rep.absorb(&format!("level {l}"), r);
        if let Some(p) = prev {
            for (i, key) in ["C_grad", "C_curl", "C_div"].iter().enumerate() {
                rep.at_most(&format!("{key} ratio level {l}/{}", l - 1), cur[i] / p[i], POINCARE_RATIO, || format!("at level {l}"));
            }
        }
        prev = Some(cur);
    }
    rep
}
