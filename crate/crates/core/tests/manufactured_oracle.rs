//! The manufactured magnetostatics solution checked against derivatives computed by nested
//! forward-mode dual numbers, independent of the hand-written formulas.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg};

use nalgebra::Vector3;
use polyddr::scheme::manufactured;

trait Num: Copy + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self> {
    fn cst(c: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Num for f64 {
    fn cst(c: f64) -> f64 {
        c
    }
    fn sin(self) -> f64 {
        f64::sin(self)
    }
    fn cos(self) -> f64 {
        f64::cos(self)
    }
}

/// Value and gradient in R^3.
#[derive(Clone, Copy)]
struct Dual<T> {
    v: T,
    d: [T; 3],
}

impl<T: Num> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { v: self.v + o.v, d: [0, 1, 2].map(|i| self.d[i] + o.d[i]) }
    }
}

impl<T: Num> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { v: self.v * o.v, d: [0, 1, 2].map(|i| self.d[i] * o.v + self.v * o.d[i]) }
    }
}

impl<T: Num> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { v: -self.v, d: self.d.map(|x| -x) }
    }
}

impl<T: Num> Num for Dual<T> {
    fn cst(c: f64) -> Self {
        Dual { v: T::cst(c), d: [T::cst(0.0); 3] }
    }
    fn sin(self) -> Self {
        let c = self.v.cos();
        Dual { v: self.v.sin(), d: self.d.map(|x| c * x) }
    }
    fn cos(self) -> Self {
        let s = -self.v.sin();
        Dual { v: self.v.cos(), d: self.d.map(|x| s * x) }
    }
}

trait Var: Num {
    fn var(p: &Vector3<f64>, i: usize) -> Self;
}

impl Var for f64 {
    fn var(p: &Vector3<f64>, i: usize) -> f64 {
        p[i]
    }
}

impl<T: Var> Var for Dual<T> {
    fn var(p: &Vector3<f64>, i: usize) -> Self {
        Dual { v: T::var(p, i), d: [0, 1, 2].map(|j| T::cst(if i == j { 1.0 } else { 0.0 })) }
    }
}

type D3 = Dual<Dual<Dual<f64>>>;
type D2 = Dual<Dual<f64>>;

fn w<T: Var>(p: &Vector3<f64>) -> T {
    let s = |i: usize| (T::cst(PI) * T::var(p, i)).sin();
    s(0) * s(0) * s(1) * s(1) * s(2)
}

/// A = (d_y w, -d_x w, 0) as second-order jets.
fn potential_jet(p: &Vector3<f64>) -> [D2; 3] {
    let w: D3 = w(p);
    [w.d[1], -w.d[0], D2::cst(0.0)]
}

/// d_j of component i, and d_k d_j of component i.
fn d1(a: &[D2; 3], i: usize, j: usize) -> f64 {
    a[i].d[j].v
}
fn d2(a: &[D2; 3], i: usize, j: usize, k: usize) -> f64 {
    a[i].d[j].d[k]
}

fn curl(a: &[D2; 3]) -> Vector3<f64> {
    Vector3::new(d1(a, 2, 1) - d1(a, 1, 2), d1(a, 0, 2) - d1(a, 2, 0), d1(a, 1, 0) - d1(a, 0, 1))
}

/// grad div A - Laplacian A.
fn curl_curl(a: &[D2; 3]) -> Vector3<f64> {
    Vector3::from_fn(|i, _| (0..3).map(|j| d2(a, j, j, i) - d2(a, i, j, j)).sum())
}

fn samples() -> Vec<Vector3<f64>> {
    let mut pts = vec![];
    for a in [0.07, 0.31, 0.5, 0.77] {
        for b in [0.13, 0.5, 0.91] {
            for c in [0.02, 0.44, 0.68] {
                pts.push(Vector3::new(a, b, c));
            }
        }
    }
    pts
}

fn close(a: Vector3<f64>, b: Vector3<f64>) -> bool {
    (a - b).norm() <= 1e-11 * (1.0 + b.norm())
}

#[test]
fn potential_and_scalar_match_the_dual_oracle() {
    for p in samples() {
        let wj: D3 = w(&p);
        assert!((manufactured::w(&p) - wj.v.v.v).abs() < 1e-14);
        let g = Vector3::new(wj.d[0].v.v, wj.d[1].v.v, wj.d[2].v.v);
        assert!(close(manufactured::grad_w(&p), g), "{p}");
        let a = potential_jet(&p);
        assert!(close(manufactured::potential(&p), Vector3::new(a[0].v.v, a[1].v.v, a[2].v.v)), "{p}");
    }
}

#[test]
fn field_is_the_curl_of_the_potential() {
    for p in samples() {
        assert!(close(manufactured::field(&p), curl(&potential_jet(&p))), "{p}");
    }
}

#[test]
fn current_is_the_curl_of_the_field() {
    for p in samples() {
        let a = potential_jet(&p);
        let div: f64 = (0..3).map(|i| d1(&a, i, i)).sum();
        assert!(div.abs() < 1e-12, "div A = {div:e} at {p}");
        assert!(close(manufactured::current(&p), curl_curl(&a)), "{p}");
    }
}

#[test]
fn potential_has_vanishing_tangential_trace_and_is_zero_at_the_centre() {
    let c = Vector3::new(0.5, 0.5, 0.5);
    assert!(manufactured::potential(&c).norm() < 1e-14);
    for axis in 0..3 {
        for side in [0.0, 1.0] {
            let n = Vector3::from_fn(|i, _| if i == axis { 1.0 } else { 0.0 });
            for s in [0.1, 0.37, 0.8] {
                for t in [0.23, 0.5, 0.95] {
                    let mut p = Vector3::new(s, t, s * t);
                    p[axis] = side;
                    assert!(manufactured::potential(&p).cross(&n).norm() < 1e-13, "{p}");
                }
            }
        }
    }
}
