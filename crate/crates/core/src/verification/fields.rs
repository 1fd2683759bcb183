//! Smooth trigonometric test fields with analytic derivatives.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ddr::{Sampler, ScalarFn, VectorFn};
use crate::mesh::Point;
use crate::poly::Tab;

/// sum_i amp_i sin(a_i . x + phi_i).
#[derive(Debug, Clone)]
pub struct TrigScalar {
    pub terms: Vec<(f64, Vector3<f64>, f64)>,
}

impl TrigScalar {
    /// `n` terms with wave vectors in [-kmax, kmax]^3 and amplitudes in [0.5, 1.5].
    pub fn random(seed: u64, n: usize, kmax: f64) -> TrigScalar {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::draw(&mut rng, n, kmax)
    }

    fn draw(rng: &mut ChaCha8Rng, n: usize, kmax: f64) -> TrigScalar {
        let terms = (0..n)
            .map(|_| {
                let amp = rng.random_range(0.5..1.5);
                let a = Vector3::from_fn(|_, _| rng.random_range(-kmax..kmax));
                let phi = rng.random_range(0.0..std::f64::consts::TAU);
                (amp, a, phi)
            })
            .collect();
        TrigScalar { terms }
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.terms.iter().map(|(s, a, p)| s * (a.dot(x) + p).sin()).sum()
    }

    pub fn grad(&self, x: &Point) -> Vector3<f64> {
        self.terms.iter().map(|(s, a, p)| a * (s * (a.dot(x) + p).cos())).sum()
    }

    pub fn grad_sampler(&self) -> impl Sampler + '_ {
        VectorFn(move |x: &Point| self.grad(x))
    }
}

impl Sampler for TrigScalar {
    fn sample(&self, points: &[Point]) -> Tab {
        ScalarFn(|x: &Point| self.value(x)).sample(points)
    }
}

/// A vector field with one [`TrigScalar`] per component.
#[derive(Debug, Clone)]
pub struct TrigVector {
    pub comps: [TrigScalar; 3],
}

impl TrigVector {
    pub fn random(seed: u64, n: usize, kmax: f64) -> TrigVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = std::array::from_fn(|_| TrigScalar::draw(&mut rng, n, kmax));
        TrigVector { comps }
    }

    pub fn value(&self, x: &Point) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.comps[i].value(x))
    }

    /// Row i holds the gradient of component i.
    fn jacobian(&self, x: &Point) -> [Vector3<f64>; 3] {
        std::array::from_fn(|i| self.comps[i].grad(x))
    }

    pub fn curl(&self, x: &Point) -> Vector3<f64> {
        let j = self.jacobian(x);
        Vector3::new(j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1])
    }

    pub fn div(&self, x: &Point) -> f64 {
        let j = self.jacobian(x);
        j[0][0] + j[1][1] + j[2][2]
    }

    pub fn curl_sampler(&self) -> impl Sampler + '_ {
        VectorFn(move |x: &Point| self.curl(x))
    }

    pub fn div_sampler(&self) -> impl Sampler + '_ {
        ScalarFn(move |x: &Point| self.div(x))
    }
}

impl Sampler for TrigVector {
    fn sample(&self, points: &[Point]) -> Tab {
        VectorFn(|x: &Point| self.value(x)).sample(points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let v = TrigVector::random(4, 2, 2.0);
        let x = Point::new(0.3, -0.2, 0.7);
        let h = 1e-5;
        let d = |i: usize, c: usize| {
            let e = Vector3::from_fn(|r, _| if r == i { h } else { 0.0 });
            (v.comps[c].value(&(x + e)) - v.comps[c].value(&(x - e))) / (2.0 * h)
        };
        let curl = Vector3::new(d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0));
        assert!((curl - v.curl(&x)).norm() < 1e-8);
        assert!((d(0, 0) + d(1, 1) + d(2, 2) - v.div(&x)).abs() < 1e-8);
    }

    #[test]
    fn same_seed_same_field() {
        let a = TrigScalar::random(9, 3, 2.0);
        let b = TrigScalar::random(9, 3, 2.0);
        let x = Point::new(0.1, 0.2, 0.3);
        assert_eq!(a.value(&x), b.value(&x));
    }
}
