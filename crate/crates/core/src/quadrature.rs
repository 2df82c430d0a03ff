//! Gauss-Legendre rules on [-1, 1] and their tensor products.

use crate::scalar::{c, Real};

/// One-dimensional Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussRule<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one point");
        let (x, w) = gauss_legendre_f64(n);
        GaussRule {
            points: x.into_iter().map(c).collect(),
            weights: w.into_iter().map(c).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `g` over `[a, b]`.
    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut g: F) -> T {
        let half = (b - a) * c(0.5);
        let mid = (a + b) * c(0.5);
        let mut s = T::zero();
        for (x, w) in self.points.iter().zip(&self.weights) {
            s += *w * g(mid + half * *x);
        }
        s * half
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> Vec<(T, T)> {
        let half = (b - a) * c(0.5);
        let mid = (a + b) * c(0.5);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| (mid + half * *x, *w * half))
            .collect()
    }
}

/// Nodes and weights by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre_f64(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Three-point Gauss rule on a time slab `[t0, t1]`, as (time, weight) pairs.
pub fn time_rule<T: Real>(t0: T, t1: T) -> Vec<(T, T)> {
    GaussRule::<T>::new(3).mapped(t0, t1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in 1..12 {
            let r = GaussRule::<f64>::new(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn exact_for_degree_2n_minus_1() {
        for n in 1..10 {
            let r = GaussRule::<f64>::new(n);
            for d in 0..(2 * n) {
                let got = r.integrate(0.0, 1.0, |x| x.powi(d as i32));
                let want = 1.0 / (d as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }
}
