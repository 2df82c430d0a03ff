//! Adaptive time stepping towards the blow-up time of `u' = f(u)` with a polynomial `f`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::scalar::{c, f, Real};

/// `f(u) = Σ_{j=0}^p c_j u^j` with `c_j ≥ 0`, `c_p > 0`, `p ≥ 2`.
#[derive(Clone, Debug)]
pub struct PolynomialRhs<T> {
    coeffs: Vec<T>,
}

impl<T: Real> PolynomialRhs<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(Error::Input("the right-hand side needs degree at least 2".into()));
        }
        if coeffs.iter().any(|x| *x < T::zero()) || *coeffs.last().unwrap() <= T::zero() {
            return Err(Error::Input("coefficients must be non-negative with c_p > 0".into()));
        }
        Ok(PolynomialRhs { coeffs })
    }

    /// `f(u) = u^p`.
    pub fn power(p: usize) -> Result<Self> {
        let mut v = vec![T::zero(); p + 1];
        if p >= 1 {
            v[p] = T::one();
        }
        Self::new(v)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn eval(&self, u: T) -> T {
        self.coeffs.iter().rev().fold(T::zero(), |acc, cj| acc * u + *cj)
    }

    /// `f^{(j)}(u) / j!`.
    pub fn taylor(&self, j: usize, u: T) -> T {
        let mut s = T::zero();
        for m in (j..self.coeffs.len()).rev() {
            s = s * u + self.coeffs[m] * binom::<T>(m, j);
        }
        s
    }

    /// `f^{(j)}(u)`.
    pub fn deriv(&self, j: usize, u: T) -> T {
        let fact: T = (1..=j).fold(T::one(), |acc, i| acc * c(i as f64));
        self.taylor(j, u) * fact
    }

    /// Blow-up time of `u' = c_p u^p` from `u₀ > 0` when `f` is a pure power.
    pub fn blowup_time(&self, u0: T) -> Option<T> {
        let p = self.degree();
        if self.coeffs[..p].iter().any(|x| *x != T::zero()) || u0 <= T::zero() {
            return None;
        }
        let pm1: T = c((p - 1) as f64);
        Some(u0.powf(-pm1) / (pm1 * self.coeffs[p]))
    }
}

fn binom<T: Real>(m: usize, j: usize) -> T {
    let mut r = 1.0f64;
    for i in 0..j {
        r = r * (m - i) as f64 / (i + 1) as f64;
    }
    c(r)
}

/// One-step scheme `(u^{k+1} − u^k)/τ = f_h(u^k, u^{k+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Explicit,
    Implicit,
    Improved,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Implicit, Scheme::Explicit, Scheme::Improved];

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Explicit => "explicit",
            Scheme::Implicit => "implicit",
            Scheme::Improved => "improved",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit" => Ok(Scheme::Implicit),
            "improved" => Ok(Scheme::Improved),
            _ => Err(Error::Input(format!("unknown scheme '{s}'"))),
        }
    }
}

/// `f_h(u^k, u^{k+1})`.
pub fn scheme_rhs<T: Real>(scheme: Scheme, rhs: &PolynomialRhs<T>, u0: T, u1: T, tau: T) -> T {
    match scheme {
        Scheme::Explicit => rhs.eval(u0),
        Scheme::Implicit => rhs.eval(u1),
        Scheme::Improved => {
            let f0 = rhs.eval(u0);
            c::<T>(0.5) * (f0 + rhs.eval(u0 + tau * f0))
        }
    }
}

/// One step of `scheme`; `None` when the implicit Newton iteration fails.
pub fn ode_step<T: Real>(scheme: Scheme, rhs: &PolynomialRhs<T>, u: T, tau: T) -> Option<T> {
    let out = match scheme {
        Scheme::Explicit | Scheme::Improved => u + tau * scheme_rhs(scheme, rhs, u, u, tau),
        Scheme::Implicit => {
            let tol: T = c(1e-12);
            let mut x = u;
            let mut ok = false;
            for _ in 0..50 {
                let g = x - tau * rhs.eval(x) - u;
                let dg = T::one() - tau * rhs.deriv(1, x);
                if dg == T::zero() {
                    return None;
                }
                let dx = g / dg;
                x -= dx;
                if !x.is_finite() {
                    return None;
                }
                if dx.abs() <= tol * (T::one() + x.abs()) {
                    ok = true;
                    break;
                }
            }
            if !ok {
                return None;
            }
            x
        }
    };
    out.is_finite().then_some(out)
}

/// `∫_{t0}^{t1} |g(t)| dt` for a low-degree polynomial `g`: sign changes are located by
/// sampling and bisection, each piece is integrated with 10-point Gauss.
pub fn abs_integral<T: Real, G: Fn(T) -> T>(t0: T, t1: T, g: G) -> T {
    let samples = 40;
    let rule = GaussRule::<T>::new(10);
    let mut cuts = vec![t0];
    let step = (t1 - t0) / c(samples as f64);
    let mut prev = g(t0);
    for i in 1..=samples {
        let b = if i == samples { t1 } else { t0 + step * c(i as f64) };
        let gb = g(b);
        if prev * gb < T::zero() {
            let (mut lo, mut hi) = (b - step, b);
            let glo = prev;
            let tol: T = c::<T>(1e-12) * (T::one() + t1.abs());
            while hi - lo > tol {
                let mid = (lo + hi) * c(0.5);
                let gm = g(mid);
                if gm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < T::zero()) == (glo < T::zero()) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if mid == lo && mid == hi {
                    break;
                }
            }
            cuts.push((lo + hi) * c(0.5));
        } else if gb == T::zero() && i < samples {
            cuts.push(b);
        }
        prev = gb;
    }
    cuts.push(t1);
    let mut s = T::zero();
    for w in cuts.windows(2) {
        s += rule.integrate(w[0], w[1], &g).abs();
    }
    s
}

/// `∫ |η_{k+1}|` with `η = f(u_h(t)) − f_h` and `u_h` linear on `[0, τ]`.
pub fn residual_integral<T: Real>(scheme: Scheme, rhs: &PolynomialRhs<T>, u0: T, u1: T, tau: T) -> T {
    let fh = scheme_rhs(scheme, rhs, u0, u1, tau);
    abs_integral(T::zero(), tau, |t| rhs.eval(u0 + (u1 - u0) * t / tau) - fh)
}

/// `G = exp ∫ |f'(u_h)|`.
pub fn gronwall_factor<T: Real>(rhs: &PolynomialRhs<T>, u0: T, u1: T, tau: T) -> T {
    abs_integral(T::zero(), tau, |t| rhs.deriv(1, u0 + (u1 - u0) * t / tau)).exp()
}

/// `s(δ) = Σ_i a_i δ^{m_i} − log δ` with `a_i ≥ 0`, `m_i > 0`.
#[derive(Clone, Debug)]
pub struct DeltaEquation<T> {
    pub terms: Vec<(T, T)>,
}

impl<T: Real> DeltaEquation<T> {
    /// Terms `(exponent, coefficient)`.
    pub fn new(terms: Vec<(T, T)>) -> Self {
        DeltaEquation { terms }
    }

    pub fn s(&self, d: T) -> T {
        self.terms.iter().map(|(m, a)| *a * d.powf(*m)).sum::<T>() - d.ln()
    }

    /// `δ s'(δ) = Σ m a δ^m − 1`, increasing in `δ`.
    fn ds(&self, d: T) -> T {
        self.terms.iter().map(|(m, a)| *m * *a * d.powf(*m)).sum::<T>() - T::one()
    }

    fn dds(&self, d: T) -> T {
        self.terms.iter().map(|(m, a)| *m * *m * *a * d.powf(*m - T::one())).sum()
    }

    /// Stationary point `δ̂ > 1` of `s`, if any.
    pub fn stationary_point(&self) -> Option<T> {
        let big: T = c(1e16);
        if self.terms.iter().all(|(_, a)| *a == T::zero()) || self.ds(T::one()) >= T::zero() {
            return None;
        }
        if self.ds(big) < T::zero() {
            return Some(big);
        }
        let tol = crate::scalar::rel_tol::<T>();
        let mut d: T = c(2.0);
        let (mut lo, mut hi) = (T::one(), big);
        for _ in 0..200 {
            let v = self.ds(d);
            if v < T::zero() {
                lo = d;
            } else {
                hi = d;
            }
            let step = v / self.dds(d);
            let mut nd = d - step;
            if !(nd > lo && nd < hi) || !nd.is_finite() {
                nd = if hi / lo > c(4.0) { (lo * hi).sqrt() } else { (lo + hi) * c(0.5) };
            }
            if (nd - d).abs() <= tol * d {
                return Some(nd);
            }
            d = nd;
            if (hi - lo) <= tol * lo {
                break;
            }
        }
        Some(d)
    }

    /// Smallest root in `(1, ∞)`; `None` when there is none. With all coefficients zero
    /// the root degenerates to `δ = 1`.
    pub fn solve(&self) -> Option<T> {
        if self.terms.iter().all(|(_, a)| *a == T::zero()) {
            return Some(T::one());
        }
        let dh = self.stationary_point()?;
        let sh = self.s(dh);
        let tol = crate::scalar::rel_tol::<T>();
        if sh > tol {
            return None;
        }
        if sh >= -tol {
            return Some(dh);
        }
        let (mut lo, mut hi) = (T::one(), dh);
        for _ in 0..400 {
            let mid = (lo + hi) * c(0.5);
            if self.s(mid) > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= c::<T>(1e-12) * lo {
                break;
            }
        }
        Some((lo + hi) * c(0.5))
    }
}

/// Coefficients `a_{j−1} = (Gφ)^{j−1} ∫ |f^{(j)}(u_h)/j!|` of the ODE δ-equation.
pub fn ode_delta_equation<T: Real>(rhs: &PolynomialRhs<T>, u0: T, u1: T, tau: T, g: T, phi: T) -> DeltaEquation<T> {
    let gp = g * phi;
    let terms = (2..=rhs.degree())
        .map(|j| {
            let m = (j - 1) as i32;
            let int = abs_integral(T::zero(), tau, |t| rhs.taylor(j, u0 + (u1 - u0) * t / tau));
            (c::<T>(m as f64), gp.powi(m) * int)
        })
        .collect();
    DeltaEquation::new(terms)
}

/// Accepted (or terminal) step of an ODE run.
#[derive(Clone, Debug)]
pub struct OdeStepRecord<T> {
    pub k: usize,
    pub tau: T,
    pub t: T,
    pub u_old: T,
    pub u_new: T,
    pub residual: T,
    pub g: T,
    pub phi: T,
    pub delta: Option<T>,
    pub psi: T,
    pub tol: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeAlgorithm {
    /// Fixed threshold.
    One,
    /// Threshold multiplied by `G` after each step.
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OdeTermination {
    DeltaNonexistent,
    StepBudget,
    StepUnderflow,
}

#[derive(Clone, Debug)]
pub struct OdeRunResult<T> {
    pub scheme: Scheme,
    pub tol: T,
    /// Number of accepted steps.
    pub steps: usize,
    /// Final time `t^N`.
    pub final_time: T,
    pub records: Vec<OdeStepRecord<T>>,
    pub termination: OdeTermination,
}

impl<T: Real> OdeRunResult<T> {
    /// `λ = |T* − T|`.
    pub fn lambda(&self, t_star: T) -> T {
        (t_star - self.final_time).abs()
    }
}

/// Settings of an ODE run.
#[derive(Clone, Copy, Debug)]
pub struct OdeConfig<T> {
    pub scheme: Scheme,
    pub algorithm: OdeAlgorithm,
    pub u0: T,
    pub tau1: T,
    pub tol: T,
    pub max_steps: usize,
    /// Keep every record (otherwise only the last few).
    pub keep_records: bool,
}

/// Algorithms 4.1 and 4.2: halve until the residual integral is below `tol`, advance
/// with the previous step length, stop when the δ-equation has no root.
pub fn run_ode<T: Real>(rhs: &PolynomialRhs<T>, cfg: &OdeConfig<T>) -> OdeRunResult<T> {
    let mut tol = cfg.tol;
    let mut t = T::zero();
    let mut u = cfg.u0;
    let mut tau = cfg.tau1;
    let mut psi = T::zero();
    let mut records = Vec::new();
    let mut k = 0usize;
    let floor: T = c(1e-15);
    loop {
        // Halving loop for step k+1.
        let (u1, res) = loop {
            if tau <= floor * (T::one() + t.abs()) {
                return OdeRunResult {
                    scheme: cfg.scheme,
                    tol: cfg.tol,
                    steps: k,
                    final_time: t,
                    records,
                    termination: OdeTermination::StepUnderflow,
                };
            }
            if let Some(u1) = ode_step(cfg.scheme, rhs, u, tau) {
                let res = residual_integral(cfg.scheme, rhs, u, u1, tau);
                if res.is_finite() && res <= tol {
                    break (u1, res);
                }
            }
            tau *= c(0.5);
        };
        let g = gronwall_factor(rhs, u, u1, tau);
        let phi = psi + res;
        let delta = if g.is_finite() { ode_delta_equation(rhs, u, u1, tau, g, phi).solve() } else { None };
        let rec = OdeStepRecord {
            k,
            tau,
            t,
            u_old: u,
            u_new: u1,
            residual: res,
            g,
            phi,
            delta,
            psi: delta.map(|d| d * g * phi).unwrap_or(T::infinity()),
            tol,
        };
        if cfg.keep_records {
            records.push(rec);
        } else {
            if records.len() >= 8 {
                records.remove(0);
            }
            records.push(rec);
        }
        let Some(d) = delta else {
            return OdeRunResult {
                scheme: cfg.scheme,
                tol: cfg.tol,
                steps: k,
                final_time: t,
                records,
                termination: OdeTermination::DeltaNonexistent,
            };
        };
        psi = d * g * phi;
        t += tau;
        u = u1;
        k += 1;
        if cfg.algorithm == OdeAlgorithm::Two {
            tol *= g;
        }
        if k >= cfg.max_steps {
            return OdeRunResult {
                scheme: cfg.scheme,
                tol: cfg.tol,
                steps: k,
                final_time: t,
                records,
                termination: OdeTermination::StepBudget,
            };
        }
    }
}

/// Least-squares slope `r` in `λ ∝ N^{−r}` from `(N, λ)` pairs.
pub fn lambda_rate<T: Real>(points: &[(usize, T)]) -> Result<T> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, l)| *n > 0 && *l > T::zero())
        .map(|(n, l)| ((*n as f64).ln(), f(*l).ln()))
        .collect();
    let slope = fit_slope(&pts)?;
    Ok(c(-slope))
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::Input("a rate fit needs at least two distinct abscissae".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_coefficients() {
        let f = PolynomialRhs::<f64>::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let u: f64 = 0.7;
        assert!((f.eval(u) - (1.0 + 2.0 * u + 3.0 * u * u + 4.0 * u * u * u)).abs() < 1e-14);
        assert!((f.deriv(1, u) - (2.0 + 6.0 * u + 12.0 * u * u)).abs() < 1e-13);
        assert!((f.taylor(2, u) - (3.0 + 12.0 * u)).abs() < 1e-13);
        assert!((f.taylor(3, u) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn abs_integral_of_line() {
        let v = abs_integral(-1.0, 1.0, |t: f64| t);
        assert!((v - 1.0).abs() < 1e-12);
    }
}
