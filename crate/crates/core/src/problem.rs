//! Coefficients and data of the convection-diffusion-reaction problems.

use std::sync::Arc;

use crate::scalar::{c, Real};

/// Scalar field `(x, t) -> value`.
pub type Field<T> = Arc<dyn Fn([T; 2], T) -> T + Send + Sync>;
/// Vector field `(x, t) -> value`.
pub type VField<T> = Arc<dyn Fn([T; 2], T) -> [T; 2] + Send + Sync>;
/// Function of the solution `(x, t, u) -> value`.
pub type UField<T> = Arc<dyn Fn([T; 2], T, T) -> T + Send + Sync>;

pub fn constant<T: Real>(v: T) -> Field<T> {
    Arc::new(move |_, _| v)
}

pub fn constant_vec<T: Real>(v: [T; 2]) -> VField<T> {
    Arc::new(move |_, _| v)
}

/// Reaction term treated explicitly by the IMEX schemes.
#[derive(Clone)]
pub struct Nonlinearity<T> {
    /// `f(x, t, u)`.
    pub f: UField<T>,
    /// `∂f/∂u`.
    pub df: UField<T>,
    /// Growth constants `L` and `μ` of `|f(u) − f(v)| ≤ L|u − v|(1 + |u| + |v|)^μ`.
    pub lipschitz: T,
    pub mu: T,
}

impl<T: Real> Nonlinearity<T> {
    /// `f(u) = f_0 − u²`.
    pub fn blowup(f0: Field<T>) -> Self {
        let f0c = f0.clone();
        Nonlinearity {
            f: Arc::new(move |x, t, u| f0c(x, t) - u * u),
            df: Arc::new(|_, _, u| -(u + u)),
            lipschitz: T::one(),
            mu: T::one(),
        }
    }

    /// A reaction independent of `u`.
    pub fn source(f: Field<T>) -> Self {
        Nonlinearity {
            f: Arc::new(move |x, t, _| f(x, t)),
            df: Arc::new(|_, _, _| T::zero()),
            lipschitz: T::zero(),
            mu: T::zero(),
        }
    }
}

/// Interface coupling parameters.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceParams<T> {
    pub rho: T,
    pub r: T,
    pub w1: T,
    pub w2: T,
}

impl<T: Real> InterfaceParams<T> {
    /// `{u}_w = w₁ u|Ω₁ + w₂ u|Ω₂` from the traces of the two sides.
    pub fn weighted(&self, u1: T, u2: T) -> T {
        self.w1 * u1 + self.w2 * u2
    }

    /// `α_rw = (r/2)|w₁ − w₂| + max{|rw₁ − ½|, |rw₂ − ½|}`.
    pub fn alpha_rw(&self) -> T {
        let half: T = c(0.5);
        self.r * half * (self.w1 - self.w2).abs()
            + (self.r * self.w1 - half).abs().max((self.r * self.w2 - half).abs())
    }

    /// `α_ρ = 2ρ + 2r²ρ⁻¹ max{w₁², w₂²} 𝒜_i²`.
    pub fn alpha_rho(&self, a_i: T) -> T {
        let two: T = c(2.0);
        two * self.rho
            + two * self.r * self.r / self.rho * (self.w1 * self.w1).max(self.w2 * self.w2) * a_i * a_i
    }
}

/// Exact solution and its spatial gradient.
#[derive(Clone)]
pub struct Exact<T> {
    pub u: Field<T>,
    pub grad: VField<T>,
}

#[derive(Clone)]
pub struct ProblemData<T> {
    pub eps: T,
    pub a: VField<T>,
    pub div_a: Field<T>,
    /// Linear reaction coefficient `b`.
    pub b: Field<T>,
    /// Linear source `f`.
    pub f: Field<T>,
    /// Lagged reaction for the IMEX schemes.
    pub nonlinear: Option<Nonlinearity<T>>,
    pub u0: Arc<dyn Fn([T; 2]) -> T + Send + Sync>,
    pub final_time: T,
    /// Lower bound for `b − ½∇·a`.
    pub beta: T,
    /// Penalty parameter; `None` selects `2p²`.
    pub gamma: Option<T>,
    pub interface: Option<InterfaceParams<T>>,
    /// Neumann data `g`.
    pub g: Field<T>,
    /// Trace constant `c_*`.
    pub c_star: T,
    /// The coefficients `a`, `b` do not depend on time.
    pub steady_coefficients: bool,
    pub exact: Option<Exact<T>>,
}

impl<T: Real> ProblemData<T> {
    /// Pure diffusion with `ε`, zero data and zero initial condition.
    pub fn diffusion(eps: T) -> Self {
        ProblemData {
            eps,
            a: constant_vec([T::zero(), T::zero()]),
            div_a: constant(T::zero()),
            b: constant(T::zero()),
            f: constant(T::zero()),
            nonlinear: None,
            u0: Arc::new(|_| T::zero()),
            final_time: T::one(),
            beta: T::zero(),
            gamma: None,
            interface: None,
            g: constant(T::zero()),
            c_star: T::one(),
            steady_coefficients: true,
            exact: None,
        }
    }

    pub fn gamma(&self, p: usize) -> T {
        self.gamma.unwrap_or_else(|| c(2.0 * (p * p) as f64))
    }

    /// Sets a convection field and derives `∇·a` by central differences.
    pub fn with_convection(mut self, a: VField<T>) -> Self {
        let ac = a.clone();
        let hstep: T = c(1e-6);
        self.div_a = Arc::new(move |x, t| {
            let xp = ac([x[0] + hstep, x[1]], t)[0];
            let xm = ac([x[0] - hstep, x[1]], t)[0];
            let yp = ac([x[0], x[1] + hstep], t)[1];
            let ym = ac([x[0], x[1] - hstep], t)[1];
            (xp - xm + yp - ym) / (hstep + hstep)
        });
        self.a = a;
        self
    }

    /// Returns `α_T = min{ε^{-1/2}, β^{-1/2}}` with `β = 0` read as `+∞`.
    pub fn alpha_t(&self) -> T {
        let e = self.eps.powf(c(-0.5));
        if self.beta > T::zero() {
            e.min(self.beta.powf(c(-0.5)))
        } else {
            e
        }
    }

    /// Counts sampled points where `b − ½∇·a < β`.
    pub fn check_beta(&self, points: &[[T; 2]], t: T) -> usize {
        let half: T = c(0.5);
        points
            .iter()
            .filter(|x| (self.b)(**x, t) - half * (self.div_a)(**x, t) < self.beta - c(1e-12))
            .count()
    }
}
