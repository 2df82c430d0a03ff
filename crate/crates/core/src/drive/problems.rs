//! Registry of the benchmark problems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::StepKind;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Rect};
use crate::problem::{constant, constant_vec, Exact, InterfaceParams, Nonlinearity, ProblemData};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemId {
    /// Stationary boundary layer `-εΔu + (1,1)·∇u = f` with a known solution.
    StationaryLayer,
    /// Outflow boundary layers growing like `1 − e^{−t}`, exact solution known.
    BoundaryLayer,
    /// `f = sin(5t)xy` with reaction `b = 1` on `(−1,1)²`.
    OscillatingSource,
    /// Gaussian carried around a circular wind, quasi-exact solution known.
    RotatingGaussian,
    /// Rotating wind `a = (sin t, cos t)` with `f = 1`.
    RotatingWind,
    /// `u_t − Δu − u² = 0` from a Gaussian blob.
    GaussianBlowup,
    /// `u_t − Δu + (1,1)·∇u + 1 − u² = 0` from rest.
    ConvectiveBlowup,
    /// `u_t − Δu − u² = 0` from a volcano profile.
    VolcanoBlowup,
    /// Two subdomains coupled across `x = 0` with `ρ = 0.1`, `r = 0.5`, `w = (1, 0)`.
    InterfaceLayer,
    /// Zero data and zero initial condition for the blow-up driver.
    ZeroBlowup,
}

impl ProblemId {
    pub const ALL: [ProblemId; 10] = [
        ProblemId::StationaryLayer,
        ProblemId::BoundaryLayer,
        ProblemId::OscillatingSource,
        ProblemId::RotatingGaussian,
        ProblemId::RotatingWind,
        ProblemId::GaussianBlowup,
        ProblemId::ConvectiveBlowup,
        ProblemId::VolcanoBlowup,
        ProblemId::InterfaceLayer,
        ProblemId::ZeroBlowup,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ProblemId::StationaryLayer => "stationary-layer",
            ProblemId::BoundaryLayer => "boundary-layer",
            ProblemId::OscillatingSource => "oscillating-source",
            ProblemId::RotatingGaussian => "rotating-gaussian",
            ProblemId::RotatingWind => "rotating-wind",
            ProblemId::GaussianBlowup => "gaussian-blowup",
            ProblemId::ConvectiveBlowup => "convective-blowup",
            ProblemId::VolcanoBlowup => "volcano-blowup",
            ProblemId::InterfaceLayer => "interface-layer",
            ProblemId::ZeroBlowup => "zero-blowup",
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ProblemId::StationaryLayer => Family::Stationary,
            ProblemId::BoundaryLayer
            | ProblemId::OscillatingSource
            | ProblemId::RotatingGaussian
            | ProblemId::RotatingWind => Family::Linear,
            ProblemId::GaussianBlowup
            | ProblemId::ConvectiveBlowup
            | ProblemId::VolcanoBlowup
            | ProblemId::ZeroBlowup => Family::Blowup,
            ProblemId::InterfaceLayer => Family::Interface,
        }
    }

    /// Default diffusion coefficient.
    pub fn default_eps(&self) -> f64 {
        match self.family() {
            Family::Blowup => 1.0,
            Family::Interface => 0.01,
            _ => 0.01,
        }
    }

    /// Default polynomial degree.
    pub fn default_degree(&self) -> usize {
        match self.family() {
            Family::Blowup => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemId::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown problem id `{s}`")))
    }
}

/// Which driver a problem belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Stationary,
    Linear,
    Blowup,
    Interface,
}

/// Problem data together with its initial mesh, degree and time stepping scheme.
#[derive(Clone)]
pub struct Problem<T: Real> {
    pub id: ProblemId,
    pub data: ProblemData<T>,
    pub mesh: Mesh<T>,
    pub p: usize,
    pub kind: StepKind,
}

/// `X(x) = (e^{(x−1)/ε} − 1)/(e^{−1/ε} − 1) + x − 1` and its first two derivatives.
/// It satisfies `−εX'' + X' = 1` with `X(0) = X(1) = 0`.
pub fn layer_profile<T: Real>(x: T, eps: T) -> (T, T, T) {
    let one = T::one();
    let den = (-one / eps).exp() - one;
    let e = ((x - one) / eps).exp();
    ((e - one) / den + x - one, e / (eps * den) + one, e / (eps * eps * den))
}

fn rotating_gaussian<T: Real>(x: [T; 2], t: T, eps: T) -> (T, [T; 2]) {
    let s = T::one() + c::<T>(256.0) * eps * t;
    let k: T = c(64.0);
    let half: T = c(0.5);
    let dx = x[0] - half * t.cos();
    let dy = x[1] + half * t.sin();
    let u = (-k * dx * dx / s).exp() * (-k * dy * dy / s).exp() / s;
    let two: T = c(2.0);
    (u, [-two * k * dx / s * u, -two * k * dy / s * u])
}

fn square<T: Real>(lo: f64, hi: f64, n: u32) -> Result<Mesh<T>> {
    Mesh::uniform(Rect::new(c(lo), c(lo), c(hi), c(hi)), n, n)
}

impl<T: Real> Problem<T> {
    /// Builds a registered problem with diffusion `eps`, degree `p` and an initial
    /// uniform mesh refined `refinements` times.
    pub fn new(id: ProblemId, eps: T, p: usize, refinements: u32) -> Result<Self> {
        if eps <= T::zero() {
            return Err(Error::Input("ε must be positive".into()));
        }
        if !(1..=crate::dgspace::MAX_DEGREE).contains(&p) {
            return Err(Error::Input(format!("degree {p} is not supported")));
        }
        let zero = T::zero();
        let one = T::one();
        let (data, mesh, kind) = match id {
            ProblemId::StationaryLayer | ProblemId::BoundaryLayer => {
                let steady = id == ProblemId::StationaryLayer;
                let mut d = ProblemData::diffusion(eps);
                d.a = constant_vec([one, one]);
                d.final_time = if steady { one } else { c(10.0) };
                let g = move |t: T| if steady { one } else { one - (-t).exp() };
                let dg = move |t: T| if steady { zero } else { (-t).exp() };
                d.f = Arc::new(move |x, t| {
                    let (px, _, _) = layer_profile(x[0], eps);
                    let (py, _, _) = layer_profile(x[1], eps);
                    dg(t) * px * py + g(t) * (px + py)
                });
                d.exact = Some(Exact {
                    u: Arc::new(move |x, t| g(t) * layer_profile(x[0], eps).0 * layer_profile(x[1], eps).0),
                    grad: Arc::new(move |x, t| {
                        let (px, dx, _) = layer_profile(x[0], eps);
                        let (py, dy, _) = layer_profile(x[1], eps);
                        [g(t) * dx * py, g(t) * px * dy]
                    }),
                });
                (d, square(0.0, 1.0, 4)?, StepKind::BackwardEuler)
            }
            ProblemId::OscillatingSource => {
                let mut d = ProblemData::diffusion(eps);
                d.a = constant_vec([one, one]);
                d.b = constant(one);
                d.beta = one;
                d.f = Arc::new(|x, t| (c::<T>(5.0) * t).sin() * x[0] * x[1]);
                d.final_time = c(2.0 * std::f64::consts::PI);
                (d, square(-1.0, 1.0, 4)?, StepKind::BackwardEuler)
            }
            ProblemId::RotatingGaussian => {
                let mut d = ProblemData::diffusion(eps);
                d.a = Arc::new(|x, _| [x[1], -x[0]]);
                d.final_time = c(2.0 * std::f64::consts::PI);
                d.u0 = Arc::new(move |x| rotating_gaussian(x, zero, eps).0);
                d.exact = Some(Exact {
                    u: Arc::new(move |x, t| rotating_gaussian(x, t, eps).0),
                    grad: Arc::new(move |x, t| rotating_gaussian(x, t, eps).1),
                });
                (d, square(-2.0, 2.0, 4)?, StepKind::BackwardEuler)
            }
            ProblemId::RotatingWind => {
                let mut d = ProblemData::diffusion(eps);
                d.a = Arc::new(|_, t| [t.sin(), t.cos()]);
                d.steady_coefficients = false;
                d.f = constant(one);
                d.final_time = c(2.0 * std::f64::consts::PI);
                (d, square(0.0, 1.0, 4)?, StepKind::BackwardEuler)
            }
            ProblemId::GaussianBlowup | ProblemId::ZeroBlowup => {
                let mut d = ProblemData::diffusion(eps);
                d.nonlinear = Some(Nonlinearity::blowup(constant(zero)));
                d.final_time = c(1e3);
                if id == ProblemId::GaussianBlowup {
                    d.u0 = Arc::new(|x| c::<T>(10.0) * (-c::<T>(2.0) * (x[0] * x[0] + x[1] * x[1])).exp());
                }
                (d, square(-4.0, 4.0, 8)?, StepKind::Imex)
            }
            ProblemId::ConvectiveBlowup => {
                let mut d = ProblemData::diffusion(eps);
                d.a = constant_vec([one, one]);
                d.nonlinear = Some(Nonlinearity::blowup(constant(-one)));
                d.final_time = c(1e3);
                (d, square(-4.0, 4.0, 8)?, StepKind::Imex)
            }
            ProblemId::VolcanoBlowup => {
                let mut d = ProblemData::diffusion(eps);
                d.nonlinear = Some(Nonlinearity::blowup(constant(zero)));
                d.final_time = c(1e3);
                d.u0 = Arc::new(|x| {
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    c::<T>(10.0) * r2 * (-c::<T>(0.5) * r2).exp()
                });
                (d, square(-8.0, 8.0, 8)?, StepKind::Imex)
            }
            ProblemId::InterfaceLayer => {
                let mut d = ProblemData::diffusion(eps);
                d.a = constant_vec([one, one]);
                d.nonlinear = Some(Nonlinearity::source(constant(-one)));
                d.interface = Some(InterfaceParams { rho: c(0.1), r: c(0.5), w1: one, w2: zero });
                d.final_time = one;
                let mesh = square(-1.0, 1.0, 4)?.with_interface(&[([zero, -one], [zero, one])], [-c::<T>(0.5), zero])?;
                (d, mesh, StepKind::Imex)
            }
        };
        let mut mesh = mesh;
        for _ in 0..refinements {
            let all: Vec<usize> = (0..mesh.num_cells()).collect();
            mesh = mesh.refine(&all)?;
        }
        Ok(Problem { id, data, mesh, p, kind })
    }

    /// The problem with its registry defaults.
    pub fn standard(id: ProblemId) -> Result<Self> {
        Self::new(id, c(id.default_eps()), id.default_degree(), 0)
    }
}
