//! Adaptive discontinuous Galerkin methods with a posteriori error control for linear
//! convection-diffusion problems, finite-time blow-up problems and interface problems.

pub mod assembly;
pub mod dgspace;
pub mod drive;
pub mod error;
pub mod est_blowup;
pub mod est_interface;
pub mod est_linear;
pub mod linsolve;
pub mod mesh;
pub mod ode_blowup;
pub mod problem;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh = mesh::Mesh<f64>;
pub type DgSpace = dgspace::DgSpace<f64>;
pub type DgFunction = dgspace::DgFunction<f64>;
pub type ProblemData = problem::ProblemData<f64>;
