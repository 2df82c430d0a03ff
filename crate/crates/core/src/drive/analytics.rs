//! Error norms against exact solutions, effectivity indices and rate fits.

use serde::{Deserialize, Serialize};

use crate::assembly::{edge_role, EdgeRole};
use crate::dgspace::{edge_quadrature, square_quadrature, DgFunction, View};
use crate::error::Result;
use crate::est_linear::TimeSlab;
use crate::mesh::{Edge, Mesh};
use crate::ode_blowup::fit_slope;
use crate::problem::{Exact, ProblemData};
use crate::quadrature::time_rule;
use crate::scalar::{f, Real};

use super::CellInfo;

/// Errors below this are treated as solver noise.
pub const ERROR_FLOOR: f64 = 1e-12;

/// `‖e‖_* = (sup_t ‖e(t)‖² + ∫|||e|||²)^{1/2}` and its two parts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `sup_t ‖e(t)‖` over the slab ends.
    pub sup_l2: f64,
    /// `(∫|||e|||²)^{1/2}`.
    pub energy: f64,
    pub star: f64,
    pub below_floor: bool,
}

/// `η / ‖e‖_*`, or `None` when the error is at the noise floor.
pub fn effectivity(eta: f64, err: f64) -> Option<f64> {
    (err > ERROR_FLOOR).then(|| eta / err)
}

/// Least-squares slope of `log y` against `log x`.
pub fn slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    fit_slope(&pts)
}

/// One run of a tolerance sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub tol: f64,
    pub weighted_dofs: f64,
    pub steps: usize,
    pub eta: f64,
    pub eta_space: f64,
    pub eta_time: f64,
    pub error: Option<f64>,
}

/// Rates of a sweep: spatial estimator against weighted DoFs, temporal estimator
/// against the number of steps, and the effectivity indices.
pub fn summarize_sweep(points: &[SweepPoint]) -> (Option<f64>, Option<f64>, Vec<Option<f64>>) {
    let s: Vec<(f64, f64)> = points.iter().map(|p| (p.weighted_dofs, p.eta_space)).collect();
    let t: Vec<(f64, f64)> = points.iter().map(|p| (p.steps as f64, p.eta_time)).collect();
    let eff = points.iter().map(|p| p.error.and_then(|e| effectivity(p.eta, e))).collect();
    (slope(&s).ok(), slope(&t).ok(), eff)
}

/// Mean cell diameter of the cells within `width` of a set (by `dist`) and of the rest.
pub fn layer_means<D: Fn(&CellInfo) -> f64>(cells: &[CellInfo], width: f64, dist: D) -> (f64, f64) {
    let (mut near, mut nn, mut bulk, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for cell in cells {
        let d = cell.h * std::f64::consts::SQRT_2;
        if dist(cell) <= width {
            near += d;
            nn += 1;
        } else {
            bulk += d;
            nb += 1;
        }
    }
    let mean = |s: f64, n: usize| if n == 0 { f64::NAN } else { s / n as f64 };
    (mean(near, nn), mean(bulk, nb))
}

/// Distance from a cell to the vertical line `x = x0`.
pub fn dist_to_vertical(cell: &CellInfo, x0: f64) -> f64 {
    ((cell.x - x0).abs() - 0.5 * cell.h).max(0.0)
}

/// Distance from a cell to the horizontal line `y = y0`.
pub fn dist_to_horizontal(cell: &CellInfo, y0: f64) -> f64 {
    ((cell.y - y0).abs() - 0.5 * cell.h).max(0.0)
}

/// Accumulates `‖e‖_*` over the accepted slabs of a run.
#[derive(Clone, Debug)]
pub(crate) struct ErrorTracker<T> {
    sup_sq: T,
    energy_sq: T,
}

impl<T: Real> ErrorTracker<T> {
    pub fn new(u0: &DgFunction<T>, exact: &Exact<T>, t0: T) -> Self {
        ErrorTracker { sup_sq: l2_error_sq(u0, exact, t0), energy_sq: T::zero() }
    }

    /// Adds a slab; returns `(∫|||e|||², ‖e(t^{k+1})‖²)`.
    pub fn push(&mut self, slab: &TimeSlab<T>, data: &ProblemData<T>, exact: &Exact<T>) -> (T, T) {
        let mut energy = T::zero();
        for (t, w) in time_rule(slab.t_old, slab.t_new()) {
            energy += w * energy_error_sq(slab, data, exact, t);
        }
        let l2 = l2_error_sq(&slab.u_new, exact, slab.t_new());
        self.energy_sq += energy;
        self.sup_sq = self.sup_sq.max(l2);
        (energy, l2)
    }

    pub fn norms(&self) -> ErrorNorms {
        let star = f((self.sup_sq + self.energy_sq).sqrt());
        ErrorNorms {
            sup_l2: f(self.sup_sq.sqrt()),
            energy: f(self.energy_sq.sqrt()),
            star,
            below_floor: star <= ERROR_FLOOR,
        }
    }
}

/// `‖u(t) − u_h‖²` on `u_h`'s mesh.
pub fn l2_error_sq<T: Real>(u: &DgFunction<T>, exact: &Exact<T>, t: T) -> T {
    let mesh = u.mesh();
    let nq = u.space().degree() + 3;
    let mut s = T::zero();
    for (cell, key) in mesh.keys().iter().enumerate() {
        for (x, w) in square_quadrature(mesh.key_origin(key), mesh.key_h(key), nq) {
            let d = (exact.u)(x, t) - u.eval(cell, x);
            s += w * d * d;
        }
    }
    s
}

/// `|||u(t) − u_h(t)|||²` on the union mesh with `u_h` linear in time over the slab.
pub fn energy_error_sq<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>, exact: &Exact<T>, t: T) -> T {
    let union = &slab.union;
    let (l0, l1) = slab.weights(t);
    let uo = View::new(&slab.u_old, union);
    let un = View::new(&slab.u_new, union);
    energy_error_with(
        union,
        slab.u_new.space().degree(),
        data,
        exact,
        t,
        |cell, x| {
            let a = uo.eval_grad(cell, x);
            let b = un.eval_grad(cell, x);
            (l0 * a.v + l1 * b.v, [l0 * a.grad[0] + l1 * b.grad[0], l0 * a.grad[1] + l1 * b.grad[1]])
        },
        |e, x| l0 * uo.jump(e, x) + l1 * un.jump(e, x),
    )
}

/// `|||u(t) − u_h|||` of a stationary solution on its own mesh.
pub fn stationary_energy_error<T: Real>(u: &DgFunction<T>, data: &ProblemData<T>, exact: &Exact<T>, t: T) -> T {
    let mesh = u.mesh();
    let view = View::new(u, mesh);
    energy_error_with(
        mesh,
        u.space().degree(),
        data,
        exact,
        t,
        |cell, x| {
            let e = u.eval_grad(cell, x);
            (e.v, e.grad)
        },
        |e, x| view.jump(e, x),
    )
    .sqrt()
}

fn energy_error_with<T: Real, V, J>(
    mesh: &Mesh<T>,
    p: usize,
    data: &ProblemData<T>,
    exact: &Exact<T>,
    t: T,
    uh: V,
    jump: J,
) -> T
where
    V: Fn(usize, [T; 2]) -> (T, [T; 2]),
    J: Fn(&Edge<T>, [T; 2]) -> T,
{
    let nq = p + 3;
    let gamma = data.gamma(p);
    let mut s = T::zero();
    for (cell, key) in mesh.keys().iter().enumerate() {
        for (x, w) in square_quadrature(mesh.key_origin(key), mesh.key_h(key), nq) {
            let (v, g) = uh(cell, x);
            let ge = (exact.grad)(x, t);
            let e = (exact.u)(x, t) - v;
            let gx = ge[0] - g[0];
            let gy = ge[1] - g[1];
            s += w * (data.eps * (gx * gx + gy * gy) + data.beta * e * e);
        }
    }
    for e in mesh.edges() {
        if edge_role(e, data) == EdgeRole::Neumann {
            continue;
        }
        let wgt = gamma * data.eps / e.h + data.beta * e.h;
        for (x, w) in edge_quadrature(e, nq) {
            let mut j = -jump(e, x);
            if e.plus.is_none() {
                j += (exact.u)(x, t);
            }
            s += wgt * w * j * j;
        }
    }
    s
}
