//! Residual estimators for the linear parabolic problem and the shared slab machinery.

use std::sync::Arc;

use crate::assembly::{assemble_b_kh, edge_role, time_step_full, EdgeRole, StepCache, StepKind};
use crate::dgspace::{edge_quadrature, square_quadrature, DgFunction, DgSpace, View};
use crate::error::Result;
use crate::mesh::Mesh;
use crate::problem::ProblemData;
use crate::quadrature::time_rule;
use crate::scalar::{c, Real};

fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Which edges carry the convective jump term of the residual estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvectiveJumps {
    /// Interior edges only (stationary estimator).
    Interior,
    /// Interior and Dirichlet edges.
    All,
}

/// Cellwise squared contributions of a residual estimator.
#[derive(Clone, Debug)]
pub struct CellMap<T> {
    pub cells: Vec<T>,
}

impl<T: Real> CellMap<T> {
    pub fn total_sq(&self) -> T {
        self.cells.iter().copied().sum()
    }

    pub fn total(&self) -> T {
        self.total_sq().sqrt()
    }

    pub fn max(&self) -> T {
        self.cells.iter().copied().fold(T::zero(), T::max)
    }
}

/// Residual estimator of `u` on its own mesh:
/// `Σ (h²/ε)‖s + εΔu − a·∇u − bu‖² + Σ (h_E/ε)‖[au]‖² + Σ (γε/h_E + βh_E)‖[u]‖²
/// + Σ_int εh_E‖[∇u]‖²`, with edge terms split half/half between the adjacent cells.
pub fn residual_map<T: Real, S: Fn(usize, [T; 2]) -> T>(
    u: &DgFunction<T>,
    data: &ProblemData<T>,
    t: T,
    source: S,
    jumps: ConvectiveJumps,
    beta: T,
) -> CellMap<T> {
    let sp = u.space();
    let mesh = sp.mesh();
    let nq = sp.degree() + 3;
    let eps = data.eps;
    let gamma = data.gamma(sp.degree());
    let mut cells = vec![T::zero(); mesh.num_cells()];
    for (cell, slot) in cells.iter_mut().enumerate() {
        let h = mesh.h(cell);
        let mut s = T::zero();
        for (x, w) in sp.key_quadrature(&mesh.key(cell), nq) {
            let e = u.eval_full(cell, x);
            let r = source(cell, x) + eps * e.lap - dot((data.a)(x, t), e.grad) - (data.b)(x, t) * e.v;
            s += w * r * r;
        }
        *slot = h * h / eps * s;
    }
    let half: T = c(0.5);
    let view = View::new(u, mesh);
    for e in mesh.edges() {
        let role = edge_role(e, data);
        if role == EdgeRole::Neumann {
            continue;
        }
        let interior = e.plus.is_some();
        let mut s = T::zero();
        for (x, w) in edge_quadrature(e, nq) {
            let (m, p) = view.traces(e, x);
            let j = m.v - p.map(|q| q.v).unwrap_or(T::zero());
            let an = dot((data.a)(x, t), e.normal);
            let mut v = (gamma * eps / e.h + beta * e.h) * j * j;
            if interior || jumps == ConvectiveJumps::All {
                v += e.h / eps * an * an * j * j;
            }
            if let Some(p) = p {
                let gj = dot(m.grad, e.normal) - dot(p.grad, e.normal);
                v += eps * e.h * gj * gj;
            }
            s += w * v;
        }
        match e.plus {
            Some(q) => {
                cells[e.minus] += half * s;
                cells[q] += half * s;
            }
            None => cells[e.minus] += s,
        }
    }
    CellMap { cells }
}

/// Estimator of the stationary dG solution with source `f(t)`.
pub fn elliptic_estimator<T: Real>(u: &DgFunction<T>, data: &ProblemData<T>, t: T) -> (T, CellMap<T>) {
    let map = residual_map(u, data, t, |_, x| (data.f)(x, t), ConvectiveJumps::Interior, T::zero());
    (map.total(), map)
}

/// `η²_{S1}` map of `u` at time `t` with reconstruction source `a_rec`.
pub fn s1_map<T: Real>(
    u: &DgFunction<T>,
    a_rec: &DgFunction<T>,
    data: &ProblemData<T>,
    t: T,
) -> CellMap<T> {
    residual_map(u, data, t, |k, x| a_rec.eval(k, x), ConvectiveJumps::All, data.beta)
}

/// `A⁰` with `(A⁰, v) = B(t⁰; u⁰, v) + K_h(u⁰, v)`.
pub fn initial_reconstruction<T: Real>(u0: &DgFunction<T>, data: &ProblemData<T>, t0: T) -> DgFunction<T> {
    let mat = assemble_b_kh(u0.space(), data, t0);
    DgFunction::from_coeffs(u0.space(), mat.matvec(&u0.coeffs))
}

/// `Σ_E h_E‖[u]‖²` over the non-Neumann edges of `u`'s mesh.
pub fn jump_sq<T: Real>(u: &DgFunction<T>) -> T {
    let mesh = u.mesh();
    let view = View::new(u, mesh);
    let nq = u.space().degree() + 3;
    let mut s = T::zero();
    for e in mesh.edges().iter().filter(|e| !e.is_neumann()) {
        for (x, w) in edge_quadrature(e, nq) {
            let j = view.jump(e, x);
            s += e.h * w * j * j;
        }
    }
    s
}

/// `‖u₀ − u_h‖` by quadrature on `u_h`'s mesh.
pub fn initial_error<T: Real>(u: &DgFunction<T>, data: &ProblemData<T>) -> T {
    let mesh = u.mesh();
    let nq = u.space().degree() + 3;
    let mut s = T::zero();
    for (cell, key) in mesh.keys().iter().enumerate() {
        for (x, w) in square_quadrature(mesh.key_origin(key), mesh.key_h(key), nq) {
            let d = (data.u0)(x) - u.eval(cell, x);
            s += w * d * d;
        }
    }
    s.sqrt()
}

/// One time interval `[t^k, t^{k+1}]` with everything the estimators need.
#[derive(Clone, Debug)]
pub struct TimeSlab<T: Real> {
    pub k: usize,
    pub kind: StepKind,
    pub t_old: T,
    pub tau: T,
    pub u_old: DgFunction<T>,
    pub u_new: DgFunction<T>,
    /// Reconstruction sources `A^k` and `A^{k+1}`.
    pub a_old: DgFunction<T>,
    pub a_new: DgFunction<T>,
    /// Projected source of the step on the new space.
    pub source: DgFunction<T>,
    /// `I^{k+1} u^k`.
    pub proj: DgFunction<T>,
    pub union: Arc<Mesh<T>>,
}

impl<T: Real> TimeSlab<T> {
    pub fn t_new(&self) -> T {
        self.t_old + self.tau
    }

    /// `(l_k(t), l_{k+1}(t))`.
    pub fn weights(&self, t: T) -> (T, T) {
        let l1 = (t - self.t_old) / self.tau;
        (T::one() - l1, l1)
    }

    /// Degrees of freedom of the new space on the union mesh.
    pub fn dofs(&self) -> usize {
        self.union.num_cells() * self.u_new.space().nloc()
    }

    /// Pointwise source of the step at `x`, using the value `u_old` of `u^k` at `x`.
    pub fn step_source(&self, data: &ProblemData<T>, x: [T; 2], u_old: T) -> T {
        let mut g = (data.f)(x, self.t_new());
        if self.kind == StepKind::Imex {
            g -= (data.nonlinear.as_ref().unwrap().f)(x, self.t_old, u_old);
        }
        g
    }

    /// Pointwise source at time `t` evaluated with the interpolated solution value `u`.
    pub fn source_at(&self, data: &ProblemData<T>, x: [T; 2], t: T, u: T) -> T {
        let mut g = (data.f)(x, t);
        if self.kind == StepKind::Imex {
            g -= (data.nonlinear.as_ref().unwrap().f)(x, t, u);
        }
        g
    }
}

/// Solves one step from `u_old` onto `space` and forms `A^{k+1} = I g − (u^{k+1} − I u^k)/τ`.
#[allow(clippy::too_many_arguments)]
pub fn solve_slab<T: Real>(
    kind: StepKind,
    k: usize,
    u_old: &DgFunction<T>,
    a_old: &DgFunction<T>,
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t_old: T,
    tau: T,
    cache: &mut StepCache<T>,
) -> Result<TimeSlab<T>> {
    let out = time_step_full(kind, u_old, space, data, t_old, tau, cache)?;
    let inv = T::one() / tau;
    let coeffs = out
        .source
        .coeffs
        .iter()
        .zip(&out.u.coeffs)
        .zip(&out.proj.coeffs)
        .map(|((s, u), p)| *s - (*u - *p) * inv)
        .collect();
    let a_new = DgFunction::from_coeffs(space, coeffs);
    let union = Arc::new(u_old.mesh().union(space.mesh())?);
    Ok(TimeSlab {
        k,
        kind,
        t_old,
        tau,
        u_old: u_old.clone(),
        u_new: out.u,
        a_old: a_old.clone(),
        a_new,
        source: out.source,
        proj: out.proj,
        union,
    })
}

/// Estimator parts of one slab. `S` parts are squared values.
#[derive(Clone, Debug)]
pub struct LinearParts<T> {
    pub k: usize,
    pub tau: T,
    pub t_old: T,
    pub dofs: usize,
    pub s1_old: T,
    pub s1_new: T,
    pub s2: T,
    pub s3_old: T,
    pub s3_new: T,
    pub s4: T,
    /// Gauss nodes and weights in time.
    pub times: [(T, T); 3],
    /// `η²_{T1}` at the Gauss nodes.
    pub t1_sq_at: [T; 3],
    /// `η_{T2}` at the Gauss nodes.
    pub t2_at: [T; 3],
    /// `∫η²_{T1}`, `∫η_{T2}` and `∫η²_{T2}` over the slab.
    pub t1_sq: T,
    pub t2: T,
    pub t2_sq: T,
    /// `η²_{S1,k+1}` per cell of the new mesh.
    pub s1_cells: Vec<T>,
}

impl<T: Real> LinearParts<T> {
    /// `η̂²_{T,k+1} = ∫η²_{T1} + min{α_T, T}∫η²_{T2}`.
    pub fn hat(&self, alpha_t: T, final_time: T) -> T {
        self.t1_sq + alpha_t.min(final_time) * self.t2_sq
    }
}

/// Spatial-only parts that need no time quadrature: `η²_{S2}` and `η²_{S4}` on the union.
pub fn union_space_parts<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>) -> (T, T) {
    let union = &slab.union;
    let nq = slab.u_new.space().degree() + 3;
    let uo = View::new(&slab.u_old, union);
    let un = View::new(&slab.u_new, union);
    let src = View::new(&slab.source, union);
    let pr = View::new(&slab.proj, union);
    let inv = T::one() / slab.tau;
    let mut s2 = T::zero();
    for (cell, key) in union.keys().iter().enumerate() {
        let h = union.key_h(key);
        let mut s = T::zero();
        for (x, w) in square_quadrature(union.key_origin(key), h, nq) {
            let vo = uo.eval(cell, x);
            let r = slab.step_source(data, x, vo) - src.eval(cell, x) + (vo - pr.eval(cell, x)) * inv;
            s += w * r * r;
        }
        s2 += h * h / data.eps * s;
    }
    let mut s4 = T::zero();
    for e in union.edges().iter().filter(|e| !e.is_neumann()) {
        for (x, w) in edge_quadrature(e, nq) {
            let j = (un.jump(e, x) - uo.jump(e, x)) * inv;
            s4 += e.h * w * j * j;
        }
    }
    (s2, s4)
}

/// `η²_{T1}(t)` and `η_{T2}(t)` at one time in the slab.
pub fn time_parts_at<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>, t: T) -> (T, T) {
    let union = &slab.union;
    let nq = slab.u_new.space().degree() + 3;
    let uo = View::new(&slab.u_old, union);
    let un = View::new(&slab.u_new, union);
    let ao = View::new(&slab.a_old, union);
    let an = View::new(&slab.a_new, union);
    let (l0, l1) = slab.weights(t);
    let (t0, t1) = (slab.t_old, slab.t_new());
    let mut s1 = T::zero();
    let mut s2 = T::zero();
    for (cell, key) in union.keys().iter().enumerate() {
        for (x, w) in square_quadrature(union.key_origin(key), union.key_h(key), nq) {
            let vo = uo.eval(cell, x);
            let vn = un.eval(cell, x);
            let a = (data.a)(x, t);
            let a0 = (data.a)(x, t0);
            let a1 = (data.a)(x, t1);
            let d = [
                l1 * (a1[0] - a[0]) * vn + l0 * (a0[0] - a[0]) * vo,
                l1 * (a1[1] - a[1]) * vn + l0 * (a0[1] - a[1]) * vo,
            ];
            s1 += w * dot(d, d);
            let b = (data.b)(x, t) - (data.div_a)(x, t);
            let b0 = (data.b)(x, t0) - (data.div_a)(x, t0);
            let b1 = (data.b)(x, t1) - (data.div_a)(x, t1);
            let uh = l0 * vo + l1 * vn;
            let r = slab.source_at(data, x, t, uh) - slab.step_source(data, x, vo)
                + l0 * (an.eval(cell, x) - ao.eval(cell, x))
                + l0 * (b0 - b) * vo
                + l1 * (b1 - b) * vn;
            s2 += w * r * r;
        }
    }
    (s1 / data.eps, s2.sqrt())
}

/// All parts of one slab. `s1_old` reuses `η²_{S1,k}` from the previous slab when known.
pub fn slab_estimators<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>, s1_old: Option<T>) -> LinearParts<T> {
    let map_new = s1_map(&slab.u_new, &slab.a_new, data, slab.t_new());
    let s1_old = s1_old.unwrap_or_else(|| s1_map(&slab.u_old, &slab.a_old, data, slab.t_old).total_sq());
    let (s2, s4) = union_space_parts(slab, data);
    let times: Vec<(T, T)> = time_rule(slab.t_old, slab.t_new());
    let mut t1_sq_at = [T::zero(); 3];
    let mut t2_at = [T::zero(); 3];
    let (mut t1_sq, mut t2, mut t2_sq) = (T::zero(), T::zero(), T::zero());
    for (i, (t, w)) in times.iter().enumerate() {
        let (a, b) = time_parts_at(slab, data, *t);
        t1_sq_at[i] = a;
        t2_at[i] = b;
        t1_sq += *w * a;
        t2 += *w * b;
        t2_sq += *w * b * b;
    }
    LinearParts {
        k: slab.k,
        tau: slab.tau,
        t_old: slab.t_old,
        dofs: slab.dofs(),
        s1_old,
        s1_new: map_new.total_sq(),
        s2,
        s3_old: jump_sq(&slab.u_old),
        s3_new: jump_sq(&slab.u_new),
        s4,
        times: [times[0], times[1], times[2]],
        t1_sq_at,
        t2_at,
        t1_sq,
        t2,
        t2_sq,
        s1_cells: map_new.cells,
    }
}

/// Running totals of the fully discrete bound.
#[derive(Clone, Debug, Default)]
pub struct RunTotals<T> {
    pub e0: T,
    pub alpha_t: T,
    pub s1: T,
    pub s2: T,
    pub s3_max: T,
    pub s4_lin: T,
    pub s4_sq: T,
    pub t1_sq: T,
    pub t2_lin: T,
    pub t2_sq: T,
    /// `Σ τ_{j+1} λ_j`.
    pub dof_time: T,
    pub time: T,
    pub steps: usize,
}

impl<T: Real> RunTotals<T> {
    pub fn new(e0: T, alpha_t: T) -> Self {
        RunTotals {
            e0,
            alpha_t,
            s1: T::zero(),
            s2: T::zero(),
            s3_max: T::zero(),
            s4_lin: T::zero(),
            s4_sq: T::zero(),
            t1_sq: T::zero(),
            t2_lin: T::zero(),
            t2_sq: T::zero(),
            dof_time: T::zero(),
            time: T::zero(),
            steps: 0,
        }
    }

    pub fn push(&mut self, p: &LinearParts<T>) {
        let third: T = c(1.0 / 3.0);
        self.s1 += third * p.tau * (p.s1_old + p.s1_new);
        self.s2 += p.tau * p.s2;
        self.s3_max = self.s3_max.max(p.s3_old).max(p.s3_new);
        self.s4_lin += p.tau * p.s4.sqrt();
        self.s4_sq += p.tau * p.s4;
        self.t1_sq += p.t1_sq;
        self.t2_lin += p.t2;
        self.t2_sq += p.t2_sq;
        self.dof_time += p.tau * c(p.dofs as f64);
        self.time += p.tau;
        self.steps += 1;
    }

    pub fn eta_s_sq(&self) -> T {
        let a2 = self.alpha_t * self.alpha_t;
        self.e0 * self.e0
            + self.s1
            + self.s2
            + self.s3_max
            + (self.s4_lin * self.s4_lin).min(a2 * self.s4_sq)
    }

    pub fn eta_t_sq(&self) -> T {
        let a2 = self.alpha_t * self.alpha_t;
        self.t1_sq + (self.t2_lin * self.t2_lin).min(a2 * self.t2_sq)
    }

    pub fn eta(&self) -> T {
        (self.eta_s_sq() + self.eta_t_sq()).sqrt()
    }

    pub fn weighted_dofs(&self) -> T {
        if self.time > T::zero() {
            self.dof_time / self.time
        } else {
            T::zero()
        }
    }
}
