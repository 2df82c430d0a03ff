//! Assembly of the interior-penalty dG operator, loads, and the time-step solves.

use std::sync::Arc;

use crate::dgspace::{edge_quadrature, transfer, DgFunction, DgSpace, Shapes, View};
use crate::error::Result;
use crate::linsolve::{BlockMatrix, Factored};
use crate::mesh::{Edge, EdgeKind};
use crate::problem::ProblemData;
use crate::scalar::{c, Real};

/// How an edge enters the bilinear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeRole {
    /// Penalty, symmetric flux terms and upwinding between two cells.
    Interior,
    Dirichlet,
    Neumann,
    /// Permeability and weighted-average terms.
    Interface,
}

pub fn edge_role<T: Real>(e: &Edge<T>, data: &ProblemData<T>) -> EdgeRole {
    match e.kind {
        EdgeKind::Interior => EdgeRole::Interior,
        EdgeKind::Interface if data.interface.is_some() => EdgeRole::Interface,
        EdgeKind::Interface => EdgeRole::Interior,
        EdgeKind::Boundary(_, crate::mesh::BoundaryKind::Dirichlet) => EdgeRole::Dirichlet,
        EdgeKind::Boundary(_, crate::mesh::BoundaryKind::Neumann) => EdgeRole::Neumann,
    }
}

fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

/// Matrix of `B(t; ·, ·) + K_h(·, ·)` (with the interface terms when the data carry
/// interface parameters). Entry `(i, j)` is the form with trial `φ_j` and test `φ_i`.
pub fn assemble_b_kh<T: Real>(space: &Arc<DgSpace<T>>, data: &ProblemData<T>, t: T) -> BlockMatrix<T> {
    let mesh = space.mesh();
    let p = space.degree();
    let n = space.nloc();
    let nq = p + 2;
    let eps = data.eps;
    let gamma = data.gamma(p);
    let mut mat = BlockMatrix::new(mesh.num_cells(), n);
    let mut sh = Shapes::new(n);
    let mut sm = Shapes::new(n);
    let mut sp = Shapes::new(n);

    for cell in 0..mesh.num_cells() {
        let key = mesh.key(cell);
        let quad = space.key_quadrature(&key, nq);
        let blk = mat.block(cell, cell);
        for (x, w) in quad {
            space.shapes(cell, x, &mut sh);
            let a = (data.a)(x, t);
            let react = (data.b)(x, t) - (data.div_a)(x, t);
            for i in 0..n {
                let adv = a[0] * sh.dx[i] + a[1] * sh.dy[i];
                for j in 0..n {
                    let v = eps * (sh.dx[j] * sh.dx[i] + sh.dy[j] * sh.dy[i]) - sh.v[j] * adv
                        + react * sh.v[j] * sh.v[i];
                    blk[i * n + j] += w * v;
                }
            }
        }
    }

    let half: T = c(0.5);
    for e in mesh.edges() {
        let role = edge_role(e, data);
        let sigma = gamma * eps / e.h;
        let nrm = e.normal;
        match e.plus {
            None => {
                let k = e.minus;
                for (x, w) in edge_quadrature(e, nq) {
                    space.shapes(k, x, &mut sm);
                    let s = dot((data.a)(x, t), nrm);
                    let blk = mat.block(k, k);
                    for i in 0..n {
                        let dni = sm.dx[i] * nrm[0] + sm.dy[i] * nrm[1];
                        for j in 0..n {
                            let dnj = sm.dx[j] * nrm[0] + sm.dy[j] * nrm[1];
                            let mut v = T::zero();
                            if role == EdgeRole::Dirichlet {
                                v += sigma * sm.v[j] * sm.v[i]
                                    - eps * (dnj * sm.v[i] + dni * sm.v[j]);
                            }
                            if s >= T::zero() {
                                v += s * sm.v[j] * sm.v[i];
                            }
                            blk[i * n + j] += w * v;
                        }
                    }
                }
            }
            Some(q) => {
                let k = e.minus;
                let weights = data.interface.map(|ip| {
                    let wm = if mesh.subdomain(k) == 1 { ip.w1 } else { ip.w2 };
                    let wp = if mesh.subdomain(q) == 1 { ip.w1 } else { ip.w2 };
                    (ip, wm, wp)
                });
                for (x, w) in edge_quadrature(e, nq) {
                    space.shapes(k, x, &mut sm);
                    space.shapes(q, x, &mut sp);
                    let s = dot((data.a)(x, t), nrm);
                    let sides = [(&sm, k, T::one()), (&sp, q, -T::one())];
                    for (sr, cr, gr) in sides {
                        for (ss, cs, gs) in sides {
                            let blk = mat.block(cr, cs);
                            for i in 0..n {
                                let dni = sr.dx[i] * nrm[0] + sr.dy[i] * nrm[1];
                                for j in 0..n {
                                    let dnj = ss.dx[j] * nrm[0] + ss.dy[j] * nrm[1];
                                    let mut v = T::zero();
                                    match role {
                                        EdgeRole::Interface => {
                                            let (ip, wm, wp) = weights.unwrap();
                                            let wt = if gs > T::zero() { wm } else { wp };
                                            v += ip.rho * gr * gs * ss.v[j] * sr.v[i]
                                                + ip.r * wt * ss.v[j] * s * gr * sr.v[i];
                                        }
                                        _ => {
                                            v += sigma * gr * gs * ss.v[j] * sr.v[i]
                                                - half * eps * (dnj * gr * sr.v[i] + dni * gs * ss.v[j]);
                                            let up = if s >= T::zero() { gs > T::zero() } else { gs < T::zero() };
                                            if up {
                                                v += s * ss.v[j] * gr * sr.v[i];
                                            }
                                        }
                                    }
                                    blk[i * n + j] += w * v;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    mat
}

/// Source vector `(f(t), v)`; with the orthonormal basis these are the coefficients of
/// the L² projection of `f(t)`.
pub fn assemble_source<T: Real>(space: &Arc<DgSpace<T>>, data: &ProblemData<T>, t: T) -> Vec<T> {
    let mesh = space.mesh();
    let n = space.nloc();
    let nq = space.degree() + 3;
    let mut b = vec![T::zero(); space.ndofs()];
    let mut sh = Shapes::new(n);
    for cell in 0..mesh.num_cells() {
        let key = mesh.key(cell);
        let r = space.dofs(cell);
        for (x, w) in space.key_quadrature(&key, nq) {
            let fx = (data.f)(x, t) * w;
            space.shapes(cell, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                b[d] += fx * sh.v[m];
            }
        }
    }
    b
}

/// Neumann load `∫_{Γ_N} g(t) v`.
pub fn assemble_neumann<T: Real>(space: &Arc<DgSpace<T>>, data: &ProblemData<T>, t: T) -> Vec<T> {
    let mesh = space.mesh();
    let n = space.nloc();
    let nq = space.degree() + 3;
    let mut b = vec![T::zero(); space.ndofs()];
    let mut sh = Shapes::new(n);
    for e in mesh.edges().iter().filter(|e| e.is_neumann()) {
        let r = space.dofs(e.minus);
        for (x, w) in edge_quadrature(e, nq) {
            let gx = (data.g)(x, t) * w;
            space.shapes(e.minus, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                b[d] += gx * sh.v[m];
            }
        }
    }
    b
}

/// Load vector `(f(t), v) + ∫_{Γ_N} g(t) v`.
pub fn assemble_load<T: Real>(space: &Arc<DgSpace<T>>, data: &ProblemData<T>, t: T) -> Vec<T> {
    let mut b = assemble_source(space, data, t);
    for (x, y) in b.iter_mut().zip(assemble_neumann(space, data, t)) {
        *x += y;
    }
    b
}

/// `(f(t, u_old), v)` on `space`, integrating over the union with the mesh of `u_old`.
pub fn assemble_reaction<T: Real>(
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    u_old: &DgFunction<T>,
    t: T,
) -> Vec<T> {
    let nl = data.nonlinear.as_ref().expect("reaction load needs a nonlinearity");
    let mesh = space.mesh();
    let union = mesh.union(u_old.mesh()).expect("meshes over different roots");
    let view = View::new(u_old, &union);
    let n = space.nloc();
    let nq = space.degree() + 3;
    let mut b = vec![T::zero(); space.ndofs()];
    let mut sh = Shapes::new(n);
    for (uc, key) in union.keys().iter().enumerate() {
        let cell = mesh.locate(key).unwrap();
        let r = space.dofs(cell);
        for (x, w) in space.key_quadrature(key, nq) {
            let fx = (nl.f)(x, t, view.eval(uc, x)) * w;
            space.shapes(cell, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                b[d] += fx * sh.v[m];
            }
        }
    }
    b
}

/// Stationary dG solution of `B + K_h = (f, v)` at time `t`.
pub fn solve_stationary<T: Real>(
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t: T,
) -> Result<DgFunction<T>> {
    let mat = assemble_b_kh(space, data, t);
    let rhs = assemble_load(space, data, t);
    let x = Factored::new(&mat)?.solve(&rhs)?;
    Ok(DgFunction::from_coeffs(space, x))
}

/// Which time-stepping scheme a step uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// Backward Euler with the source at the new time.
    BackwardEuler,
    /// Implicit convection-diffusion, explicit reaction `f(t^k, u^k)`.
    Imex,
}

/// Reusable factorisation of `I/τ + B + K_h` keyed by space, `τ` and time.
pub struct StepCache<T: Real> {
    key: Option<(usize, u64, u64)>,
    fact: Option<Factored<T>>,
}

impl<T: Real> Default for StepCache<T> {
    fn default() -> Self {
        StepCache { key: None, fact: None }
    }
}

impl<T: Real> StepCache<T> {
    fn get(
        &mut self,
        space: &Arc<DgSpace<T>>,
        data: &ProblemData<T>,
        tau: T,
        t: T,
    ) -> Result<&Factored<T>> {
        let tkey = if data.steady_coefficients { 0 } else { crate::scalar::f(t).to_bits() };
        let key = (Arc::as_ptr(space) as usize, crate::scalar::f(tau).to_bits(), tkey);
        if self.key != Some(key) || self.fact.is_none() {
            let mut mat = assemble_b_kh(space, data, t);
            mat.add_identity(T::one() / tau);
            self.fact = Some(Factored::new(&mat)?);
            self.key = Some(key);
        }
        Ok(self.fact.as_ref().unwrap())
    }
}

/// Result of one time step together with the pieces the estimators reuse.
#[derive(Clone, Debug)]
pub struct StepOutput<T> {
    pub u: DgFunction<T>,
    /// Projected source of the step: `I f(t_new)`, minus `I f(t_old, u_old)` for IMEX.
    pub source: DgFunction<T>,
    /// `u_old` projected onto the new space.
    pub proj: DgFunction<T>,
}

/// One step from `u_old` (on any mesh over the same roots) to `space` at `t_new = t_old + τ`.
pub fn time_step<T: Real>(
    kind: StepKind,
    u_old: &DgFunction<T>,
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t_old: T,
    tau: T,
    cache: &mut StepCache<T>,
) -> Result<DgFunction<T>> {
    time_step_full(kind, u_old, space, data, t_old, tau, cache).map(|o| o.u)
}

pub fn time_step_full<T: Real>(
    kind: StepKind,
    u_old: &DgFunction<T>,
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t_old: T,
    tau: T,
    cache: &mut StepCache<T>,
) -> Result<StepOutput<T>> {
    let t_new = t_old + tau;
    let proj = transfer(u_old, space);
    let mut src = assemble_source(space, data, t_new);
    if kind == StepKind::Imex {
        let react = assemble_reaction(space, data, u_old, t_old);
        for (r, q) in src.iter_mut().zip(react) {
            *r -= q;
        }
    }
    let neu = assemble_neumann(space, data, t_new);
    let rhs: Vec<T> = src
        .iter()
        .zip(&neu)
        .zip(&proj.coeffs)
        .map(|((s, g), u)| *s + *g + *u / tau)
        .collect();
    let fact = cache.get(space, data, tau, t_new)?;
    let x = fact.solve(&rhs)?;
    Ok(StepOutput {
        u: DgFunction::from_coeffs(space, x),
        source: DgFunction::from_coeffs(space, src),
        proj,
    })
}

/// Backward Euler step of the linear problem.
pub fn backward_euler_step<T: Real>(
    u_old: &DgFunction<T>,
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t_old: T,
    tau: T,
) -> Result<DgFunction<T>> {
    time_step(StepKind::BackwardEuler, u_old, space, data, t_old, tau, &mut StepCache::default())
}

/// IMEX step with the reaction lagged at `t_old`.
pub fn imex_step<T: Real>(
    u_old: &DgFunction<T>,
    space: &Arc<DgSpace<T>>,
    data: &ProblemData<T>,
    t_old: T,
    tau: T,
) -> Result<DgFunction<T>> {
    time_step(StepKind::Imex, u_old, space, data, t_old, tau, &mut StepCache::default())
}

/// Bilinear form value `B(t; u, v) + K_h(u, v)` through the assembled matrix.
pub fn form_value<T: Real>(
    mat: &BlockMatrix<T>,
    u: &DgFunction<T>,
    v: &DgFunction<T>,
) -> T {
    let au = mat.matvec(&u.coeffs);
    au.iter().zip(&v.coeffs).map(|(a, b)| *a * *b).sum()
}
