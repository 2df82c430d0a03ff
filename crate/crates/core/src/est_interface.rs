//! A posteriori estimators for the IMEX dG approximation of the two-subdomain
//! convection-diffusion-reaction problem with permeability and friction conditions on
//! the interface, and the whole-run continuation bound.
//!
//! Edges are sorted into the classes the estimator distinguishes: `Γ` (interior edges
//! off the interface, and Dirichlet edges), interface edges `Γ_i`, and Neumann edges
//! split pointwise into outflow (`a·n ≥ 0`) and inflow parts.

use crate::assembly::{edge_role, EdgeRole};
use crate::dgspace::{edge_quadrature, square_quadrature, DgFunction, View};
use crate::error::{Error, Result};
use crate::est_linear::{initial_error, TimeSlab};
use crate::mesh::Mesh;
use crate::problem::{InterfaceParams, ProblemData};
use crate::quadrature::time_rule;
use crate::scalar::{c, Real};

fn dot<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

fn norm<T: Real>(a: [T; 2]) -> T {
    dot(a, a).sqrt()
}

/// Interface parameters of the data, or `ρ = 1, r = 0` when there are none.
fn params<T: Real>(data: &ProblemData<T>) -> InterfaceParams<T> {
    data.interface.unwrap_or(InterfaceParams { rho: T::one(), r: T::zero(), w1: T::one(), w2: T::zero() })
}

fn side_weight<T: Real>(ip: &InterfaceParams<T>, label: u8) -> T {
    if label == 1 {
        ip.w1
    } else {
        ip.w2
    }
}

/// Data-dependent constants of the estimator and of the coercivity bound.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceConstants<T> {
    /// `𝒜_i = ‖a‖_{L∞(Γ_i)}` and `𝒜_N = ‖a‖_{L∞(Γ_N ∩ ∂Ω_out)}`.
    pub a_i: T,
    pub a_n: T,
    pub alpha_rw: T,
    pub alpha_rho: T,
    /// `α_L = max{2L, 2^μ L}` and `max{L, 2^{μ−1}L}`.
    pub alpha_l: T,
    pub l_half: T,
    pub mu: T,
    /// `essinf(−∇·a)`.
    pub essinf_neg_div: T,
    /// `½ essinf(−∇·a) − c_*α_rw𝒜_i(1 + 4c_*α_rw𝒜_iε⁻¹)`.
    pub margin: T,
}

/// `α_L = max{2L, 2^μ L}`.
pub fn alpha_l<T: Real>(l: T, mu: T) -> T {
    let two: T = c(2.0);
    (two * l).max(two.powf(mu) * l)
}

/// `½ essinf(−∇·a) − c_*α_rw𝒜_i(1 + 4c_*α_rw𝒜_iε⁻¹)`.
pub fn coercivity_margin<T: Real>(essinf_neg_div: T, c_star: T, alpha_rw: T, a_i: T, eps: T) -> T {
    let half: T = c(0.5);
    let four: T = c(4.0);
    half * essinf_neg_div - c_star * alpha_rw * a_i * (T::one() + four * c_star * alpha_rw * a_i / eps)
}

/// Outward `a·n` on a Neumann boundary point.
fn is_outflow<T: Real>(data: &ProblemData<T>, x: [T; 2], n: [T; 2], t: T) -> bool {
    dot((data.a)(x, t), n) >= T::zero()
}

impl<T: Real> InterfaceConstants<T> {
    /// Samples the coefficients on `mesh` at time `t`.
    pub fn new(mesh: &Mesh<T>, data: &ProblemData<T>, p: usize, t: T) -> Self {
        let nq = p + 3;
        let ip = params(data);
        let mut a_i = T::zero();
        let mut a_n = T::zero();
        for e in mesh.edges() {
            let role = edge_role(e, data);
            for (x, _) in edge_quadrature(e, nq) {
                let a = (data.a)(x, t);
                match role {
                    EdgeRole::Interface => a_i = a_i.max(norm(a)),
                    EdgeRole::Neumann if is_outflow(data, x, e.normal, t) => a_n = a_n.max(norm(a)),
                    _ => {}
                }
            }
        }
        let mut ess = T::infinity();
        for (cell, key) in mesh.keys().iter().enumerate() {
            for x in square_quadrature(mesh.key_origin(key), mesh.key_h(key), nq)
                .into_iter()
                .map(|(x, _)| x)
                .chain(mesh.corners(cell))
            {
                ess = ess.min(-(data.div_a)(x, t));
            }
        }
        let (l, mu) = data.nonlinear.as_ref().map(|n| (n.lipschitz, n.mu)).unwrap_or((T::zero(), T::zero()));
        let two: T = c(2.0);
        let alpha_rw = ip.alpha_rw();
        InterfaceConstants {
            a_i,
            a_n,
            alpha_rw,
            alpha_rho: ip.alpha_rho(a_i),
            alpha_l: alpha_l(l, mu),
            l_half: l.max(two.powf(mu - T::one()) * l),
            mu,
            essinf_neg_div: ess,
            margin: coercivity_margin(ess, data.c_star, alpha_rw, a_i, data.eps),
        }
    }

    /// Constant part of `σ_Ω`: `−essinf(−∇·a) + 2c_*α_rw𝒜_i(1 + 4c_*α_rw𝒜_iε⁻¹)`.
    pub fn sigma_shift(&self, c_star: T, eps: T) -> T {
        let two: T = c(2.0);
        let four: T = c(4.0);
        -self.essinf_neg_div
            + two * c_star * self.alpha_rw * self.a_i * (T::one() + four * c_star * self.alpha_rw * self.a_i / eps)
    }
}

/// Cellwise `η²_{S1,k}` of `u^k` on its own mesh, the slab supplying `u^{k−1}`.
pub fn s1_map_interface<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>) -> Vec<T> {
    let un = &slab.u_new;
    let sp = un.space();
    let mesh = sp.mesh();
    let nq = sp.degree() + 3;
    let eps = data.eps;
    let gamma = data.gamma(sp.degree());
    let t = slab.t_new();
    let inv = T::one() / slab.tau;
    let half: T = c(0.5);
    let ip = params(data);
    let mut cells = vec![T::zero(); mesh.num_cells()];

    let union = &slab.union;
    let uo = View::new(&slab.u_old, union);
    let vn = View::new(un, union);
    for (uc, key) in union.keys().iter().enumerate() {
        let k = vn.cell(uc);
        let h = mesh.h(k);
        let mut s = T::zero();
        for (x, w) in square_quadrature(union.key_origin(key), union.key_h(key), nq) {
            let e = un.eval_full(k, x);
            let old = uo.eval(uc, x);
            let r = slab.step_source(data, x, old) - (e.v - old) * inv + eps * e.lap - dot((data.a)(x, t), e.grad);
            s += w * r * r;
        }
        cells[k] += h * h / eps * s;
    }

    let view = View::new(un, mesh);
    for e in mesh.edges() {
        let role = edge_role(e, data);
        let mut sm = T::zero();
        let mut sp_ = T::zero();
        for (x, w) in edge_quadrature(e, nq) {
            let (m, p) = view.traces(e, x);
            let a = (data.a)(x, t);
            let an = dot(a, e.normal);
            match role {
                EdgeRole::Dirichlet => {
                    sm += w * gamma * eps / e.h * m.v * m.v;
                }
                EdgeRole::Neumann => {
                    let g = (data.g)(x, t);
                    let flux = eps * dot(m.grad, e.normal);
                    let r = if an >= T::zero() { g - flux } else { g - flux + an * m.v };
                    sm += w * e.h / eps * r * r;
                }
                EdgeRole::Interior => {
                    let p = p.unwrap();
                    let j = m.v - p.v;
                    let gj = dot(m.grad, e.normal) - dot(p.grad, e.normal);
                    let r = half * eps * gj;
                    let shared = (gamma * eps / e.h + e.h / eps * an * an) * j * j;
                    sm += w * (e.h / eps * r * r + half * shared);
                    sp_ += w * (e.h / eps * r * r + half * shared);
                }
                EdgeRole::Interface => {
                    let p = p.unwrap();
                    let q = e.plus.unwrap();
                    let (lm, lp) = (mesh.subdomain(e.minus), mesh.subdomain(q));
                    let avg = side_weight(&ip, lm) * m.v + side_weight(&ip, lp) * p.v;
                    let rm = an * m.v - eps * dot(m.grad, e.normal) + ip.rho * (p.v - m.v) - ip.r * an * avg;
                    let rp = -an * p.v + eps * dot(p.grad, e.normal) + ip.rho * (m.v - p.v) + ip.r * an * avg;
                    sm += w * e.h / eps * rm * rm;
                    sp_ += w * e.h / eps * rp * rp;
                }
            }
        }
        cells[e.minus] += sm;
        if let Some(q) = e.plus {
            cells[q] += sp_;
        }
    }
    cells
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Class {
    Gamma,
    Interface,
    NeumannOut,
    Other,
}

type EdgeSamples<T> = (Class, T, Vec<(T, T, T, T)>);
type CellSamples<T> = (Vec<(T, T)>, T, Vec<usize>);

/// Endpoint samples on the union mesh of one slab.
struct Samples<T> {
    /// Per union edge: class, `h_E`, and `(w, [u^{k−1}], [u^k], a·n)` at quadrature points.
    edges: Vec<EdgeSamples<T>>,
    /// Per union cell: `(u^{k−1}, u^k)` at sampling points, `‖∇·a‖_{L∞(K)}`, `K̃_E ∩ Γ`.
    cells: Vec<CellSamples<T>>,
    /// `(edge in Γ, multiplicity)` for the outflow-Neumann and interface patch sums.
    s3_edges: Vec<(usize, T)>,
    s4_edges: Vec<(usize, T)>,
}

impl<T: Real> Samples<T> {
    fn new(slab: &TimeSlab<T>, data: &ProblemData<T>) -> Self {
        let union = &slab.union;
        let nq = slab.u_new.space().degree() + 3;
        let t = slab.t_new();
        let uo = View::new(&slab.u_old, union);
        let un = View::new(&slab.u_new, union);
        let edges: Vec<_> = union
            .edges()
            .iter()
            .map(|e| {
                let class = match edge_role(e, data) {
                    EdgeRole::Interior | EdgeRole::Dirichlet => Class::Gamma,
                    EdgeRole::Interface => Class::Interface,
                    EdgeRole::Neumann if is_outflow(data, e.midpoint(), e.normal, t) => Class::NeumannOut,
                    EdgeRole::Neumann => Class::Other,
                };
                let pts = if class == Class::Gamma {
                    edge_quadrature(e, nq)
                        .into_iter()
                        .map(|(x, w)| (w, uo.jump(e, x), un.jump(e, x), dot((data.a)(x, t), e.normal)))
                        .collect()
                } else {
                    Vec::new()
                };
                (class, e.h, pts)
            })
            .collect();
        let patches: Vec<Vec<usize>> = (0..union.num_cells())
            .map(|k| union.patch(k).edges.into_iter().filter(|&f| edges[f].0 == Class::Gamma).collect())
            .collect();
        let cells = union
            .keys()
            .iter()
            .enumerate()
            .map(|(cell, key)| {
                let pts: Vec<[T; 2]> = square_quadrature(union.key_origin(key), union.key_h(key), nq)
                    .into_iter()
                    .map(|(x, _)| x)
                    .chain(union.corners(cell))
                    .collect();
                let div = pts.iter().map(|x| (data.div_a)(*x, t).abs()).fold(T::zero(), T::max);
                let vals = pts.iter().map(|x| (uo.eval(cell, *x), un.eval(cell, *x))).collect();
                (vals, div, patches[cell].clone())
            })
            .collect();
        let mut m3 = vec![T::zero(); edges.len()];
        let mut m4 = vec![T::zero(); edges.len()];
        for (ei, (class, _, _)) in edges.iter().enumerate() {
            let target = match class {
                Class::NeumannOut => &mut m3,
                Class::Interface => &mut m4,
                _ => continue,
            };
            for k in union.edge_element_patch(ei) {
                for &f in &patches[k] {
                    target[f] += T::one();
                }
            }
        }
        let collect = |m: Vec<T>| m.into_iter().enumerate().filter(|(_, v)| *v > T::zero()).collect();
        Samples { edges, cells, s3_edges: collect(m3), s4_edges: collect(m4) }
    }
}

/// Time-dependent parts at one time of the slab.
#[derive(Clone, Copy, Debug, Default)]
struct AtTime<T> {
    s2: T,
    s3: T,
    s4: T,
    s5: T,
    t4: T,
    sigma: T,
    jump_max: T,
}

/// Estimator parts of one slab `(t^{k−1}, t^k]`. Every `eta_*` is an unsquared norm.
#[derive(Clone, Debug)]
pub struct InterfaceParts<T> {
    pub k: usize,
    pub tau: T,
    pub t_old: T,
    pub dofs: usize,
    pub eta_s1: T,
    pub eta_s6: T,
    /// `η_{T1}`, `η_{T2}`, `η_{T3}` at `t^{k−1}`; each decays linearly to zero at `t^k`.
    pub eta_t1_max: T,
    pub eta_t2_max: T,
    pub eta_t3_max: T,
    pub times: [(T, T); 3],
    pub eta_s2_at: [T; 3],
    pub eta_s3_at: [T; 3],
    pub eta_s4_at: [T; 3],
    pub eta_s5_at: [T; 3],
    pub eta_t4_at: [T; 3],
    /// `∫η²_A`, `∫η²_B`, `∫(η_{T1}+η_{T2}+η_{T3})²`, `∫η²_{T4}` over the slab.
    pub a_sq: T,
    pub b_sq: T,
    pub t123_sq: T,
    pub t4_sq: T,
    /// `∫σ_Ω`, `∫σ₁` and `∫σ₂²` over the slab.
    pub sigma: T,
    pub sigma1: T,
    pub sigma2_sq: T,
    /// `Σ_{E⊂Γ} h_E‖[u]‖²` at both ends, each on its own mesh.
    pub jump_old: T,
    pub jump_new: T,
    /// `η²_{S1,k}` per cell of the new mesh.
    pub s1_cells: Vec<T>,
}

impl<T: Real> InterfaceParts<T> {
    pub fn t_new(&self) -> T {
        self.t_old + self.tau
    }

    /// `η̂²_T = ∫(η_{T1}+η_{T2}+η_{T3})² + T∫η²_{T4}`.
    pub fn hat(&self, final_time: T) -> T {
        self.t123_sq + final_time * self.t4_sq
    }
}

/// `Σ_{E⊂Γ} h_E‖[u]‖²` on `u`'s own mesh.
pub fn gamma_jump_sq<T: Real>(u: &DgFunction<T>, data: &ProblemData<T>) -> T {
    let mesh = u.mesh();
    let view = View::new(u, mesh);
    let nq = u.space().degree() + 3;
    let mut s = T::zero();
    for e in mesh.edges() {
        if !matches!(edge_role(e, data), EdgeRole::Interior | EdgeRole::Dirichlet) {
            continue;
        }
        for (x, w) in edge_quadrature(e, nq) {
            let j = view.jump(e, x);
            s += e.h * w * j * j;
        }
    }
    s
}

/// Computes all parts of one slab.
pub fn slab_parts_interface<T: Real>(
    slab: &TimeSlab<T>,
    data: &ProblemData<T>,
    k: &InterfaceConstants<T>,
) -> InterfaceParts<T> {
    let union = &slab.union;
    let p = slab.u_new.space().degree();
    let nq = p + 3;
    let eps = data.eps;
    let gamma = data.gamma(p);
    let inv = T::one() / slab.tau;
    let t_new = slab.t_new();
    let ip = params(data);
    let s1_cells = s1_map_interface(slab, data);
    let eta_s1 = s1_cells.iter().copied().sum::<T>().sqrt();
    let samples = Samples::new(slab, data);
    let uo = View::new(&slab.u_old, union);
    let un = View::new(&slab.u_new, union);

    let mut s6 = T::zero();
    for (_, h, pts) in samples.edges.iter().filter(|(cl, _, _)| *cl == Class::Gamma) {
        for (w, jo, jn, _) in pts {
            let j = (*jn - *jo) * inv;
            s6 += *h * *w * j * j;
        }
    }

    // u^k − u_h(t) = l_{k−1}(t) d with d = u^k − u^{k−1}.
    let mut t1 = T::zero();
    let mut t2 = T::zero();
    let mut t3 = T::zero();
    let se = eps.sqrt();
    for (cell, key) in union.keys().iter().enumerate() {
        for (x, w) in square_quadrature(union.key_origin(key), union.key_h(key), nq) {
            let go = uo.eval_grad(cell, x);
            let gn = un.eval_grad(cell, x);
            let d = gn.v - go.v;
            let a = (data.a)(x, t_new);
            let v = [
                se * (gn.grad[0] - go.grad[0]) - a[0] / se * d,
                se * (gn.grad[1] - go.grad[1]) - a[1] / se * d,
            ];
            t1 += w * dot(v, v);
        }
    }
    for e in union.edges() {
        match edge_role(e, data) {
            EdgeRole::Neumann => {
                for (x, w) in edge_quadrature(e, nq) {
                    let an = dot((data.a)(x, t_new), e.normal);
                    if an >= T::zero() {
                        let d = un.eval(e.minus, x) - uo.eval(e.minus, x);
                        t2 += w * an.abs() * d * d;
                    }
                }
            }
            EdgeRole::Interface => {
                let q = e.plus.unwrap();
                let (wm, wp) = (side_weight(&ip, union.subdomain(e.minus)), side_weight(&ip, union.subdomain(q)));
                for (x, w) in edge_quadrature(e, nq) {
                    let dm = un.eval(e.minus, x) - uo.eval(e.minus, x);
                    let dp = un.eval(q, x) - uo.eval(q, x);
                    let v = ip.rho.sqrt() * (dm - dp).abs()
                        + ip.r / ip.rho.sqrt() * norm((data.a)(x, t_new)) * (wm * dm + wp * dp).abs();
                    t3 += w * v * v;
                }
            }
            _ => {}
        }
    }
    let (t1, t2, t3) = (t1.sqrt(), t2.sqrt(), t3.sqrt());

    let two: T = c(2.0);
    let shift = k.sigma_shift(data.c_star, eps);
    let at = |t: T| -> AtTime<T> {
        let (l0, l1) = slab.weights(t);
        let mut e_sq = vec![T::zero(); samples.edges.len()];
        let mut e_l2 = vec![T::zero(); samples.edges.len()];
        let mut e_max = vec![T::zero(); samples.edges.len()];
        let mut s2 = T::zero();
        for (i, (_, h, pts)) in samples.edges.iter().enumerate() {
            for (w, jo, jn, an) in pts {
                let j = l0 * *jo + l1 * *jn;
                s2 += *w * (gamma * eps / *h + *h / eps * *an * *an) * j * j;
                e_l2[i] += *w * j * j;
                e_max[i] = e_max[i].max(j.abs());
            }
            e_sq[i] = *h * e_l2[i];
        }
        let jump_max = e_max.iter().copied().fold(T::zero(), T::max);
        let s3: T = samples.s3_edges.iter().map(|(f, m)| *m * e_l2[*f]).sum::<T>() * k.a_n;
        let s4: T = samples.s4_edges.iter().map(|(f, m)| *m * e_l2[*f]).sum::<T>() * k.alpha_rho;
        let mut s5 = T::zero();
        let mut u_max = T::zero();
        for (vals, div, patch) in &samples.cells {
            let um = vals.iter().map(|(a, b)| (l0 * *a + l1 * *b).abs()).fold(T::zero(), T::max);
            u_max = u_max.max(um);
            let jm = patch.iter().map(|&f| e_max[f]).fold(T::zero(), T::max);
            let sk = k.l_half * (T::one() + two * um + jm).powf(k.mu) + *div;
            let js: T = patch.iter().map(|&f| e_sq[f]).sum();
            s5 += sk * sk * js;
        }
        let mut t4 = T::zero();
        for (cell, key) in union.keys().iter().enumerate() {
            for (x, w) in square_quadrature(union.key_origin(key), union.key_h(key), nq) {
                let vo = uo.eval(cell, x);
                let vn = un.eval(cell, x);
                let uh = l0 * vo + l1 * vn;
                let r = slab.source_at(data, x, t, uh) - slab.step_source(data, x, vo) - (data.div_a)(x, t) * l0 * (vn - vo);
                t4 += w * r * r;
            }
        }
        let sigma = k.alpha_l * (T::one() + two * u_max + jump_max).powf(k.mu) + shift;
        AtTime { s2: s2.sqrt(), s3: s3.sqrt(), s4: s4.sqrt(), s5: s5.sqrt(), t4: t4.sqrt(), sigma, jump_max }
    };

    let rule = time_rule(slab.t_old, t_new);
    let times = [rule[0], rule[1], rule[2]];
    let eta_s6 = s6.sqrt();
    let mut out = InterfaceParts {
        k: slab.k,
        tau: slab.tau,
        t_old: slab.t_old,
        dofs: slab.dofs(),
        eta_s1,
        eta_s6,
        eta_t1_max: t1,
        eta_t2_max: t2,
        eta_t3_max: t3,
        times,
        eta_s2_at: [T::zero(); 3],
        eta_s3_at: [T::zero(); 3],
        eta_s4_at: [T::zero(); 3],
        eta_s5_at: [T::zero(); 3],
        eta_t4_at: [T::zero(); 3],
        a_sq: T::zero(),
        b_sq: T::zero(),
        t123_sq: T::zero(),
        t4_sq: T::zero(),
        sigma: T::zero(),
        sigma1: T::zero(),
        sigma2_sq: T::zero(),
        jump_old: gamma_jump_sq(&slab.u_old, data),
        jump_new: gamma_jump_sq(&slab.u_new, data),
        s1_cells,
    };
    let one: T = T::one();
    for (i, (t, w)) in times.iter().enumerate() {
        let v = at(*t);
        let (l0, _) = slab.weights(*t);
        out.eta_s2_at[i] = v.s2;
        out.eta_s3_at[i] = v.s3;
        out.eta_s4_at[i] = v.s4;
        out.eta_s5_at[i] = v.s5;
        out.eta_t4_at[i] = v.t4;
        let tt = l0 * (t1 + t2 + t3);
        let ea = eta_s1 + v.s2 + v.s3 + v.s4 + tt;
        let eb = v.s5 + eta_s6 + v.t4;
        out.a_sq += *w * ea * ea;
        out.b_sq += *w * eb * eb;
        out.t123_sq += *w * tt * tt;
        out.t4_sq += *w * v.t4 * v.t4;
        out.sigma += *w * v.sigma;
        let sj = k.alpha_l * v.jump_max;
        if k.mu < one {
            out.sigma1 += *w * sj;
        } else {
            out.sigma2_sq += *w * sj * sj;
        }
    }
    out
}

/// Run-level sums of the slab parts.
#[derive(Clone, Debug)]
pub struct InterfaceTotals<T> {
    pub e0_sq: T,
    pub a_sq: T,
    pub b_sq: T,
    pub jump_sup: T,
    pub sigma: T,
    pub sigma1: T,
    pub sigma2_sq: T,
    pub time: T,
    pub steps: usize,
}

impl<T: Real> InterfaceTotals<T> {
    pub fn new(u0: &DgFunction<T>, data: &ProblemData<T>) -> Self {
        let e0 = initial_error(u0, data);
        InterfaceTotals {
            e0_sq: e0 * e0,
            a_sq: T::zero(),
            b_sq: T::zero(),
            jump_sup: gamma_jump_sq(u0, data),
            sigma: T::zero(),
            sigma1: T::zero(),
            sigma2_sq: T::zero(),
            time: T::zero(),
            steps: 0,
        }
    }

    pub fn push(&mut self, p: &InterfaceParts<T>) {
        self.a_sq += p.a_sq;
        self.b_sq += p.b_sq;
        self.jump_sup = self.jump_sup.max(p.jump_old).max(p.jump_new);
        self.sigma += p.sigma;
        self.sigma1 += p.sigma1;
        self.sigma2_sq += p.sigma2_sq;
        self.time += p.tau;
        self.steps += 1;
    }

    /// `φ = ‖e(0)‖² + ∫η²_A + T∫η²_B + sup Σ h_E‖[u_h]‖²` with `T` the elapsed time.
    pub fn phi(&self) -> T {
        self.e0_sq + self.a_sq + self.time * self.b_sq + self.jump_sup
    }

    /// Whole-run bound with the generic constants `C = K = 1`.
    pub fn bound(&self, k: &InterfaceConstants<T>) -> InterfaceBound<T> {
        let phi = self.phi();
        let ln_g = self.sigma;
        let cc = T::one();
        let delta = interface_delta(cc, T::one(), k.alpha_l, k.mu, self.time, ln_g, phi, self.sigma1, self.sigma2_sq);
        let g = ln_g.exp();
        InterfaceBound {
            phi,
            ln_g,
            delta,
            bound: (g * phi).sqrt(),
            bound_delta: delta.map(|d| (d * g * phi).sqrt()),
            margin: k.margin,
        }
    }
}

/// Result of the whole-run continuation.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct InterfaceBound<T> {
    pub phi: T,
    /// `log G = ∫σ_Ω`; `G` itself overflows easily for small `ε`.
    pub ln_g: T,
    pub delta: Option<T>,
    /// `√(Gφ)`.
    pub bound: T,
    /// `√(δGφ)`, when `δ` exists.
    pub bound_delta: Option<T>,
    pub margin: T,
}

/// `F(δ) = Cψ(δ)(φ + (δGφ)^{(1+μ)/2}∫σ₁) − δφ` with
/// `ψ(δ) = exp(T^{1−μ/2}(∫σ₂²)^{1/2}(δGφ)^{(μ−1)/2} + Kα_L T^{1−μ/2}(δGφ)^{μ/2})`,
/// evaluated with `G = exp(ln_g)`.
#[allow(clippy::too_many_arguments)]
pub fn interface_residual<T: Real>(
    delta: T,
    cc: T,
    kk: T,
    alpha_l: T,
    mu: T,
    time: T,
    ln_g: T,
    phi: T,
    sigma1: T,
    sigma2_sq: T,
) -> T {
    let half: T = c(0.5);
    let x = delta * ln_g.exp() * phi;
    let tp = time.powf(T::one() - half * mu);
    let first = if sigma2_sq > T::zero() { tp * sigma2_sq.sqrt() * x.powf(half * (mu - T::one())) } else { T::zero() };
    let second = if alpha_l > T::zero() { kk * alpha_l * tp * x.powf(half * mu) } else { T::zero() };
    let psi = (first + second).exp();
    let extra = if sigma1 > T::zero() { x.powf(half * (T::one() + mu)) * sigma1 } else { T::zero() };
    cc * psi * (phi + extra) - delta * phi
}

/// Smallest root `δ > C` of the whole-run δ-equation, searched on `(C, 10¹⁶)`.
/// `φ = 0` returns `δ = C`.
#[allow(clippy::too_many_arguments)]
pub fn interface_delta<T: Real>(
    cc: T,
    kk: T,
    alpha_l: T,
    mu: T,
    time: T,
    ln_g: T,
    phi: T,
    sigma1: T,
    sigma2_sq: T,
) -> Option<T> {
    if phi <= T::zero() {
        return Some(cc);
    }
    let f = |d: T| interface_residual(d, cc, kk, alpha_l, mu, time, ln_g, phi, sigma1, sigma2_sq);
    let hi: T = c(1e16);
    let n = 400;
    let ratio = (hi / cc).ln() / c(n as f64);
    let mut lo = cc;
    let f0 = f(lo);
    if !f0.is_finite() {
        return None;
    }
    if f0 <= T::zero() {
        return Some(cc);
    }
    let mut best = (f0 / (lo * phi), lo);
    for i in 1..=n {
        let d = cc * (ratio * c(i as f64)).exp();
        let fd = f(d);
        if !fd.is_finite() {
            break;
        }
        if fd <= T::zero() {
            let (mut a, mut b) = (lo, d);
            for _ in 0..200 {
                let m = half_point(a, b);
                if f(m) > T::zero() {
                    a = m;
                } else {
                    b = m;
                }
                if (b - a) <= crate::scalar::rel_tol::<T>() * b {
                    break;
                }
            }
            return Some(b);
        }
        let rel = fd / (d * phi);
        if rel < best.0 {
            best = (rel, d);
        }
        lo = d;
    }
    if best.0 <= c(1e-9) {
        Some(best.1)
    } else {
        None
    }
}

fn half_point<T: Real>(a: T, b: T) -> T {
    (a + b) * c(0.5)
}

/// Rejects data the estimator cannot handle.
pub fn check_interface_data<T: Real>(data: &ProblemData<T>) -> Result<()> {
    if let Some(ip) = data.interface {
        if ip.rho <= T::zero() {
            return Err(Error::Input("permeability must be positive".into()));
        }
        if ip.r < T::zero() || ip.r > T::one() {
            return Err(Error::Input("friction coefficient must lie in [0, 1]".into()));
        }
        if ip.w1 < T::zero() || ip.w2 < T::zero() || (ip.w1 + ip.w2 - T::one()).abs() > c(1e-12) {
            return Err(Error::Input("interface weights must be non-negative and sum to one".into()));
        }
    }
    Ok(())
}
