//! A posteriori estimators and the continuation accumulator for the IMEX dG
//! approximation of `u_t − εΔu + a·∇u + f(u) = 0`, `f(u) = f_0 − u²`.
//!
//! `η_A = l_k η_{S1,k} + l_{k+1} η_{S1,k+1} + η_{S2} + η_{T1}` and
//! `η_B = η_{S3} + η_{S4} + η_{T2}` are integrated over each slab with the three-point
//! Gauss rule; `G = exp ∫σ_Ω` and `φ` feed the δ-equation that decides whether the
//! bound can be continued over the slab.

use crate::dgspace::{edge_quadrature, square_quadrature, DgFunction, View};
use crate::est_linear::{initial_error, jump_sq, s1_map, time_parts_at, union_space_parts, TimeSlab};
use crate::ode_blowup::DeltaEquation;
use crate::problem::ProblemData;
use crate::quadrature::time_rule;
use crate::scalar::{c, Real};

/// `η_I = (‖u₀ − u_h⁰‖² + Σ_E h_E‖[u_h⁰]‖²)^{1/2}`.
pub fn eta_i<T: Real>(u0: &DgFunction<T>, data: &ProblemData<T>) -> T {
    let e = initial_error(u0, data);
    (e * e + jump_sq(u0)).sqrt()
}

type EdgeSamples<T> = (T, Vec<(T, T, T)>);

/// Endpoint values of `u_h` and its jumps on the union mesh of a slab, so that
/// `u_h(t)` and `[u_h(t)]` can be formed at any time by linear interpolation.
struct Samples<T> {
    /// `(u^k, u^{k+1})` at the sampling points of each union cell.
    cells: Vec<Vec<(T, T)>>,
    /// `h_E`, and `(w, [u^k], [u^{k+1}])` at the quadrature points of each union edge.
    edges: Vec<EdgeSamples<T>>,
    /// Edge patch of each union cell.
    patches: Vec<Vec<usize>>,
}

impl<T: Real> Samples<T> {
    fn new(slab: &TimeSlab<T>) -> Self {
        let union = &slab.union;
        let nq = slab.u_new.space().degree() + 3;
        let uo = View::new(&slab.u_old, union);
        let un = View::new(&slab.u_new, union);
        let cells = union
            .keys()
            .iter()
            .enumerate()
            .map(|(cell, key)| {
                square_quadrature(union.key_origin(key), union.key_h(key), nq)
                    .into_iter()
                    .map(|(x, _)| x)
                    .chain(union.corners(cell))
                    .map(|x| (uo.eval(cell, x), un.eval(cell, x)))
                    .collect()
            })
            .collect();
        let edges = union
            .edges()
            .iter()
            .map(|e| {
                if e.is_neumann() {
                    return (e.h, Vec::new());
                }
                let pts = edge_quadrature(e, nq)
                    .into_iter()
                    .map(|(x, w)| (w, uo.jump(e, x), un.jump(e, x)))
                    .collect();
                (e.h, pts)
            })
            .collect();
        let patches = (0..union.num_cells()).map(|k| union.patch(k).edges).collect();
        Samples { cells, edges, patches }
    }

    /// `(η_{S3}(t), σ_Ω(t), σ_K(t) per union cell)` for the weights `(l_k, l_{k+1})`.
    fn at(&self, l0: T, l1: T) -> (T, T, Vec<T>) {
        let two: T = c(2.0);
        let mut e_sq = Vec::with_capacity(self.edges.len());
        let mut e_max = Vec::with_capacity(self.edges.len());
        for (h, pts) in &self.edges {
            let (mut s, mut m) = (T::zero(), T::zero());
            for (w, jo, jn) in pts {
                let j = l0 * *jo + l1 * *jn;
                s += *w * j * j;
                m = m.max(j.abs());
            }
            e_sq.push(*h * s);
            e_max.push(m);
        }
        let gamma_max = e_max.iter().copied().fold(T::zero(), T::max);
        let mut u_max = T::zero();
        let mut s3 = T::zero();
        let mut sigma = Vec::with_capacity(self.cells.len());
        for (pts, patch) in self.cells.iter().zip(&self.patches) {
            let um = pts.iter().map(|(a, b)| (l0 * *a + l1 * *b).abs()).fold(T::zero(), T::max);
            u_max = u_max.max(um);
            let jm = patch.iter().map(|&e| e_max[e]).fold(T::zero(), T::max);
            let sk = two * um + jm;
            let js: T = patch.iter().map(|&e| e_sq[e]).sum();
            s3 += sk * sk * js;
            sigma.push(sk);
        }
        (s3.sqrt(), two * u_max + gamma_max, sigma)
    }
}

/// Estimator parts of one slab. Every `eta_*` is an unsquared norm.
#[derive(Clone, Debug)]
pub struct BlowupParts<T> {
    pub k: usize,
    pub tau: T,
    pub t_old: T,
    pub dofs: usize,
    pub eta_s1_old: T,
    pub eta_s1_new: T,
    pub eta_s2: T,
    pub eta_s4: T,
    /// Gauss nodes and weights in time.
    pub times: [(T, T); 3],
    pub eta_t1_at: [T; 3],
    pub eta_t2_at: [T; 3],
    pub eta_s3_at: [T; 3],
    pub sigma_at: [T; 3],
    /// `∫η²_A`, `∫η_B`, `∫η²_B`, `∫η²_{T2}` and `∫σ_Ω` over the slab.
    pub a_sq: T,
    pub b: T,
    pub b_sq: T,
    pub t2_sq: T,
    pub sigma: T,
    /// `(Σ_E h_E‖[u]‖²)^{1/2}` at both ends of the slab.
    pub jump_old: T,
    pub jump_new: T,
    /// `η²_{S1,k+1}` per cell of the new mesh.
    pub s1_cells: Vec<T>,
    /// `σ_K(t^{k+1})` per union cell.
    pub sigma_cells: Vec<T>,
}

impl<T: Real> BlowupParts<T> {
    pub fn t_new(&self) -> T {
        self.t_old + self.tau
    }

    pub fn t2(&self) -> T {
        self.times.iter().zip(&self.eta_t2_at).map(|((_, w), v)| *w * *v).sum()
    }
}

/// Computes all parts of one slab. `s1_old` reuses `η_{S1,k}` from the previous slab.
pub fn slab_parts_blowup<T: Real>(slab: &TimeSlab<T>, data: &ProblemData<T>, s1_old: Option<T>) -> BlowupParts<T> {
    let map_new = s1_map(&slab.u_new, &slab.a_new, data, slab.t_new());
    let eta_s1_new = map_new.total();
    let eta_s1_old = s1_old.unwrap_or_else(|| s1_map(&slab.u_old, &slab.a_old, data, slab.t_old).total());
    let (s2, s4) = union_space_parts(slab, data);
    let (eta_s2, eta_s4) = (s2.sqrt(), s4.sqrt());
    let samples = Samples::new(slab);
    let rule = time_rule(slab.t_old, slab.t_new());
    let times = [rule[0], rule[1], rule[2]];
    let mut eta_t1_at = [T::zero(); 3];
    let mut eta_t2_at = [T::zero(); 3];
    let mut eta_s3_at = [T::zero(); 3];
    let mut sigma_at = [T::zero(); 3];
    let (mut a_sq, mut b, mut b_sq, mut t2_sq, mut sigma) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (i, (t, w)) in times.iter().enumerate() {
        let (l0, l1) = slab.weights(*t);
        let (t1sq, t2) = time_parts_at(slab, data, *t);
        let (s3, sg, _) = samples.at(l0, l1);
        eta_t1_at[i] = t1sq.sqrt();
        eta_t2_at[i] = t2;
        eta_s3_at[i] = s3;
        sigma_at[i] = sg;
        let ea = l0 * eta_s1_old + l1 * eta_s1_new + eta_s2 + eta_t1_at[i];
        let eb = s3 + eta_s4 + t2;
        a_sq += *w * ea * ea;
        b += *w * eb;
        b_sq += *w * eb * eb;
        t2_sq += *w * t2 * t2;
        sigma += *w * sg;
    }
    let (_, _, sigma_cells) = samples.at(T::zero(), T::one());
    BlowupParts {
        k: slab.k,
        tau: slab.tau,
        t_old: slab.t_old,
        dofs: slab.dofs(),
        eta_s1_old,
        eta_s1_new,
        eta_s2,
        eta_s4,
        times,
        eta_t1_at,
        eta_t2_at,
        eta_s3_at,
        sigma_at,
        a_sq,
        b,
        b_sq,
        t2_sq,
        sigma,
        jump_old: jump_sq(&slab.u_old).sqrt(),
        jump_new: jump_sq(&slab.u_new).sqrt(),
        s1_cells: map_new.cells,
        sigma_cells,
    }
}

/// Norm in which the continuation argument is carried out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Continuation {
    /// `L∞(L²)`: `K²ε⁻¹τG²φ²δ² − log δ = 0`.
    LinfL2,
    /// `L²(H¹)`: `Kε^{-1/2}τ^{1/2}Gφδ − log δ = 0`.
    L2H1,
}

/// Smallest root `δ > 1` of the δ-equation of `variant`, if it exists.
pub fn continuation_delta<T: Real>(variant: Continuation, kk: T, eps: T, tau: T, g: T, phi: T) -> Option<T> {
    let gp = g * phi;
    let eq = match variant {
        Continuation::LinfL2 => DeltaEquation::new(vec![(c(2.0), kk * kk / eps * tau * gp * gp)]),
        Continuation::L2H1 => DeltaEquation::new(vec![(T::one(), kk / eps.sqrt() * tau.sqrt() * gp)]),
    };
    eq.solve()
}

/// Outcome of one slab of the accumulator.
#[derive(Clone, Copy, Debug)]
pub struct BlowupStep<T> {
    pub k: usize,
    pub tau: T,
    pub t: T,
    pub g: T,
    pub phi: T,
    pub delta: Option<T>,
    pub psi: T,
}

/// The recursion `φ_{k+1}`, `G_{k+1}`, `δ_{k+1}`, `ψ_{k+1} = δGφ` over accepted slabs.
#[derive(Clone, Debug)]
pub struct BlowupAccumulator<T> {
    pub variant: Continuation,
    pub eps: T,
    /// Generic constants `C` and `K`.
    pub c: T,
    pub k: T,
    pub psi: T,
    pub psi_sum: T,
    pub jump_max: T,
    pub steps: usize,
    pub time: T,
}

impl<T: Real> BlowupAccumulator<T> {
    /// Starts from `ψ_0 = Cη_I` with the jump term of the initial solution.
    pub fn new(variant: Continuation, eps: T, eta_i: T, jump0: T) -> Self {
        BlowupAccumulator {
            variant,
            eps,
            c: T::one(),
            k: T::one(),
            psi: eta_i,
            psi_sum: T::zero(),
            jump_max: jump0,
            steps: 0,
            time: T::zero(),
        }
    }

    /// `(G, φ)` of a slab without committing it.
    pub fn g_phi(&self, p: &BlowupParts<T>) -> (T, T) {
        let cc = self.c;
        match self.variant {
            Continuation::LinfL2 => {
                let g = p.sigma.exp();
                let phi = (self.psi * self.psi + cc * p.a_sq).sqrt() + cc * p.b;
                (g, phi)
            }
            Continuation::L2H1 => {
                let half: T = c(0.5);
                let g = (half * p.tau + p.sigma).exp();
                let phi = (self.psi * self.psi + cc * p.a_sq + cc * p.b_sq).sqrt();
                (g, phi)
            }
        }
    }

    /// Evaluates the slab; the state advances only when `δ` exists.
    pub fn step(&mut self, p: &BlowupParts<T>) -> BlowupStep<T> {
        let (g, phi) = self.g_phi(p);
        let delta = continuation_delta(self.variant, self.k, self.eps, p.tau, g, phi);
        let mut psi = self.psi;
        if let Some(d) = delta {
            psi = d * g * phi;
            self.psi = psi;
            self.psi_sum += psi;
            self.jump_max = self.jump_max.max(p.jump_old).max(p.jump_new);
            self.steps += 1;
            self.time += p.tau;
        }
        BlowupStep { k: p.k, tau: p.tau, t: p.t_new(), g, phi, delta, psi }
    }

    /// Bound on the error of the accepted slabs: `ψ_n` (`Σψ_k` for `L²(H¹)`) plus the
    /// largest endpoint value of `(Σ_E h_E‖[u_h]‖²)^{1/2}`.
    pub fn bound(&self) -> T {
        match self.variant {
            Continuation::LinfL2 => self.psi + self.jump_max,
            Continuation::L2H1 => {
                let s = if self.steps == 0 { self.psi } else { self.psi_sum };
                s + self.jump_max
            }
        }
    }
}
