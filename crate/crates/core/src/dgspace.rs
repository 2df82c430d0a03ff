//! Discontinuous tensor-Legendre spaces on quadtree meshes.
//!
//! On a cell of side `h` the basis function with index `(a, b)` is
//! `(2/h) L_a(xi) L_b(eta)`, where `L_n` is the Legendre polynomial of degree `n`
//! normalised on [-1, 1]. The physical mass matrix is therefore the identity.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use crate::mesh::{CellKey, Edge, Mesh};
use crate::quadrature::GaussRule;
use crate::scalar::{c, Real};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 8;
const NB: usize = MAX_DEGREE + 1;

/// Normalised Legendre values and first two derivatives at `x`.
pub fn legendre<T: Real>(p: usize, x: T) -> ([T; NB], [T; NB], [T; NB]) {
    let mut v = [T::zero(); NB];
    let mut d = [T::zero(); NB];
    let mut dd = [T::zero(); NB];
    v[0] = T::one();
    if p >= 1 {
        v[1] = x;
        d[1] = T::one();
    }
    for k in 2..=p {
        let kf: T = c(k as f64);
        let a: T = c((2 * k - 1) as f64);
        v[k] = (a * x * v[k - 1] - (kf - T::one()) * v[k - 2]) / kf;
        d[k] = d[k - 2] + a * v[k - 1];
        dd[k] = dd[k - 2] + a * d[k - 1];
    }
    for k in 0..=p {
        let s: T = c(((2 * k + 1) as f64 / 2.0).sqrt());
        v[k] *= s;
        d[k] *= s;
        dd[k] *= s;
    }
    (v, d, dd)
}

/// Values of all basis functions (and derivatives) at one point of one cell.
#[derive(Clone, Debug)]
pub struct Shapes<T> {
    pub v: Vec<T>,
    pub dx: Vec<T>,
    pub dy: Vec<T>,
    pub lap: Vec<T>,
}

impl<T: Real> Shapes<T> {
    pub fn new(nloc: usize) -> Self {
        Shapes {
            v: vec![T::zero(); nloc],
            dx: vec![T::zero(); nloc],
            dy: vec![T::zero(); nloc],
            lap: vec![T::zero(); nloc],
        }
    }
}

/// Point value, gradient and Laplacian of a polynomial on one cell.
#[derive(Clone, Copy, Debug, Default)]
pub struct Eval<T> {
    pub v: T,
    pub grad: [T; 2],
    pub lap: T,
}

#[derive(Debug)]
pub struct DgSpace<T> {
    mesh: Arc<Mesh<T>>,
    p: usize,
}

impl<T: Real> DgSpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, p: usize) -> Arc<Self> {
        assert!((1..=MAX_DEGREE).contains(&p), "degree must lie in 1..={MAX_DEGREE}");
        Arc::new(DgSpace { mesh, p })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn nloc(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    pub fn ndofs(&self) -> usize {
        self.mesh.num_cells() * self.nloc()
    }

    pub fn dofs(&self, cell: usize) -> Range<usize> {
        let n = self.nloc();
        cell * n..(cell + 1) * n
    }

    /// Reference coordinates of a physical point relative to `cell`.
    pub fn reference(&self, cell: usize, x: [T; 2]) -> [T; 2] {
        let o = self.mesh.origin(cell);
        let h = self.mesh.h(cell);
        let two: T = c(2.0);
        [two * (x[0] - o[0]) / h - T::one(), two * (x[1] - o[1]) / h - T::one()]
    }

    /// Fills `out` with the physical basis on `cell` at the physical point `x`.
    pub fn shapes(&self, cell: usize, x: [T; 2], out: &mut Shapes<T>) {
        let h = self.mesh.h(cell);
        let r = self.reference(cell, x);
        let p = self.p;
        let (vx, dx, ddx) = legendre(p, r[0]);
        let (vy, dy, ddy) = legendre(p, r[1]);
        let s: T = c::<T>(2.0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        for a in 0..=p {
            for b in 0..=p {
                let m = a * (p + 1) + b;
                out.v[m] = s * vx[a] * vy[b];
                out.dx[m] = s2 * dx[a] * vy[b];
                out.dy[m] = s2 * vx[a] * dy[b];
                out.lap[m] = s3 * (ddx[a] * vy[b] + vx[a] * ddy[b]);
            }
        }
    }

    /// Evaluates the polynomial with local coefficients `coef` on `cell` at `x`.
    pub fn eval_local(&self, cell: usize, coef: &[T], x: [T; 2], second: bool) -> Eval<T> {
        let h = self.mesh.h(cell);
        let r = self.reference(cell, x);
        let p = self.p;
        let (vx, dx, ddx) = legendre(p, r[0]);
        let (vy, dy, ddy) = legendre(p, r[1]);
        let s: T = c::<T>(2.0) / h;
        let mut e = Eval::default();
        for a in 0..=p {
            let mut sv = T::zero();
            let mut sd = T::zero();
            let mut sdd = T::zero();
            for b in 0..=p {
                let cf = coef[a * (p + 1) + b];
                sv += cf * vy[b];
                sd += cf * dy[b];
                if second {
                    sdd += cf * ddy[b];
                }
            }
            e.v += vx[a] * sv;
            e.grad[0] += dx[a] * sv;
            e.grad[1] += vx[a] * sd;
            if second {
                e.lap += ddx[a] * sv + vx[a] * sdd;
            }
        }
        e.v *= s;
        e.grad[0] *= s * s;
        e.grad[1] *= s * s;
        e.lap *= s * s * s;
        e
    }

    /// Tensor Gauss points `(x, weight)` over the square of `key` with `n` points per
    /// direction.
    pub fn key_quadrature(&self, key: &CellKey, n: usize) -> Vec<([T; 2], T)> {
        square_quadrature(self.mesh.key_origin(key), self.mesh.key_h(key), n)
    }

    /// Gauss points `(x, weight)` along an edge with `n` points.
    pub fn edge_quadrature(&self, e: &Edge<T>, n: usize) -> Vec<([T; 2], T)> {
        edge_quadrature(e, n)
    }
}

pub fn square_quadrature<T: Real>(origin: [T; 2], h: T, n: usize) -> Vec<([T; 2], T)> {
    let r = GaussRule::<T>::new(n);
    let xs = r.mapped(origin[0], origin[0] + h);
    let ys = r.mapped(origin[1], origin[1] + h);
    let mut out = Vec::with_capacity(n * n);
    for (x, wx) in &xs {
        for (y, wy) in &ys {
            out.push(([*x, *y], *wx * *wy));
        }
    }
    out
}

pub fn edge_quadrature<T: Real>(e: &Edge<T>, n: usize) -> Vec<([T; 2], T)> {
    GaussRule::<T>::new(n)
        .mapped(T::zero(), T::one())
        .into_iter()
        .map(|(s, w)| (e.point(s), w * e.h))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DgFunction<T> {
    space: Arc<DgSpace<T>>,
    pub coeffs: Vec<T>,
}

impl<T: Real> DgFunction<T> {
    pub fn zeros(space: &Arc<DgSpace<T>>) -> Self {
        DgFunction { space: space.clone(), coeffs: vec![T::zero(); space.ndofs()] }
    }

    pub fn from_coeffs(space: &Arc<DgSpace<T>>, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), space.ndofs(), "coefficient length mismatch");
        DgFunction { space: space.clone(), coeffs }
    }

    pub fn space(&self) -> &Arc<DgSpace<T>> {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        self.space.mesh()
    }

    pub fn local(&self, cell: usize) -> &[T] {
        &self.coeffs[self.space.dofs(cell)]
    }

    pub fn eval(&self, cell: usize, x: [T; 2]) -> T {
        self.space.eval_local(cell, self.local(cell), x, false).v
    }

    pub fn eval_grad(&self, cell: usize, x: [T; 2]) -> Eval<T> {
        self.space.eval_local(cell, self.local(cell), x, false)
    }

    pub fn eval_full(&self, cell: usize, x: [T; 2]) -> Eval<T> {
        self.space.eval_local(cell, self.local(cell), x, true)
    }

    /// Value at a physical point, searching the containing cell.
    pub fn eval_point(&self, x: [T; 2]) -> Option<T> {
        self.mesh().locate_point(x).map(|k| self.eval(k, x))
    }

    pub fn axpy(&mut self, a: T, other: &DgFunction<T>) {
        assert!(Arc::ptr_eq(&self.space, &other.space) || self.coeffs.len() == other.coeffs.len());
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += a * *y;
        }
    }

    pub fn scaled(&self, a: T) -> Self {
        DgFunction {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|x| *x * a).collect(),
        }
    }

    /// `a * self + b * other` on the same space.
    pub fn lin(&self, a: T, other: &DgFunction<T>, b: T) -> Self {
        DgFunction {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| a * *x + b * *y)
                .collect(),
        }
    }

    /// Sampled L-infinity norm: the p+3 Gauss points and corners of every cell.
    pub fn linf(&self) -> T {
        (0..self.mesh().num_cells()).fold(T::zero(), |m, cell| m.max(cell_linf(self, cell)))
    }
}

/// Sampled maximum of |u| on one cell.
pub fn cell_linf<T: Real>(u: &DgFunction<T>, cell: usize) -> T {
    let sp = u.space();
    let key = sp.mesh().key(cell);
    let mut m = T::zero();
    for (x, _) in sp.key_quadrature(&key, sp.degree() + 3) {
        m = m.max(u.eval(cell, x).abs());
    }
    for x in sp.mesh().corners(cell) {
        m = m.max(u.eval(cell, x).abs());
    }
    m
}

/// A dG function viewed through the cells of a (finer or equal) host mesh.
pub struct View<'a, T> {
    pub f: &'a DgFunction<T>,
    map: Vec<usize>,
}

impl<'a, T: Real> View<'a, T> {
    pub fn new(f: &'a DgFunction<T>, host: &Mesh<T>) -> Self {
        let own = f.mesh();
        let map = if own.same_cells(host) {
            (0..host.num_cells()).collect()
        } else {
            host.keys()
                .iter()
                .map(|k| own.locate(k).expect("host mesh must refine the function's mesh"))
                .collect()
        };
        View { f, map }
    }

    pub fn cell(&self, host_cell: usize) -> usize {
        self.map[host_cell]
    }

    pub fn eval(&self, host_cell: usize, x: [T; 2]) -> T {
        self.f.eval(self.map[host_cell], x)
    }

    pub fn eval_grad(&self, host_cell: usize, x: [T; 2]) -> Eval<T> {
        self.f.eval_grad(self.map[host_cell], x)
    }

    pub fn eval_full(&self, host_cell: usize, x: [T; 2]) -> Eval<T> {
        self.f.eval_full(self.map[host_cell], x)
    }

    /// Traces from both sides of an edge of the host mesh.
    pub fn traces(&self, e: &Edge<T>, x: [T; 2]) -> (Eval<T>, Option<Eval<T>>) {
        let m = self.eval_grad(e.minus, x);
        let p = e.plus.map(|q| self.eval_grad(q, x));
        (m, p)
    }

    /// Scalar jump `u⁻ − u⁺` (or `u` on the boundary) at an edge point.
    pub fn jump(&self, e: &Edge<T>, x: [T; 2]) -> T {
        let (m, p) = self.traces(e, x);
        m.v - p.map(|q| q.v).unwrap_or(T::zero())
    }
}

/// L² projection of a field given in physical coordinates onto `space`.
pub fn l2_project<T: Real, F: Fn([T; 2]) -> T>(space: &Arc<DgSpace<T>>, field: F) -> DgFunction<T> {
    l2_project_with(space, field, space.degree() + 3)
}

/// L² projection using `n` Gauss points per direction.
pub fn l2_project_with<T: Real, F: Fn([T; 2]) -> T>(
    space: &Arc<DgSpace<T>>,
    field: F,
    n: usize,
) -> DgFunction<T> {
    let mut out = DgFunction::zeros(space);
    let mut sh = Shapes::new(space.nloc());
    let mesh = space.mesh();
    for cell in 0..mesh.num_cells() {
        let key = mesh.key(cell);
        let r = space.dofs(cell);
        for (x, w) in space.key_quadrature(&key, n) {
            let fx = field(x) * w;
            space.shapes(cell, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                out.coeffs[d] += fx * sh.v[m];
            }
        }
    }
    out
}

/// Exact L² projection of a dG function onto another space over the same roots,
/// integrating on the union mesh.
pub fn transfer<T: Real>(u: &DgFunction<T>, target: &Arc<DgSpace<T>>) -> DgFunction<T> {
    let src = u.mesh();
    let dst = target.mesh();
    if src.same_cells(dst) && u.space().degree() == target.degree() {
        return DgFunction::from_coeffs(target, u.coeffs.clone());
    }
    let union = src.union(dst).expect("transfer between meshes over different roots");
    let mut out = DgFunction::zeros(target);
    let mut sh = Shapes::new(target.nloc());
    let n = u.space().degree().max(target.degree()) + 1;
    let same_degree = u.space().degree() == target.degree();
    for key in union.keys() {
        let ks = src.locate(key).unwrap();
        let kt = dst.locate(key).unwrap();
        if same_degree && src.key(ks) == dst.key(kt) {
            let r = target.dofs(kt);
            out.coeffs[r.clone()].copy_from_slice(u.local(ks));
            continue;
        }
        let r = target.dofs(kt);
        for (x, w) in target.key_quadrature(key, n) {
            let fx = u.eval(ks, x) * w;
            target.shapes(kt, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                out.coeffs[d] += fx * sh.v[m];
            }
        }
    }
    out
}

/// Integral of a pointwise expression over the domain using a given host mesh, with `n`
/// points per direction.
pub fn integrate_cells<T: Real, F: FnMut(usize, [T; 2]) -> T>(
    mesh: &Mesh<T>,
    n: usize,
    mut g: F,
) -> T {
    let mut s = T::zero();
    for (cell, key) in mesh.keys().iter().enumerate() {
        for (x, w) in square_quadrature(mesh.key_origin(key), mesh.key_h(key), n) {
            s += w * g(cell, x);
        }
    }
    s
}

/// Parameters of the energy norm.
#[derive(Clone, Copy, Debug)]
pub struct EnergyParams<T> {
    pub eps: T,
    pub beta: T,
    pub gamma: T,
}

/// Squared L² norm, energy norm and sampled L∞ norm of a function.
#[derive(Clone, Copy, Debug)]
pub struct Norms<T> {
    pub l2: T,
    pub energy: T,
    pub linf: T,
}

pub fn l2_norm<T: Real>(u: &DgFunction<T>) -> T {
    let sp = u.space();
    let n = sp.degree() + 3;
    integrate_cells(sp.mesh(), n, |k, x| {
        let v = u.eval(k, x);
        v * v
    })
    .sqrt()
}

/// Energy norm `(Σ ε‖∇u‖² + β‖u‖² + Σ_E (γε/h_E + βh_E)‖[u]‖²)^{1/2}` over all edges.
pub fn energy_norm<T: Real>(u: &DgFunction<T>, prm: EnergyParams<T>) -> T {
    let sp = u.space();
    let mesh = sp.mesh();
    let n = sp.degree() + 3;
    let vol = integrate_cells(mesh, n, |k, x| {
        let e = u.eval_grad(k, x);
        prm.eps * (e.grad[0] * e.grad[0] + e.grad[1] * e.grad[1]) + prm.beta * e.v * e.v
    });
    let view = View::new(u, mesh);
    let mut jumps = T::zero();
    for e in mesh.edges() {
        let wgt = prm.gamma * prm.eps / e.h + prm.beta * e.h;
        for (x, w) in edge_quadrature(e, n) {
            let j = view.jump(e, x);
            jumps += wgt * w * j * j;
        }
    }
    (vol + jumps).sqrt()
}

pub fn norms<T: Real>(u: &DgFunction<T>, prm: EnergyParams<T>) -> Norms<T> {
    Norms { l2: l2_norm(u), energy: energy_norm(u, prm), linf: u.linf() }
}

/// Splits `u` into a continuous part (nodal averaging with hanging nodes slaved to the
/// coarse face and Dirichlet nodes zeroed) and the remainder.
pub fn conforming_decompose<T: Real>(u: &DgFunction<T>) -> (DgFunction<T>, DgFunction<T>) {
    let sp = u.space();
    let mesh = sp.mesh();
    let p = sp.degree();
    let pp = p as u64;
    let node = |cell: usize, a: usize, b: usize| -> (u64, u64) {
        let (x, y, s) = mesh.key(cell).lattice();
        (x * pp + a as u64 * s, y * pp + b as u64 * s)
    };
    let local_point = |cell: usize, a: usize, b: usize| -> [T; 2] {
        let o = mesh.origin(cell);
        let h = mesh.h(cell);
        let pf: T = c(p as f64);
        [o[0] + h * c::<T>(a as f64) / pf, o[1] + h * c::<T>(b as f64) / pf]
    };

    let mut sum: HashMap<(u64, u64), (T, usize)> = HashMap::new();
    for cell in 0..mesh.num_cells() {
        for a in 0..=p {
            for b in 0..=p {
                let v = u.eval(cell, local_point(cell, a, b));
                let ent = sum.entry(node(cell, a, b)).or_insert((T::zero(), 0));
                ent.0 += v;
                ent.1 += 1;
            }
        }
    }
    let mut val: HashMap<(u64, u64), T> =
        sum.into_iter().map(|(k, (s, n))| (k, s / c(n as f64))).collect();

    // Dirichlet clamping.
    let (nx, ny) = mesh.root_grid();
    let xmax = (nx as u64) << crate::mesh::MAX_LEVEL;
    let ymax = (ny as u64) << crate::mesh::MAX_LEVEL;
    let bc = mesh.boundary();
    use crate::mesh::{BoundaryKind, Side};
    for (k, v) in val.iter_mut() {
        let on = |side: Side| bc.kind(side) == BoundaryKind::Dirichlet;
        if (k.0 == 0 && on(Side::West))
            || (k.0 == xmax * pp && on(Side::East))
            || (k.1 == 0 && on(Side::South))
            || (k.1 == ymax * pp && on(Side::North))
        {
            *v = T::zero();
        }
    }

    // Hanging faces: fine-side nodes take the coarse face trace, coarsest faces first.
    let mut hanging: Vec<(u8, usize, usize)> = mesh
        .edges()
        .iter()
        .filter_map(|e| {
            let q = e.plus?;
            let (lm, lq) = (mesh.key(e.minus).level, mesh.key(q).level);
            if lm == lq {
                None
            } else if lm < lq {
                Some((lm, e.minus, q))
            } else {
                Some((lq, q, e.minus))
            }
        })
        .collect();
    hanging.sort();
    hanging.dedup();
    let pf: T = c(p as f64);
    for (_, coarse, fine) in hanging {
        let (cx, cy, cs) = mesh.key(coarse).lattice();
        let (fx, fy, fs) = mesh.key(fine).lattice();
        // Shared face: vertical if the x ranges touch.
        let vertical = fx + fs == cx || cx + cs == fx;
        let (face_fixed, c0) = if vertical {
            (if fx + fs == cx { cx } else { fx }, cy)
        } else {
            (if fy + fs == cy { cy } else { fy }, cx)
        };
        let cvals: Vec<T> = (0..=p)
            .map(|m| {
                let t = c0 * pp + m as u64 * cs;
                let k = if vertical { (face_fixed * pp, t) } else { (t, face_fixed * pp) };
                val[&k]
            })
            .collect();
        let f0 = if vertical { fy } else { fx };
        for m in 0..=p {
            let t = f0 * pp + m as u64 * fs;
            let k = if vertical { (face_fixed * pp, t) } else { (t, face_fixed * pp) };
            let s: T = c::<T>((t - c0 * pp) as f64) / c::<T>((cs * pp) as f64) * pf;
            let v = lagrange_eval(p, &cvals, s);
            val.insert(k, v);
        }
    }

    // Interpolant back to the Legendre basis.
    let mut uc = DgFunction::zeros(sp);
    let mut sh = Shapes::new(sp.nloc());
    for cell in 0..mesh.num_cells() {
        let key = mesh.key(cell);
        let nodal: Vec<T> = (0..=p)
            .flat_map(|a| (0..=p).map(move |b| (a, b)))
            .map(|(a, b)| val[&node(cell, a, b)])
            .collect();
        let o = mesh.origin(cell);
        let h = mesh.h(cell);
        let r = sp.dofs(cell);
        for (x, w) in sp.key_quadrature(&key, p + 2) {
            let sx = (x[0] - o[0]) / h * pf;
            let sy = (x[1] - o[1]) / h * pf;
            let lx = lagrange_basis(p, sx);
            let ly = lagrange_basis(p, sy);
            let mut v = T::zero();
            for a in 0..=p {
                for b in 0..=p {
                    v += nodal[a * (p + 1) + b] * lx[a] * ly[b];
                }
            }
            sp.shapes(cell, x, &mut sh);
            for (m, d) in r.clone().enumerate() {
                uc.coeffs[d] += w * v * sh.v[m];
            }
        }
    }
    let ud = u.lin(T::one(), &uc, -T::one());
    (uc, ud)
}

/// Equispaced Lagrange basis on nodes 0, 1, ..., p evaluated at `s`.
fn lagrange_basis<T: Real>(p: usize, s: T) -> Vec<T> {
    (0..=p)
        .map(|a| {
            let mut l = T::one();
            for b in 0..=p {
                if b != a {
                    l *= (s - c(b as f64)) / c((a as f64) - (b as f64));
                }
            }
            l
        })
        .collect()
}

fn lagrange_eval<T: Real>(p: usize, vals: &[T], s: T) -> T {
    lagrange_basis(p, s).iter().zip(vals).map(|(l, v)| *l * *v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_orthonormal() {
        let r = GaussRule::<f64>::new(10);
        for a in 0..=6 {
            for b in 0..=6 {
                let s = r.integrate(-1.0, 1.0, |x| {
                    let (v, _, _) = legendre(6, x);
                    v[a] * v[b]
                });
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn legendre_derivatives_match_differences() {
        let x = 0.3;
        let hstep = 1e-5;
        let (_, d, dd) = legendre::<f64>(5, x);
        let (vp, dp, _) = legendre::<f64>(5, x + hstep);
        let (vm, dm, _) = legendre::<f64>(5, x - hstep);
        for k in 0..=5 {
            assert!((d[k] - (vp[k] - vm[k]) / (2.0 * hstep)).abs() < 1e-6);
            assert!((dd[k] - (dp[k] - dm[k]) / (2.0 * hstep)).abs() < 1e-6);
        }
    }
}
