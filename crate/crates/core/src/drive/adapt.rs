//! Space-time adaptive drivers.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::Serialize;

use crate::assembly::{solve_stationary, StepCache};
use crate::dgspace::{l2_project, DgFunction, DgSpace};
use crate::error::{Error, Result};
use crate::est_blowup::{eta_i, slab_parts_blowup, BlowupAccumulator, BlowupParts, Continuation};
use crate::est_interface::{
    check_interface_data, slab_parts_interface, InterfaceConstants, InterfaceParts, InterfaceTotals,
};
use crate::est_linear::{
    elliptic_estimator, initial_error, initial_reconstruction, jump_sq, slab_estimators, solve_slab, LinearParts,
    RunTotals, TimeSlab,
};
use crate::mesh::{Mesh, MAX_LEVEL};
use crate::scalar::{c, f, Real};

use super::analytics::{stationary_energy_error, ErrorTracker};
use super::problems::{Family, Problem};
use super::{AdaptConfig, CellInfo, RunLog, SlabRow, Termination, Totals};

/// Solution handed to an observer after every accepted step (and for `k = 0`).
pub struct Snapshot<'a, T: Real> {
    pub k: usize,
    pub t: T,
    pub u: &'a DgFunction<T>,
}

/// Estimator interface shared by the slab-based drivers.
trait Estimator<T: Real> {
    type Parts;
    fn parts(&self, slab: &TimeSlab<T>, s1_old: Option<T>) -> Self::Parts;
    /// Indicator compared with `ttol`.
    fn time_indicator(&self, p: &Self::Parts) -> T;
    /// `η²_{S1}` per cell of the new mesh.
    fn s1_cells<'a>(&self, p: &'a Self::Parts) -> &'a [T];
    /// Value passed as `s1_old` to the next slab.
    fn s1_carry(&self, p: &Self::Parts) -> Option<T>;
}

struct LinearEst<'a, T: Real> {
    problem: &'a Problem<T>,
    alpha_t: T,
}

impl<T: Real> Estimator<T> for LinearEst<'_, T> {
    type Parts = LinearParts<T>;
    fn parts(&self, slab: &TimeSlab<T>, s1_old: Option<T>) -> LinearParts<T> {
        slab_estimators(slab, &self.problem.data, s1_old)
    }
    fn time_indicator(&self, p: &LinearParts<T>) -> T {
        p.hat(self.alpha_t, self.problem.data.final_time)
    }
    fn s1_cells<'a>(&self, p: &'a LinearParts<T>) -> &'a [T] {
        &p.s1_cells
    }
    fn s1_carry(&self, p: &LinearParts<T>) -> Option<T> {
        Some(p.s1_new)
    }
}

struct InterfaceEst<'a, T: Real> {
    problem: &'a Problem<T>,
    consts: InterfaceConstants<T>,
}

impl<T: Real> Estimator<T> for InterfaceEst<'_, T> {
    type Parts = InterfaceParts<T>;
    fn parts(&self, slab: &TimeSlab<T>, _: Option<T>) -> InterfaceParts<T> {
        slab_parts_interface(slab, &self.problem.data, &self.consts)
    }
    fn time_indicator(&self, p: &InterfaceParts<T>) -> T {
        p.hat(self.problem.data.final_time)
    }
    fn s1_cells<'a>(&self, p: &'a InterfaceParts<T>) -> &'a [T] {
        &p.s1_cells
    }
    fn s1_carry(&self, _: &InterfaceParts<T>) -> Option<T> {
        None
    }
}

struct BlowupEst<'a, T: Real> {
    problem: &'a Problem<T>,
}

impl<T: Real> Estimator<T> for BlowupEst<'_, T> {
    type Parts = BlowupParts<T>;
    fn parts(&self, slab: &TimeSlab<T>, s1_old: Option<T>) -> BlowupParts<T> {
        slab_parts_blowup(slab, &self.problem.data, s1_old)
    }
    fn time_indicator(&self, p: &BlowupParts<T>) -> T {
        p.t2_sq
    }
    fn s1_cells<'a>(&self, p: &'a BlowupParts<T>) -> &'a [T] {
        &p.s1_cells
    }
    fn s1_carry(&self, p: &BlowupParts<T>) -> Option<T> {
        Some(p.eta_s1_new)
    }
}

/// Refine/coarsen marks from cellwise `η²_{S1}`.
fn marks<T: Real>(mesh: &Mesh<T>, s1: &[T], plus: T, minus: T) -> (Vec<usize>, Vec<usize>) {
    let mut refine = Vec::new();
    let mut coarsen = Vec::new();
    for (cell, v) in s1.iter().enumerate() {
        if *v > plus {
            if mesh.key(cell).level < MAX_LEVEL - 1 {
                refine.push(cell);
            }
        } else if *v < minus {
            coarsen.push(cell);
        }
    }
    (refine, coarsen)
}

fn cell_info<T: Real>(mesh: &Mesh<T>) -> Vec<CellInfo> {
    (0..mesh.num_cells())
        .map(|k| {
            let x = mesh.center(k);
            CellInfo { x: f(x[0]), y: f(x[1]), h: f(mesh.h(k)) }
        })
        .collect()
}

/// The mesh, its space and the step cache that goes with it.
struct Disc<T: Real> {
    mesh: Arc<Mesh<T>>,
    space: Arc<DgSpace<T>>,
    cache: StepCache<T>,
}

impl<T: Real> Disc<T> {
    fn new(mesh: Mesh<T>, p: usize) -> Self {
        let mesh = Arc::new(mesh);
        let space = DgSpace::new(mesh.clone(), p);
        Disc { mesh, space, cache: StepCache::default() }
    }

    fn dofs_after(&self, mesh: &Mesh<T>) -> usize {
        mesh.num_cells() * self.space.nloc()
    }

    /// Applies the marks; returns the number of cells refined and merged away when the
    /// mesh changed, or `None` if the new space would exceed `max_dofs`.
    fn adapt(&mut self, s1: &[T], plus: T, minus: T, max_dofs: usize) -> Result<Option<(usize, usize)>> {
        let (r, co) = marks(&self.mesh, s1, plus, minus);
        if r.is_empty() && co.is_empty() {
            return Ok(Some((0, 0)));
        }
        let next = self.mesh.adapt(&r, &co)?;
        if next.same_cells(&self.mesh) {
            return Ok(Some((0, 0)));
        }
        if self.dofs_after(&next) > max_dofs {
            return Ok(None);
        }
        let merged = (self.mesh.num_cells() + 3 * r.len()).saturating_sub(next.num_cells()) / 3;
        *self = Disc::new(next, self.space.degree());
        Ok(Some((r.len(), merged)))
    }
}

struct Ctx<'a, T: Real> {
    problem: &'a Problem<T>,
    cfg: &'a AdaptConfig,
}

impl<T: Real> Ctx<'_, T> {
    #[allow(clippy::too_many_arguments)]
    fn solve(
        &self,
        disc: &mut Disc<T>,
        k: usize,
        u_old: &DgFunction<T>,
        a_old: &DgFunction<T>,
        t_old: T,
        tau: T,
    ) -> Result<TimeSlab<T>> {
        solve_slab(self.problem.kind, k, u_old, a_old, &disc.space, &self.problem.data, t_old, tau, &mut disc.cache)
    }

    fn base_log(&self, algorithm: &str) -> RunLog {
        RunLog {
            problem: self.problem.id,
            algorithm: algorithm.to_string(),
            eps: f(self.problem.data.eps),
            p: self.problem.p,
            config: self.cfg.clone(),
            rows: Vec::new(),
            termination: Termination::Budget,
            initial_iterations: 0,
            initial_capped: false,
            steps: 0,
            final_time: 0.0,
            final_linf: 0.0,
            max_linf: 0.0,
            totals: Totals::default(),
            error: None,
            blowup_bound: None,
            interface: None,
            final_mesh: Vec::new(),
        }
    }
}

fn initial_state<T: Real>(problem: &Problem<T>, space: &Arc<DgSpace<T>>) -> (DgFunction<T>, DgFunction<T>) {
    let data = &problem.data;
    let u0 = l2_project(space, |x| (data.u0)(x));
    let a0 = initial_reconstruction(&u0, data, T::zero());
    (u0, a0)
}

/// Result of the initial mesh loop.
struct Start<T: Real, P> {
    disc: Disc<T>,
    u0: DgFunction<T>,
    slab: TimeSlab<T>,
    parts: P,
    iterations: usize,
    capped: bool,
}

/// Adapts `ζ⁰` (and halves `τ₁` through `halve`) until the first slab passes both gates.
fn initial_loop<T: Real, E: Estimator<T>, H: FnMut() -> T>(
    ctx: &Ctx<T>,
    est: &E,
    mut tau1: T,
    ttol: T,
    stol_plus: T,
    stol_minus: T,
    mut halve: H,
) -> Result<std::result::Result<Start<T, E::Parts>, usize>> {
    let mut disc = Disc::new(ctx.problem.mesh.clone(), ctx.problem.p);
    let mut iterations = 0;
    loop {
        let (u0, a0) = initial_state(ctx.problem, &disc.space);
        let slab = ctx.solve(&mut disc, 0, &u0, &a0, T::zero(), tau1)?;
        let parts = est.parts(&slab, None);
        let time_bad = est.time_indicator(&parts) > ttol;
        let s1 = est.s1_cells(&parts);
        let space_bad = s1.iter().any(|v| *v > stol_plus);
        let capped = iterations >= ctx.cfg.max_initial_iterations;
        if !(time_bad || space_bad) || capped {
            return Ok(Ok(Start { disc, u0, slab, parts, iterations, capped: capped && (time_bad || space_bad) }));
        }
        let s1 = s1.to_vec();
        if disc.adapt(&s1, stol_plus, stol_minus, ctx.cfg.max_dofs)?.is_none() {
            return Ok(Err(iterations));
        }
        if time_bad {
            tau1 = halve();
        }
        iterations += 1;
    }
}

#[allow(clippy::too_many_arguments)]
fn row<T: Real>(
    k: usize,
    slab: &TimeSlab<T>,
    s1: &[T],
    indicator: T,
    ttol: T,
    stol_plus: T,
    marks: (usize, usize),
    halvings: usize,
    doublings: usize,
    time_gate: bool,
) -> SlabRow {
    SlabRow {
        k,
        t_old: f(slab.t_old),
        tau: f(slab.tau),
        dofs: slab.dofs(),
        cells: slab.u_new.mesh().num_cells(),
        s1_sq: f(s1.iter().copied().sum::<T>()),
        s1_max: f(s1.iter().copied().fold(T::zero(), T::max)),
        time_indicator: f(indicator),
        ttol: f(ttol),
        stol_plus: f(stol_plus),
        refined: marks.0,
        coarsened: marks.1,
        halvings,
        doublings,
        time_gate,
        linf: f(slab.u_new.linf()),
        g: None,
        delta: None,
        psi: None,
        err_energy_sq: None,
        err_l2_sq: None,
    }
}

/// Run-level accumulation of the linear and interface drivers.
enum Accum<T: Real> {
    Linear(RunTotals<T>),
    Interface { totals: InterfaceTotals<T>, space_sq: T, time_sq: T, consts: InterfaceConstants<T> },
}

trait Accumulate<T: Real, P> {
    fn push(&mut self, p: &P, final_time: T);
}

impl<T: Real> Accumulate<T, LinearParts<T>> for Accum<T> {
    fn push(&mut self, p: &LinearParts<T>, _: T) {
        if let Accum::Linear(r) = self {
            r.push(p);
        }
    }
}

impl<T: Real> Accumulate<T, InterfaceParts<T>> for Accum<T> {
    fn push(&mut self, p: &InterfaceParts<T>, final_time: T) {
        if let Accum::Interface { totals, space_sq, time_sq, .. } = self {
            totals.push(p);
            for (i, (_, w)) in p.times.iter().enumerate() {
                let a = p.eta_s1 + p.eta_s2_at[i] + p.eta_s3_at[i] + p.eta_s4_at[i];
                let b = p.eta_s5_at[i] + p.eta_s6;
                *space_sq += *w * (a * a + final_time * b * b);
            }
            *time_sq += p.hat(final_time);
        }
    }
}

/// Space-time adaptive loop for the linear and interface problems.
pub fn algorithm_3_1<T: Real>(problem: &Problem<T>, cfg: &AdaptConfig) -> Result<RunLog> {
    algorithm_3_1_with(problem, cfg, &mut |_| {})
}

pub fn algorithm_3_1_with<T: Real>(
    problem: &Problem<T>,
    cfg: &AdaptConfig,
    observe: &mut dyn FnMut(Snapshot<T>),
) -> Result<RunLog> {
    cfg.validate()?;
    match problem.id.family() {
        Family::Linear => {
            let est = LinearEst { problem, alpha_t: problem.data.alpha_t() };
            march_3_1(problem, cfg, &est, observe, |u0| {
                Accum::Linear(RunTotals::new(initial_error(u0, &problem.data), problem.data.alpha_t()))
            })
        }
        Family::Interface => {
            check_interface_data(&problem.data)?;
            let consts = InterfaceConstants::new(&problem.mesh, &problem.data, problem.p, T::zero());
            let est = InterfaceEst { problem, consts };
            march_3_1(problem, cfg, &est, observe, |u0| Accum::Interface {
                totals: InterfaceTotals::new(u0, &problem.data),
                space_sq: T::zero(),
                time_sq: T::zero(),
                consts,
            })
        }
        _ => Err(Error::Input(format!("{} is not a linear or interface problem", problem.id))),
    }
}

fn march_3_1<T: Real, E: Estimator<T>, F: FnOnce(&DgFunction<T>) -> Accum<T>>(
    problem: &Problem<T>,
    cfg: &AdaptConfig,
    est: &E,
    observe: &mut dyn FnMut(Snapshot<T>),
    make_accum: F,
) -> Result<RunLog>
where
    Accum<T>: Accumulate<T, E::Parts>,
{
    let ctx = Ctx { problem, cfg };
    let data = &problem.data;
    let big_t = data.final_time;
    let ttol: T = c(cfg.ttol);
    let stol_plus: T = c(cfg.stol_plus);
    let stol_minus: T = c(cfg.stol_minus_linear());
    let mut log = ctx.base_log("3.1");
    let n = cfg.n_initial;
    let mut queue: VecDeque<T> = std::iter::repeat_n(big_t / c(n as f64), n).collect();
    let tau_floor = big_t * c(1e-12);

    let start = {
        let q = &mut queue;
        initial_loop(&ctx, est, q[0], ttol, stol_plus, stol_minus, || {
            let h = q[0] * c(0.5);
            q[0] = h;
            q.push_front(h);
            h
        })?
    };
    let Start { mut disc, u0, slab, parts, iterations, capped } = match start {
        Ok(s) => s,
        Err(it) => {
            log.initial_iterations = it;
            return Ok(log);
        }
    };
    log.initial_iterations = iterations;
    log.initial_capped = capped;
    observe(Snapshot { k: 0, t: T::zero(), u: &u0 });
    let mut accum = make_accum(&u0);
    let mut tracker = match (&data.exact, cfg.track_error) {
        (Some(ex), true) => Some(ErrorTracker::new(&u0, ex, T::zero())),
        _ => None,
    };
    let mut dof_time = T::zero();
    let mut max_linf = u0.linf();

    let mut accept = |log: &mut RunLog,
                      accum: &mut Accum<T>,
                      slab: &TimeSlab<T>,
                      parts: &E::Parts,
                      marks: (usize, usize),
                      halvings: usize,
                      gate: bool| {
        let k = log.rows.len();
        let mut r = row(
            k,
            slab,
            est.s1_cells(parts),
            est.time_indicator(parts),
            ttol,
            stol_plus,
            marks,
            halvings,
            0,
            gate,
        );
        if let (Some(tr), Some(ex)) = (tracker.as_mut(), data.exact.as_ref()) {
            let (e, l) = tr.push(slab, data, ex);
            r.err_energy_sq = Some(f(e));
            r.err_l2_sq = Some(f(l));
        }
        max_linf = max_linf.max(slab.u_new.linf());
        dof_time += slab.tau * c(slab.dofs() as f64);
        accum.push(parts, big_t);
        log.rows.push(r);
    };

    // The first slab has passed the initial loop on ζ¹ = ζ⁰.
    let gate = est.time_indicator(&parts) <= ttol;
    accept(&mut log, &mut accum, &slab, &parts, (0, 0), 0, gate);
    observe(Snapshot { k: 1, t: slab.t_new(), u: &slab.u_new });
    queue.pop_front();
    let mut time = slab.t_new();
    let mut u = slab.u_new.clone();
    let mut a = slab.a_new.clone();
    let mut carry = est.s1_carry(&parts);
    log.termination = Termination::ReachedT;

    while let Some(&tau0) = queue.front() {
        if log.rows.len() >= cfg.max_slabs {
            log.termination = Termination::Budget;
            break;
        }
        let k = log.rows.len();
        let mut tau = tau0;
        let mut slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
        let mut parts = est.parts(&slab, carry);
        let mut halvings = 0;
        let mut underflow = false;
        while est.time_indicator(&parts) > ttol {
            if tau * c(0.5) < tau_floor {
                underflow = true;
                break;
            }
            tau *= c(0.5);
            queue[0] = tau;
            queue.push_front(tau);
            halvings += 1;
            slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
            parts = est.parts(&slab, carry);
        }
        if underflow {
            log.termination = Termination::Budget;
            break;
        }
        let s1 = est.s1_cells(&parts).to_vec();
        let Some(marks) = disc.adapt(&s1, stol_plus, stol_minus, cfg.max_dofs)? else {
            log.termination = Termination::Budget;
            break;
        };
        if marks != (0, 0) {
            slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
            parts = est.parts(&slab, carry);
        }
        accept(&mut log, &mut accum, &slab, &parts, marks, halvings, true);
        queue.pop_front();
        time = slab.t_new();
        carry = est.s1_carry(&parts);
        observe(Snapshot { k: k + 1, t: time, u: &slab.u_new });
        u = slab.u_new;
        a = slab.a_new;
    }

    log.steps = log.rows.len();
    log.final_time = f(time);
    log.final_linf = f(u.linf());
    log.max_linf = f(max_linf);
    log.final_mesh = cell_info(u.mesh());
    let wd = if time > T::zero() { f(dof_time / time) } else { 0.0 };
    log.totals = match &accum {
        Accum::Linear(r) => Totals {
            eta: f(r.eta()),
            eta_space: f(r.eta_s_sq().sqrt()),
            eta_time: f(r.eta_t_sq().sqrt()),
            weighted_dofs: wd,
        },
        Accum::Interface { totals, space_sq, time_sq, consts } => {
            let b = totals.bound(consts);
            log.interface = Some(crate::est_interface::InterfaceBound {
                phi: f(b.phi),
                ln_g: f(b.ln_g),
                delta: b.delta.map(f),
                bound: f(b.bound),
                bound_delta: b.bound_delta.map(f),
                margin: f(b.margin),
            });
            Totals {
                eta: f(totals.phi().sqrt()),
                eta_space: f((totals.e0_sq + *space_sq).sqrt()),
                eta_time: f(time_sq.sqrt()),
                weighted_dofs: wd,
            }
        }
    };
    log.error = tracker.map(|t| t.norms());
    Ok(log)
}

/// Space-time adaptive loop for the blow-up problems, run until the δ equation loses its root.
pub fn algorithm_5_1<T: Real>(problem: &Problem<T>, cfg: &AdaptConfig) -> Result<RunLog> {
    algorithm_5_1_with(problem, cfg, &mut |_| {})
}

pub fn algorithm_5_1_with<T: Real>(
    problem: &Problem<T>,
    cfg: &AdaptConfig,
    observe: &mut dyn FnMut(Snapshot<T>),
) -> Result<RunLog> {
    cfg.validate()?;
    if problem.id.family() != Family::Blowup {
        return Err(Error::Input(format!("{} is not a blow-up problem", problem.id)));
    }
    let ctx = Ctx { problem, cfg };
    let est = BlowupEst { problem };
    let data = &problem.data;
    let mut ttp: T = c(cfg.ttol);
    let mut ttm: T = c(cfg.ttol_minus_blowup());
    let mut stp: T = c(cfg.stol_plus);
    let mut stm: T = c(cfg.stol_minus_blowup());
    let mut log = ctx.base_log("5.1");
    let tau_floor: T = c(1e-14);

    let mut tau1: T = c(cfg.tau1);
    let start = {
        let t1 = &mut tau1;
        initial_loop(&ctx, &est, *t1, ttp, stp, stm, || {
            *t1 *= c(0.5);
            *t1
        })?
    };
    let Start { mut disc, u0, slab, parts, iterations, capped } = match start {
        Ok(s) => s,
        Err(it) => {
            log.initial_iterations = it;
            return Ok(log);
        }
    };
    log.initial_iterations = iterations;
    log.initial_capped = capped;
    observe(Snapshot { k: 0, t: T::zero(), u: &u0 });
    let mut acc = BlowupAccumulator::new(Continuation::LinfL2, data.eps, eta_i(&u0, data), jump_sq(&u0).sqrt());
    let mut max_linf = u0.linf();
    let mut dof_time = T::zero();
    let mut time = T::zero();
    let mut u = u0.clone();

    let mut pending = Some((slab, parts, (0usize, 0usize), 0usize, 0usize));
    let mut a = DgFunction::zeros(&disc.space);
    let mut carry = None;
    loop {
        let (slab, parts, marks, halvings, doublings) = match pending.take() {
            Some(p) => p,
            None => {
                if log.rows.len() >= cfg.max_slabs {
                    log.termination = Termination::Budget;
                    break;
                }
                if time >= data.final_time {
                    log.termination = Termination::ReachedT;
                    break;
                }
                let k = log.rows.len();
                let mut tau = log.rows.last().map(|r| c::<T>(r.tau)).unwrap_or(tau1);
                let mut slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
                let mut parts = est.parts(&slab, carry);
                let (mut halvings, mut doublings) = (0, 0);
                if parts.t2_sq > ttp && tau * c(0.5) >= tau_floor {
                    tau *= c(0.5);
                    halvings = 1;
                    slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
                    parts = est.parts(&slab, carry);
                }
                if parts.t2_sq < ttm {
                    tau = tau + tau;
                    doublings = 1;
                    slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
                    parts = est.parts(&slab, carry);
                }
                let s1 = parts.s1_cells.clone();
                let Some(marks) = disc.adapt(&s1, stp, stm, cfg.max_dofs)? else {
                    log.termination = Termination::Budget;
                    break;
                };
                if marks != (0, 0) {
                    slab = ctx.solve(&mut disc, k, &u, &a, time, tau)?;
                    parts = est.parts(&slab, carry);
                }
                (slab, parts, marks, halvings, doublings)
            }
        };
        let step = acc.step(&parts);
        let finite = slab.u_new.coeffs.iter().all(|v| v.is_finite());
        if step.delta.is_none() || !finite {
            log.termination = Termination::DeltaNonexistent;
            break;
        }
        let k = log.rows.len();
        let mut r = row(k, &slab, &parts.s1_cells, parts.t2_sq, ttp, stp, marks, halvings, doublings, parts.t2_sq <= ttp);
        r.g = Some(f(step.g));
        r.delta = step.delta.map(f);
        r.psi = Some(f(step.psi));
        max_linf = max_linf.max(slab.u_new.linf());
        dof_time += slab.tau * c(slab.dofs() as f64);
        log.rows.push(r);
        ttp *= step.g;
        ttm *= step.g;
        stp *= step.g;
        stm *= step.g;
        time = slab.t_new();
        carry = est.s1_carry(&parts);
        observe(Snapshot { k: k + 1, t: time, u: &slab.u_new });
        u = slab.u_new;
        a = slab.a_new;
    }

    log.steps = log.rows.len();
    log.final_time = f(time);
    log.final_linf = f(u.linf());
    log.max_linf = f(max_linf);
    log.final_mesh = cell_info(u.mesh());
    let bound = acc.bound();
    log.blowup_bound = Some(f(bound));
    log.totals = Totals {
        eta: f(bound),
        eta_space: f64::NAN,
        eta_time: f64::NAN,
        weighted_dofs: if time > T::zero() { f(dof_time / time) } else { 0.0 },
    };
    Ok(log)
}

/// One solve of the stationary adaptive loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StationaryStep {
    pub cells: usize,
    pub dofs: usize,
    pub eta: f64,
    pub max_cell: f64,
    pub error: Option<f64>,
}

/// Solve, estimate and refine the stationary problem until every cell indicator is
/// below `stol⁺` or the budget is hit.
pub fn stationary<T: Real>(problem: &Problem<T>, cfg: &AdaptConfig) -> Result<(Vec<StationaryStep>, Termination)> {
    cfg.validate()?;
    let data = &problem.data;
    let t = T::zero();
    let plus: T = c(cfg.stol_plus);
    let minus: T = c(cfg.stol_minus_linear());
    let mut disc = Disc::new(problem.mesh.clone(), problem.p);
    let mut out = Vec::new();
    loop {
        let u = solve_stationary(&disc.space, data, t)?;
        let (eta, map) = elliptic_estimator(&u, data, t);
        let error = data.exact.as_ref().map(|ex| f(stationary_energy_error(&u, data, ex, t)));
        out.push(StationaryStep {
            cells: disc.mesh.num_cells(),
            dofs: disc.space.ndofs(),
            eta: f(eta),
            max_cell: f(map.max()),
            error,
        });
        if map.max() <= plus {
            return Ok((out, Termination::ReachedT));
        }
        if out.len() >= cfg.max_slabs {
            return Ok((out, Termination::Budget));
        }
        match disc.adapt(&map.cells, plus, minus, cfg.max_dofs)? {
            None | Some((0, 0)) => return Ok((out, Termination::Budget)),
            Some(_) => {}
        }
    }
}
