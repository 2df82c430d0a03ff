use std::sync::Arc;

use proptest::prelude::*;

use dgblow::assembly::{solve_stationary, StepCache, StepKind};
use dgblow::dgspace::{conforming_decompose, edge_quadrature, l2_project, DgFunction, DgSpace, View};
use dgblow::est_blowup::{continuation_delta, slab_parts_blowup, Continuation};
use dgblow::est_interface::{slab_parts_interface, InterfaceConstants};
use dgblow::est_linear::{slab_estimators, solve_slab};
use dgblow::mesh::{Mesh, Rect};
use dgblow::ode_blowup::{
    gronwall_factor, ode_delta_equation, ode_step, residual_integral, DeltaEquation, PolynomialRhs, Scheme,
};
use dgblow::problem::{constant, constant_vec, InterfaceParams, Nonlinearity, ProblemData};

fn mesh_from(n: u32, picks: &[usize], rounds: usize) -> Mesh<f64> {
    let mut m = Mesh::unit_square(n);
    for r in 0..rounds {
        let ids: Vec<usize> = picks.iter().skip(r).step_by(rounds.max(1)).map(|i| i % m.num_cells()).collect();
        m = m.refine(&ids).unwrap();
    }
    m
}

fn arb_mesh() -> impl Strategy<Value = Mesh<f64>> {
    (1u32..4, prop::collection::vec(0usize..1000, 0..6), 0usize..3).prop_map(|(n, p, r)| mesh_from(n, &p, r))
}

fn random_function(mesh: Mesh<f64>, p: usize, seed: &[f64]) -> DgFunction<f64> {
    let sp = DgSpace::new(Arc::new(mesh), p);
    let coeffs = (0..sp.ndofs()).map(|i| seed[i % seed.len()] * (1.0 + (i % 7) as f64 * 0.1)).collect();
    DgFunction::from_coeffs(&sp, coeffs)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn projection_reproduces_members(mesh in arb_mesh(), p in 1usize..4, seed in prop::collection::vec(-1.0f64..1.0, 1..9)) {
        let u = random_function(mesh, p, &seed);
        let v = l2_project(u.space(), |x| u.eval_point(x).unwrap());
        for (a, b) in u.coeffs.iter().zip(&v.coeffs) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn continuous_functions_have_no_jumps(mesh in arb_mesh(), p in 2usize..4, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let sp = DgSpace::new(Arc::new(mesh), p);
        let u = l2_project(&sp, |x| a * x[0] * x[1] + b * x[0] * x[0] - x[1] + 0.5);
        let view = View::new(&u, sp.mesh());
        for e in sp.mesh().edges().iter().filter(|e| e.is_interior()) {
            for (x, _) in edge_quadrature(e, p + 2) {
                prop_assert!(view.jump(e, x).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn conforming_part_is_jump_free(mesh in arb_mesh(), p in 1usize..4, seed in prop::collection::vec(-1.0f64..1.0, 1..9)) {
        let u = random_function(mesh, p, &seed);
        let (uc, ud) = conforming_decompose(&u);
        let mesh = u.mesh();
        let view = View::new(&uc, mesh);
        for e in mesh.edges() {
            for (x, _) in edge_quadrature(e, p + 2) {
                // Interior edges match, Dirichlet boundary values vanish.
                prop_assert!(view.jump(e, x).abs() < 1e-9);
            }
        }
        for i in 0..u.coeffs.len() {
            prop_assert!((uc.coeffs[i] + ud.coeffs[i] - u.coeffs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn union_is_idempotent_commutative_associative(a in arb_mesh(), pb in prop::collection::vec(0usize..1000, 0..6), pc in prop::collection::vec(0usize..1000, 0..6)) {
        let n = a.root_grid().0;
        let b = mesh_from(n, &pb, 2);
        let c = mesh_from(n, &pc, 1);
        prop_assert!(a.union(&a).unwrap().same_cells(&a));
        prop_assert!(a.union(&b).unwrap().same_cells(&b.union(&a).unwrap()));
        let l = a.union(&b).unwrap().union(&c).unwrap();
        let r = a.union(&b.union(&c).unwrap()).unwrap();
        prop_assert!(l.same_cells(&r));
        prop_assert!((l.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_root_exists_under_step_condition(c1 in 0.0f64..0.36, c2 in 0.0f64..0.06) {
        // Σ j C_j e^j ≤ 1 guarantees a root in (1, ∞).
        prop_assume!(c1 * std::f64::consts::E + 2.0 * c2 * std::f64::consts::E.powi(2) <= 1.0);
        let eq = DeltaEquation::new(vec![(1.0, c1), (2.0, c2)]);
        let d = eq.solve();
        prop_assert!(d.is_some());
        let d = d.unwrap();
        prop_assert!(d >= 1.0);
        prop_assert!(eq.s(d).abs() < 1e-9);
    }
}

#[test]
fn galerkin_reproduces_polynomial_solutions() {
    let exact = |x: [f64; 2]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let eps = 0.1;
    let mut data = ProblemData::diffusion(eps);
    data.a = constant_vec([1.0, 0.5]);
    data.f = Arc::new(move |x, _| {
        let (u, v) = (x[0], x[1]);
        let lap = -2.0 * v * (1.0 - v) - 2.0 * u * (1.0 - u);
        let gx = (1.0 - 2.0 * u) * v * (1.0 - v);
        let gy = u * (1.0 - u) * (1.0 - 2.0 * v);
        -eps * lap + gx + 0.5 * gy
    });
    let mesh = mesh_from(2, &[0, 5], 2);
    for p in [2, 3] {
        let sp = DgSpace::new(Arc::new(mesh.clone()), p);
        let uh = solve_stationary(&sp, &data, 0.0).unwrap();
        for cell in 0..mesh.num_cells() {
            for (x, _) in sp.key_quadrature(&mesh.key(cell), p + 1) {
                assert!((uh.eval(cell, x) - exact(x)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn delta_closed_forms() {
    let e = std::f64::consts::E;
    let d = DeltaEquation::<f64>::new(vec![(1.0, 1.0 / e)]).solve().unwrap();
    assert!((d - e).abs() < 1e-5);
    let d: f64 = DeltaEquation::new(vec![(2.0, 1.0 / (2.0 * e))]).solve().unwrap();
    assert!((d - e.sqrt()).abs() < 1e-5);
    let d: f64 = DeltaEquation::new(vec![(1.0, 0.1)]).solve().unwrap();
    assert!((d - 1.1183256).abs() < 1e-6);
    assert!(DeltaEquation::new(vec![(1.0, 1.0)]).solve().is_none());
    // K²/ε·τ·(Gφ)² = 1/(2e) for the L∞(L²) continuation.
    let d = continuation_delta(Continuation::LinfL2, 1.0, 1.0, 1.0, 1.0, (1.0 / (2.0 * e)).sqrt()).unwrap();
    assert!((d - e.sqrt()).abs() < 1e-5);
}

#[test]
fn ode_hand_steps() {
    let rhs = PolynomialRhs::<f64>::power(2).unwrap();
    assert!((ode_step(Scheme::Explicit, &rhs, 1.0, 0.1).unwrap() - 1.1).abs() < 1e-14);
    assert!((ode_step(Scheme::Improved, &rhs, 1.0, 0.1).unwrap() - 1.1105).abs() < 1e-14);
    assert!((ode_step(Scheme::Implicit, &rhs, 1.0, 0.1).unwrap() - 1.127016654).abs() < 1e-9);
    let r = residual_integral(Scheme::Explicit, &rhs, 1.0, 1.1, 0.1);
    assert!((r - 0.0103333333).abs() < 1e-9);
    let g = gronwall_factor(&rhs, 1.0, 1.1, 0.1);
    assert!((g - 0.21f64.exp()).abs() < 1e-12);
    // First step: φ is the residual itself and the equation is linear in δ.
    let eq = ode_delta_equation(&rhs, 1.0, 1.1, 0.1, g, r);
    assert!((eq.terms[0].1 - g * r * 0.1).abs() < 1e-15);
}

#[test]
fn interface_constants_of_the_layer_problem() {
    let ip = InterfaceParams::<f64> { rho: 0.1, r: 0.5, w1: 1.0, w2: 0.0 };
    assert!((ip.alpha_rw() - 0.75).abs() < 1e-14);
    assert!((ip.alpha_rho(2f64.sqrt()) - 10.2).abs() < 1e-12);
}

#[test]
fn zero_data_gives_zero_estimators() {
    let mesh = Mesh::<f64>::uniform(Rect::new(-1.0, -1.0, 1.0, 1.0), 4, 4)
        .unwrap()
        .with_interface(&[([0.0, -1.0], [0.0, 1.0])], [-0.5, 0.0])
        .unwrap();
    let sp = DgSpace::new(Arc::new(mesh.clone()), 2);
    let zero = DgFunction::zeros(&sp);

    let mut lin = ProblemData::diffusion(0.1);
    lin.a = constant_vec([1.0, 1.0]);
    let slab = solve_slab(StepKind::BackwardEuler, 0, &zero, &zero, &sp, &lin, 0.0, 0.1, &mut StepCache::default())
        .unwrap();
    let p = slab_estimators(&slab, &lin, None);
    for v in [p.s1_old, p.s1_new, p.s2, p.s3_old, p.s3_new, p.s4, p.t1_sq, p.t2_sq] {
        assert_eq!(v, 0.0);
    }
    assert!(p.s1_cells.iter().all(|v| *v == 0.0));

    let mut bl = ProblemData::diffusion(1.0);
    bl.nonlinear = Some(Nonlinearity::blowup(constant(0.0)));
    let slab = solve_slab(StepKind::Imex, 0, &zero, &zero, &sp, &bl, 0.0, 0.1, &mut StepCache::default()).unwrap();
    let p = slab_parts_blowup(&slab, &bl, None);
    for v in [p.eta_s1_new, p.eta_s2, p.eta_s4, p.a_sq, p.b, p.t2_sq, p.jump_new] {
        assert_eq!(v, 0.0);
    }

    let mut ifc = ProblemData::diffusion(0.1);
    ifc.a = constant_vec([1.0, 1.0]);
    ifc.nonlinear = Some(Nonlinearity::source(constant(0.0)));
    ifc.interface = Some(InterfaceParams { rho: 0.1, r: 0.5, w1: 1.0, w2: 0.0 });
    let k = InterfaceConstants::new(&mesh, &ifc, 2, 0.0);
    let slab = solve_slab(StepKind::Imex, 0, &zero, &zero, &sp, &ifc, 0.0, 0.1, &mut StepCache::default()).unwrap();
    let p = slab_parts_interface(&slab, &ifc, &k);
    for v in [p.eta_s1, p.eta_s6, p.a_sq, p.b_sq, p.t123_sq, p.t4_sq, p.jump_new] {
        assert_eq!(v, 0.0);
    }
}
