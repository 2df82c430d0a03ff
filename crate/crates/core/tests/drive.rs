use dgblow::drive::{
    algorithm_3_1, algorithm_5_1, effectivity, layer_means, slope, stationary, AdaptConfig, CellInfo, Problem,
    ProblemId, Termination,
};

fn layer(eps: f64) -> Problem<f64> {
    Problem::new(ProblemId::BoundaryLayer, eps, 2, 0).unwrap()
}

#[test]
fn huge_tolerances_keep_the_initial_steps() {
    let p = layer(1.0);
    let cfg = AdaptConfig { n_initial: 8, track_error: false, ..AdaptConfig::linear(1e10, 1e10) };
    let log = algorithm_3_1(&p, &cfg).unwrap();
    assert_eq!(log.termination, Termination::ReachedT);
    assert_eq!(log.rows.len(), 8);
    for r in &log.rows {
        assert_eq!(r.tau, 10.0 / 8.0);
        assert_eq!((r.refined, r.halvings), (0, 0));
        assert_eq!(r.cells, 16);
    }
    assert!((log.final_time - 10.0).abs() < 1e-12);
}

#[test]
fn steady_phase_retains_the_coarse_step() {
    let p = layer(1.0);
    let cfg = AdaptConfig { n_initial: 10, ..AdaptConfig::linear(1e-5, 1e-3) };
    let log = algorithm_3_1(&p, &cfg).unwrap();
    assert_eq!(log.termination, Termination::ReachedT);
    assert!(log.rows.first().unwrap().tau < 1.0);
    assert_eq!(log.rows.last().unwrap().tau, 1.0);
    for r in &log.rows {
        assert!(r.time_indicator <= cfg.ttol);
    }
    for w in log.rows.windows(2) {
        assert_eq!(w[1].k, w[0].k + 1);
        assert!((w[1].t_old - (w[0].t_old + w[0].tau)).abs() < 1e-12);
    }
    assert!(log.effectivity().is_some());
}

#[test]
fn runs_are_deterministic() {
    let p = layer(0.1);
    let cfg = AdaptConfig { n_initial: 4, ..AdaptConfig::linear(1e-3, 1e-2) };
    let a = algorithm_3_1(&p, &cfg).unwrap();
    let b = algorithm_3_1(&p, &cfg).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.totals, b.totals);
}

#[test]
fn zero_blowup_ends_by_budget() {
    let p = Problem::<f64>::new(ProblemId::ZeroBlowup, 1.0, 1, 0).unwrap();
    let cfg = AdaptConfig { max_slabs: 12, ..AdaptConfig::blowup(1e-2, 1e-2) };
    let log = algorithm_5_1(&p, &cfg).unwrap();
    assert_eq!(log.termination, Termination::Budget);
    assert_eq!(log.termination.exit_code(true), 2);
    assert!(log.rows.iter().all(|r| r.delta.is_some() && r.linf == 0.0));
}

#[test]
fn gaussian_blowup_terminates_by_delta() {
    let p = Problem::<f64>::new(ProblemId::GaussianBlowup, 1.0, 2, 0).unwrap();
    let cfg = AdaptConfig::blowup(1.0, 1e-1);
    let log = algorithm_5_1(&p, &cfg).unwrap();
    assert_eq!(log.termination, Termination::DeltaNonexistent);
    assert_eq!(log.termination.exit_code(true), 0);
    assert_eq!(log.termination.exit_code(false), 3);
    assert!(log.final_linf > 10.0);
    let psi: Vec<f64> = log.rows.iter().filter_map(|r| r.psi).collect();
    assert!(psi.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn stationary_loop_reduces_the_estimator() {
    let p = Problem::<f64>::new(ProblemId::StationaryLayer, 0.1, 2, 0).unwrap();
    let cfg = AdaptConfig::linear(1.0, 1e-4);
    let (steps, term) = stationary(&p, &cfg).unwrap();
    assert_eq!(term, Termination::ReachedT);
    assert!(steps.len() > 1);
    assert!(steps.last().unwrap().eta < steps[0].eta);
    assert!(steps.last().unwrap().max_cell <= 1e-4);
}

#[test]
fn config_validation() {
    assert!(AdaptConfig::linear(1e-3, 1e-3).validate().is_ok());
    assert!(AdaptConfig { stol_minus: Some(1.0), ..AdaptConfig::linear(1e-3, 1e-3) }.validate().is_err());
    assert!(AdaptConfig { ttol_minus: Some(1.0), ..AdaptConfig::blowup(1e-3, 1e-3) }.validate().is_err());
    assert!(AdaptConfig::linear(0.0, 1e-3).validate().is_err());
    let c = AdaptConfig::linear(1.0, 1.0);
    assert_eq!(c.stol_minus_linear(), 1e-3);
    assert_eq!(c.stol_minus_blowup(), 1e-6);
    assert_eq!(c.ttol_minus_blowup(), 1e-2);
}

#[test]
fn analytics_helpers() {
    assert_eq!(effectivity(1.0, 1e-14), None);
    assert_eq!(effectivity(2.0, 0.5), Some(4.0));
    let pts: Vec<(f64, f64)> = (1..6).map(|n| (n as f64 * 10.0, (n as f64 * 10.0).powf(-1.5))).collect();
    assert!((slope(&pts).unwrap() + 1.5).abs() < 1e-12);
    let cells = [
        CellInfo { x: 0.01, y: 0.5, h: 0.02 },
        CellInfo { x: 0.5, y: 0.5, h: 0.2 },
        CellInfo { x: 0.25, y: 0.25, h: 0.1 },
    ];
    let (near, bulk) = layer_means(&cells, 0.05, |c| c.x - 0.5 * c.h);
    assert!((near - 0.02 * 2f64.sqrt()).abs() < 1e-14);
    assert!((bulk - 0.15 * 2f64.sqrt()).abs() < 1e-14);
}

#[test]
fn problem_ids_round_trip() {
    for id in ProblemId::ALL {
        assert_eq!(id.name().parse::<ProblemId>().unwrap(), id);
        let json = serde_json::to_string(&id).unwrap();
        assert_eq!(json, format!("\"{}\"", id.name()));
    }
    assert!("no-such-problem".parse::<ProblemId>().is_err());
}
