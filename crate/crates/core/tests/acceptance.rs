//! Acceptance suite. One PASS/FAIL line per criterion.
//!
//! Exits 0 regardless of outcome unless `ACCEPTANCE_STRICT=1`.

use std::time::Instant;

use dgblow::drive::{
    algorithm_3_1, algorithm_5_1, dist_to_horizontal, dist_to_vertical, layer_means, slope,
    summarize_sweep, AdaptConfig, CellInfo, Problem, ProblemId, RunLog, SweepPoint,
};
use dgblow::est_blowup::{continuation_delta, Continuation};
use dgblow::ode_blowup::{
    gronwall_factor, lambda_rate, ode_step, residual_integral, run_ode, DeltaEquation, OdeAlgorithm, OdeConfig,
    PolynomialRhs, Scheme,
};
use dgblow::problem::InterfaceParams;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, ok: bool, name: &str, detail: String) {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.lines.push((ok, name.to_string()));
    }
}

fn within(x: Option<f64>, target: f64, tol: f64) -> bool {
    x.is_some_and(|v| (v - target).abs() <= tol)
}

fn fmt(x: Option<f64>) -> String {
    x.map_or("n/a".into(), |v| format!("{v:.3}"))
}

fn ode_rate(alg: OdeAlgorithm, p: usize, scheme: Scheme) -> Option<f64> {
    let rhs = PolynomialRhs::<f64>::power(p).unwrap();
    let t_star = rhs.blowup_time(1.0).unwrap();
    let pts: Vec<(usize, f64)> = (6..=22)
        .map(|k| {
            let cfg = OdeConfig {
                scheme,
                algorithm: alg,
                u0: 1.0,
                tau1: 0.5,
                tol: 2f64.powi(-k),
                max_steps: 10_000_000,
                keep_records: false,
            };
            let r = run_ode(&rhs, &cfg);
            (r.steps, r.lambda(t_star))
        })
        .collect();
    lambda_rate(&pts).ok()
}

fn ode_criteria(rep: &mut Report) {
    let t0 = Instant::now();
    let targets = [
        (2, Scheme::Implicit, 1.00, 0.15),
        (2, Scheme::Explicit, 1.45, 0.15),
        (2, Scheme::Improved, 2.03, 0.20),
        (3, Scheme::Implicit, 1.00, 0.15),
        (3, Scheme::Explicit, 1.43, 0.20),
        (3, Scheme::Improved, 2.03, 0.20),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, s, target, tol) in targets {
        let r = ode_rate(OdeAlgorithm::Two, p, s);
        ok &= within(r, target, tol);
        detail.push(format!("p={p} {s} r={} (target {target}±{tol})", fmt(r)));
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 120.0;
    rep.record(ok, "C1 ODE rates, tolerance inflated by G", format!("{}; {secs:.0}s", detail.join(", ")));

    let t0 = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (s, target, tol) in [(Scheme::Implicit, 0.66, 0.2), (Scheme::Explicit, 1.35, 0.2), (Scheme::Improved, 1.2, 0.25)] {
        let r = ode_rate(OdeAlgorithm::One, 2, s);
        ok &= within(r, target, tol);
        detail.push(format!("p=2 {s} r={} (target {target}±{tol})", fmt(r)));
    }
    let secs = t0.elapsed().as_secs_f64();
    rep.record(ok, "C2 ODE rates, fixed tolerance", format!("{}; {secs:.0}s", detail.join(", ")));
}

fn sweep_point(tol: f64, log: &RunLog) -> SweepPoint {
    SweepPoint {
        tol,
        weighted_dofs: log.totals.weighted_dofs,
        steps: log.steps,
        eta: log.totals.eta,
        eta_space: log.totals.eta_space,
        eta_time: log.totals.eta_time,
        error: log.error.as_ref().map(|e| e.star),
    }
}

fn effectivity_criterion(rep: &mut Report) {
    let t0 = Instant::now();
    let sweeps: [(f64, f64, &[f64]); 3] = [
        (1.0, 1e-9, &[1e-7, 1e-8, 1e-9, 1e-10]),
        (0.1, 1e-7, &[1e-4, 1e-5, 1e-6]),
        (0.01, 1e-6, &[1e-4, 1e-5, 1e-6]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    let mut max_dofs = 0;
    for (eps, ttol, stols) in sweeps {
        let problem = Problem::<f64>::new(ProblemId::BoundaryLayer, eps, 2, 0).unwrap();
        let pts: Vec<SweepPoint> = stols
            .iter()
            .map(|&stol| {
                let log = algorithm_3_1(&problem, &AdaptConfig::linear(ttol, stol)).unwrap();
                max_dofs = max_dofs.max(log.rows.iter().map(|r| r.dofs).max().unwrap_or(0));
                sweep_point(stol, &log)
            })
            .collect();
        let (space, _, eff) = summarize_sweep(&pts);
        let last: Vec<Option<f64>> = eff[eff.len() - 2..].to_vec();
        let eff_ok = last.iter().all(|e| e.is_some_and(|v| (3.0..=15.0).contains(&v)));
        let slope_ok = space.is_some_and(|s| (s + 1.0).abs() <= 0.15);
        ok &= eff_ok && slope_ok;
        detail.push(format!(
            "eps={eps}: eff {} {} slope {}",
            fmt(last[0]),
            fmt(last[1]),
            fmt(space)
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 1800.0 && max_dofs <= 100_000;
    rep.record(
        ok,
        "C3 spatial effectivity and rate",
        format!("{}; max dofs {max_dofs}; {secs:.0}s", detail.join(", ")),
    );
}

fn temporal_criterion(rep: &mut Report) {
    let t0 = Instant::now();
    let problem = Problem::<f64>::new(ProblemId::BoundaryLayer, 1.0, 4, 2).unwrap();
    let runs: Vec<RunLog> = (0..4)
        .map(|m| {
            let cfg = AdaptConfig {
                stol_minus: Some(1e-300),
                ..AdaptConfig::linear(1e-6 / 8f64.powi(m), 1e10)
            };
            algorithm_3_1(&problem, &cfg).unwrap()
        })
        .collect();
    let fixed = runs.iter().all(|l| l.rows.iter().all(|r| r.refined == 0 && r.coarsened == 0));
    let err: Vec<f64> = runs.iter().map(|l| l.error.as_ref().unwrap().star).collect();
    let est: Vec<f64> = runs.iter().map(|l| l.totals.eta_time).collect();
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let (re, rt) = (ratios(&err), ratios(&est));
    let ok = fixed && re.iter().chain(&rt).all(|r| (r - 2.0).abs() <= 0.2);
    let steps: Vec<usize> = runs.iter().map(|l| l.steps).collect();
    rep.record(
        ok,
        "C4 temporal first order",
        format!(
            "steps {steps:?}, error ratios {:.3?}, eta_T ratios {:.3?}, fixed mesh {fixed}; {:.0}s",
            re,
            rt,
            t0.elapsed().as_secs_f64()
        ),
    );
}

fn blowup_criterion(rep: &mut Report) {
    let t0 = Instant::now();
    let problem = Problem::<f64>::new(ProblemId::GaussianBlowup, 1.0, 2, 0).unwrap();
    let mut times = Vec::new();
    let mut pts = Vec::new();
    for m in 0..=6 {
        let log = algorithm_5_1(&problem, &AdaptConfig::blowup(8f64.powi(-m), 1e-5)).unwrap();
        times.push(log.final_time);
        pts.push((log.steps as f64, log.final_linf));
    }
    let increasing = times.windows(2).all(|w| w[1] > w[0]);
    let s = slope(&pts).ok();
    let ok = increasing && within(s, 0.5, 0.1);
    let ts: Vec<String> = times.iter().map(|t| format!("{t:.5}")).collect();
    let us: Vec<String> = pts.iter().map(|(n, u)| format!("{n}:{u:.2}")).collect();
    rep.record(
        ok,
        "C5 blow-up approach",
        format!(
            "final times [{}] increasing {increasing}, N:|u|inf [{}], slope {}; {:.0}s",
            ts.join(" "),
            us.join(" "),
            fmt(s),
            t0.elapsed().as_secs_f64()
        ),
    );
}

fn outflow_dist(c: &CellInfo) -> f64 {
    dist_to_vertical(c, 1.0).min(dist_to_horizontal(c, 1.0))
}

fn interface_criterion(rep: &mut Report) {
    let t0 = Instant::now();
    let problem = Problem::<f64>::new(ProblemId::InterfaceLayer, 0.01, 2, 0).unwrap();
    let run = |ttol: f64, stol: f64| algorithm_3_1(&problem, &AdaptConfig::linear(ttol, stol));
    let base = run(1e-3, 1e-3).unwrap();
    let cells = &base.final_mesh;
    let (gamma, _) = layer_means(cells, 0.05, |c| dist_to_vertical(c, 0.0));
    let (outflow, _) = layer_means(cells, 0.05, outflow_dist);
    let (_, bulk) = layer_means(cells, 0.05, |c| dist_to_vertical(c, 0.0).min(outflow_dist(c)));
    let layers_ok = bulk >= 4.0 * gamma && bulk >= 4.0 * outflow;

    let mut space = vec![sweep_point(1e-3, &base)];
    for stol in [1e-4, 1e-5] {
        space.push(sweep_point(stol, &run(1e-3, stol).unwrap()));
    }
    let mut time = vec![sweep_point(1e-3, &base)];
    for ttol in [1e-4, 1e-5] {
        time.push(sweep_point(ttol, &run(ttol, 1e-3).unwrap()));
    }
    let (s_space, _, _) = summarize_sweep(&space);
    let (_, s_time, _) = summarize_sweep(&time);
    let space_ok = s_space.is_some_and(|s| (s + 1.0).abs() <= 0.15);
    let time_ok = s_time.is_some_and(|s| (s + 1.0).abs() <= 0.15);
    let pairwise: Vec<String> = space
        .windows(2)
        .map(|w| fmt(slope(&[(w[0].weighted_dofs, w[0].eta_space), (w[1].weighted_dofs, w[1].eta_space)]).ok()))
        .collect();
    rep.record(
        layers_ok && space_ok && time_ok,
        "C6 interface layer capture",
        format!(
            "mean h: gamma {gamma:.4} outflow {outflow:.4} bulk {bulk:.4} (ratios {:.2}, {:.2}); space slope {} (pairwise {}) time slope {} (target -1±0.15); {:.0}s",
            bulk / gamma,
            bulk / outflow,
            fmt(s_space),
            pairwise.join(" "),
            fmt(s_time),
            t0.elapsed().as_secs_f64()
        ),
    );
}

fn closed_form_criterion(rep: &mut Report) {
    let e = std::f64::consts::E;
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol;
    let rhs = PolynomialRhs::<f64>::power(2).unwrap();
    let checks = [
        ("delta c=1/e", DeltaEquation::new(vec![(1.0, 1.0 / e)]).solve().is_some_and(|d| close(d, e, 1e-5))),
        (
            "delta c=1/(2e)",
            DeltaEquation::new(vec![(2.0, 1.0 / (2.0 * e))]).solve().is_some_and(|d| close(d, e.sqrt(), 1e-5)),
        ),
        (
            "continuation delta",
            continuation_delta(Continuation::LinfL2, 1.0, 1.0, 1.0, 1.0, (1.0 / (2.0 * e)).sqrt())
                .is_some_and(|d| close(d, e.sqrt(), 1e-5)),
        ),
        ("explicit step", ode_step(Scheme::Explicit, &rhs, 1.0, 0.1).is_some_and(|u| close(u, 1.1, 1e-14))),
        ("improved step", ode_step(Scheme::Improved, &rhs, 1.0, 0.1).is_some_and(|u| close(u, 1.1105, 1e-14))),
        (
            "implicit step",
            ode_step(Scheme::Implicit, &rhs, 1.0, 0.1).is_some_and(|u| close(u, 1.127016654, 1e-9)),
        ),
        (
            "residual integral",
            close(residual_integral(Scheme::Explicit, &rhs, 1.0, 1.1, 0.1), 0.0103333333, 1e-9),
        ),
        ("gronwall factor", close(gronwall_factor(&rhs, 1.0, 1.1, 0.1), 0.21f64.exp(), 1e-12)),
        ("alpha_rw", close(InterfaceParams { rho: 0.1, r: 0.5, w1: 1.0, w2: 0.0 }.alpha_rw(), 0.75, 1e-14)),
        (
            "alpha_rho",
            close(InterfaceParams { rho: 0.1, r: 0.5, w1: 1.0, w2: 0.0 }.alpha_rho(2f64.sqrt()), 10.2, 1e-12),
        ),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    rep.record(
        failed.is_empty(),
        "C7 closed forms (full property suite in tests/properties.rs)",
        if failed.is_empty() { format!("{} checks", checks.len()) } else { format!("failed {failed:?}") },
    );
}

fn main() {
    let mut rep = Report { lines: Vec::new() };
    closed_form_criterion(&mut rep);
    ode_criteria(&mut rep);
    temporal_criterion(&mut rep);
    blowup_criterion(&mut rep);
    interface_criterion(&mut rep);
    effectivity_criterion(&mut rep);
    let passed = rep.lines.iter().filter(|l| l.0).count();
    println!("acceptance: {passed}/{} criteria passed", rep.lines.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < rep.lines.len() {
        std::process::exit(1);
    }
}
