use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dgblow::drive::{
    algorithm_3_1_with, algorithm_5_1_with, dist_to_horizontal, dist_to_vertical, layer_means, slope, stationary, summarize_sweep, write_mesh_vtk, write_run,
    write_solution_vtk, write_stationary, AdaptConfig, Family, Problem, ProblemId, RunLog, Snapshot, SweepPoint,
    Termination,
};
use dgblow::ode_blowup::{lambda_rate, run_ode, OdeAlgorithm, OdeConfig, OdeTermination, PolynomialRhs, Scheme};

#[derive(Parser)]
#[command(name = "dgblow", version, about = "Space-time adaptive dG solvers for convection-diffusion and blow-up problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Adaptive solve of the stationary boundary layer problem.
    Stationary(RunArgs),
    /// Space-time adaptive run of a linear convection-diffusion problem.
    Linear(RunArgs),
    /// Adaptive approach to the blow-up time of a scalar ODE.
    BlowupOde(OdeArgs),
    /// Space-time adaptive run of a semilinear blow-up problem.
    BlowupPde(RunArgs),
    /// Space-time adaptive run of the interface problem.
    Interface(RunArgs),
    /// Tolerance sweep with estimator rates and effectivity indices.
    Rates(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem id; overrides the configuration file.
    #[arg(long)]
    problem: Option<ProblemId>,
    /// Output directory; overrides the configuration file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OdeScheme {
    Explicit,
    Implicit,
    Improved,
}

#[derive(Args)]
struct OdeArgs {
    #[arg(long, value_enum, default_value = "explicit")]
    scheme: OdeScheme,
    /// Exponent of `f(u) = u^p`.
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 0.5)]
    tau0: f64,
    #[arg(long, default_value_t = 1.0)]
    u0: f64,
    /// 1 keeps `tol` fixed, 2 inflates it by `G` after every step.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    algorithm: u8,
    /// Number of runs with `tol` halved each time; more than one fits the rate `r`.
    #[arg(long, default_value_t = 1)]
    levels: usize,
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Contents of the JSON configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    problem: ProblemId,
    eps: Option<f64>,
    p: Option<usize>,
    /// Uniform refinements of the registered initial mesh.
    refinements: u32,
    #[serde(flatten)]
    adapt: AdaptConfig,
    output_dir: PathBuf,
    /// Write `mesh_k.vtk` and `sol_k.vtk` every `stride` steps; 0 disables snapshots.
    stride: usize,
    /// `stol⁺` values of a `rates` sweep.
    stol_sweep: Vec<f64>,
    /// `ttol` values of a `rates` sweep; used when `stol_sweep` is empty.
    ttol_sweep: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemId::BoundaryLayer,
            eps: None,
            p: None,
            refinements: 0,
            adapt: AdaptConfig::default(),
            output_dir: PathBuf::from("out"),
            stride: 0,
            stol_sweep: Vec::new(),
            ttol_sweep: Vec::new(),
        }
    }
}

fn load(args: &RunArgs, default: ProblemId) -> Result<RunConfig, String> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig { problem: default, ..Default::default() },
    };
    if let Some(p) = args.problem {
        cfg.problem = p;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn build(cfg: &RunConfig) -> Result<Problem<f64>, String> {
    let id = cfg.problem;
    Problem::new(id, cfg.eps.unwrap_or(id.default_eps()), cfg.p.unwrap_or(id.default_degree()), cfg.refinements)
        .map_err(|e| e.to_string())
}

fn expect_family(cfg: &RunConfig, want: &[Family]) -> Result<(), String> {
    if want.contains(&cfg.problem.family()) {
        Ok(())
    } else {
        Err(format!("problem `{}` cannot be run by this subcommand", cfg.problem))
    }
}

fn snapshot(dir: &Path, stride: usize, s: Snapshot<f64>) {
    if stride == 0 || !s.k.is_multiple_of(stride) {
        return;
    }
    let mesh = dir.join(format!("mesh_{}.vtk", s.k));
    let sol = dir.join(format!("sol_{}.vtk", s.k));
    if let Err(e) = write_mesh_vtk(s.u.mesh(), &mesh).and_then(|_| write_solution_vtk(s.u, &sol)) {
        eprintln!("warning: snapshot {} not written: {e}", s.k);
    }
}

fn run_adaptive(cfg: &RunConfig, blowup: bool) -> Result<RunLog, String> {
    let problem = build(cfg)?;
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let stride = cfg.stride;
    let mut observe = |s: Snapshot<f64>| snapshot(&dir, stride, s);
    let log = if blowup {
        algorithm_5_1_with(&problem, &cfg.adapt, &mut observe)
    } else {
        algorithm_3_1_with(&problem, &cfg.adapt, &mut observe)
    }
    .map_err(|e| e.to_string())?;
    write_run(&log, &dir).map_err(|e| e.to_string())?;
    Ok(log)
}

fn report(log: &RunLog) {
    println!(
        "{} [{}]: {:?} after {} steps at t = {:.6}, max |u_h| = {:.6}",
        log.problem, log.algorithm, log.termination, log.steps, log.final_time, log.final_linf
    );
    println!(
        "eta = {:.4e} (space {:.4e}, time {:.4e}), weighted dofs = {:.1}",
        log.totals.eta, log.totals.eta_space, log.totals.eta_time, log.totals.weighted_dofs
    );
    if let Some(e) = &log.error {
        match log.effectivity() {
            Some(eff) => println!("error = {:.4e}, effectivity = {eff:.3}", e.star),
            None => println!("error = {:.4e} is below the floor", e.star),
        }
    }
    if let Some(b) = log.blowup_bound {
        println!("continuation bound = {b:.4e}");
    }
    if let Some(b) = &log.interface {
        println!("interface bound = {:.4e}, ln G = {:.4}", b.bound, b.ln_g);
        let outflow = |c: &_| dist_to_vertical(c, 1.0).min(dist_to_horizontal(c, 1.0));
        let (gamma, _) = layer_means(&log.final_mesh, 0.05, |c| dist_to_vertical(c, 0.0));
        let (out, _) = layer_means(&log.final_mesh, 0.05, outflow);
        let (_, bulk) = layer_means(&log.final_mesh, 0.05, |c| dist_to_vertical(c, 0.0).min(outflow(c)));
        println!("mean cell diameter: interface {gamma:.4}, outflow {out:.4}, bulk {bulk:.4}");
    }
}

fn cmd_run(args: &RunArgs, family: &[Family], default: ProblemId, blowup: bool) -> Result<ExitCode, String> {
    let cfg = load(args, default)?;
    expect_family(&cfg, family)?;
    let log = run_adaptive(&cfg, blowup)?;
    report(&log);
    Ok(exit(log.termination.exit_code(blowup)))
}

fn cmd_stationary(args: &RunArgs) -> Result<ExitCode, String> {
    let cfg = load(args, ProblemId::StationaryLayer)?;
    expect_family(&cfg, &[Family::Stationary])?;
    let problem = build(&cfg)?;
    let (steps, term) = stationary(&problem, &cfg.adapt).map_err(|e| e.to_string())?;
    write_stationary(&steps, &cfg.output_dir).map_err(|e| e.to_string())?;
    for s in &steps {
        let err = s.error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "-".into());
        println!("dofs {:>7}  eta {:.4e}  error {err}", s.dofs, s.eta);
    }
    let pts: Vec<(f64, f64)> = steps.iter().map(|s| (s.dofs as f64, s.eta)).collect();
    if let Ok(r) = slope(&pts) {
        println!("estimator slope against dofs: {r:.3}");
    }
    Ok(exit(term.exit_code(false)))
}

fn cmd_rates(args: &RunArgs) -> Result<ExitCode, String> {
    let cfg = load(args, ProblemId::BoundaryLayer)?;
    expect_family(&cfg, &[Family::Linear, Family::Interface])?;
    let (space, tols) = if !cfg.stol_sweep.is_empty() {
        (true, cfg.stol_sweep.clone())
    } else if !cfg.ttol_sweep.is_empty() {
        (false, cfg.ttol_sweep.clone())
    } else {
        return Err("a rates run needs `stol_sweep` or `ttol_sweep`".into());
    };
    let mut points = Vec::new();
    let mut worst = Termination::ReachedT;
    for (i, &tol) in tols.iter().enumerate() {
        let mut run = cfg.clone();
        run.stride = 0;
        run.output_dir = cfg.output_dir.join(format!("run_{i}"));
        if space {
            run.adapt.stol_plus = tol;
        } else {
            run.adapt.ttol = tol;
        }
        let log = run_adaptive(&run, false)?;
        if log.termination != Termination::ReachedT {
            worst = log.termination;
        }
        points.push(SweepPoint {
            tol,
            weighted_dofs: log.totals.weighted_dofs,
            steps: log.steps,
            eta: log.totals.eta,
            eta_space: log.totals.eta_space,
            eta_time: log.totals.eta_time,
            error: log.error.map(|e| e.star),
        });
        let eff = log.effectivity().map(|e| format!("{e:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "tol {tol:.3e}: dofs {:.1}, steps {}, eta {:.4e}, effectivity {eff}",
            log.totals.weighted_dofs, log.steps, log.totals.eta
        );
    }
    let mut w = csv::Writer::from_path(cfg.output_dir.join("sweep.csv")).map_err(|e| e.to_string())?;
    for p in &points {
        w.serialize(p).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())?;
    let (s, t, _) = summarize_sweep(&points);
    let fmt = |r: Option<f64>| r.map(|r| format!("{r:.3}")).unwrap_or_else(|| "-".into());
    println!("spatial estimator vs weighted dofs: {}", fmt(s));
    println!("temporal estimator vs steps: {}", fmt(t));
    Ok(exit(worst.exit_code(false)))
}

fn cmd_ode(a: &OdeArgs) -> Result<ExitCode, String> {
    let rhs = PolynomialRhs::<f64>::power(a.p).map_err(|e| e.to_string())?;
    let scheme = match a.scheme {
        OdeScheme::Explicit => Scheme::Explicit,
        OdeScheme::Implicit => Scheme::Implicit,
        OdeScheme::Improved => Scheme::Improved,
    };
    let algorithm = if a.algorithm == 1 { OdeAlgorithm::One } else { OdeAlgorithm::Two };
    let t_star = rhs.blowup_time(a.u0);
    fs::create_dir_all(&a.out).map_err(|e| e.to_string())?;
    let mut runs = csv::Writer::from_path(a.out.join("ode_runs.csv")).map_err(|e| e.to_string())?;
    runs.write_record(["tol", "steps", "final_time", "lambda", "termination"]).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    let mut code = ExitCode::SUCCESS;
    for level in 0..a.levels.max(1) {
        let tol = a.tol * 0.5f64.powi(level as i32);
        let last = level + 1 == a.levels.max(1);
        let cfg = OdeConfig { scheme, algorithm, u0: a.u0, tau1: a.tau0, tol, max_steps: a.max_steps, keep_records: last };
        let r = run_ode(&rhs, &cfg);
        let lambda = t_star.map(|ts| r.lambda(ts));
        runs.write_record([
            tol.to_string(),
            r.steps.to_string(),
            r.final_time.to_string(),
            lambda.map(|l| l.to_string()).unwrap_or_default(),
            format!("{:?}", r.termination),
        ])
        .map_err(|e| e.to_string())?;
        println!("tol {tol:.3e}: N = {}, T = {:.10}, {:?}", r.steps, r.final_time, r.termination);
        if let Some(l) = lambda {
            points.push((r.steps, l));
        }
        if r.termination != OdeTermination::DeltaNonexistent {
            code = ExitCode::from(2);
        }
        if last {
            let mut w = csv::Writer::from_path(a.out.join("ode_steps.csv")).map_err(|e| e.to_string())?;
            w.write_record(["k", "t", "tau", "u_old", "u_new", "residual", "g", "phi", "delta", "psi", "tol"])
                .map_err(|e| e.to_string())?;
            for s in &r.records {
                w.write_record([
                    s.k.to_string(),
                    s.t.to_string(),
                    s.tau.to_string(),
                    s.u_old.to_string(),
                    s.u_new.to_string(),
                    s.residual.to_string(),
                    s.g.to_string(),
                    s.phi.to_string(),
                    s.delta.map(|d| d.to_string()).unwrap_or_default(),
                    s.psi.to_string(),
                    s.tol.to_string(),
                ])
                .map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
    }
    runs.flush().map_err(|e| e.to_string())?;
    if points.len() >= 2 {
        if let Ok(r) = lambda_rate(&points) {
            println!("fitted r = {r:.3}");
        }
    }
    Ok(code)
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::Stationary(a) => cmd_stationary(a),
        Cmd::Linear(a) => cmd_run(a, &[Family::Linear], ProblemId::BoundaryLayer, false),
        Cmd::BlowupOde(a) => cmd_ode(a),
        Cmd::BlowupPde(a) => cmd_run(a, &[Family::Blowup], ProblemId::GaussianBlowup, true),
        Cmd::Interface(a) => cmd_run(a, &[Family::Interface], ProblemId::InterfaceLayer, false),
        Cmd::Rates(a) => cmd_rates(a),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
