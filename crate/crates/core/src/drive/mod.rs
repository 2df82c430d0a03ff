//! Adaptive drivers, the problem registry, run logs and their analytics.

mod adapt;
mod analytics;
mod output;
mod problems;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::est_interface::InterfaceBound;

pub use adapt::{algorithm_3_1, algorithm_3_1_with, algorithm_5_1, algorithm_5_1_with, stationary, Snapshot, StationaryStep};
pub use analytics::{
    dist_to_horizontal, dist_to_vertical, effectivity, energy_error_sq, l2_error_sq, layer_means, slope,
    stationary_energy_error, summarize_sweep, ErrorNorms, SweepPoint, ERROR_FLOOR,
};
pub use output::{write_mesh_vtk, write_run, write_solution_vtk, write_stationary};
pub use problems::{layer_profile, Family, Problem, ProblemId};

/// Tolerances, initial discretisation and budgets of an adaptive run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptConfig {
    /// `ttol` of the linear driver, `ttol⁺` of the blow-up driver.
    pub ttol: f64,
    /// `ttol⁻` (blow-up driver only); defaults to `0.01 ttol⁺`.
    pub ttol_minus: Option<f64>,
    pub stol_plus: f64,
    /// Defaults to `0.001 stol⁺` (linear, interface) or `10⁻⁶ stol⁺` (blow-up).
    pub stol_minus: Option<f64>,
    /// Number of initial uniform steps of the linear driver.
    pub n_initial: usize,
    /// Initial step of the blow-up driver.
    pub tau1: f64,
    pub max_dofs: usize,
    pub max_slabs: usize,
    /// Iteration cap of the initial mesh loop.
    pub max_initial_iterations: usize,
    /// Accumulate `‖u − u_h‖_*` when the problem has an exact solution.
    pub track_error: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            ttol: 1e-3,
            ttol_minus: None,
            stol_plus: 1e-3,
            stol_minus: None,
            n_initial: 10,
            tau1: 1.0 / 32.0,
            max_dofs: 200_000,
            max_slabs: 100_000,
            max_initial_iterations: 50,
            track_error: true,
        }
    }
}

impl AdaptConfig {
    pub fn linear(ttol: f64, stol_plus: f64) -> Self {
        AdaptConfig { ttol, stol_plus, ..Default::default() }
    }

    pub fn blowup(ttol_plus: f64, stol_plus: f64) -> Self {
        AdaptConfig { ttol: ttol_plus, stol_plus, ..Default::default() }
    }

    pub fn stol_minus_linear(&self) -> f64 {
        self.stol_minus.unwrap_or(1e-3 * self.stol_plus)
    }

    pub fn stol_minus_blowup(&self) -> f64 {
        self.stol_minus.unwrap_or(1e-6 * self.stol_plus)
    }

    pub fn ttol_minus_blowup(&self) -> f64 {
        self.ttol_minus.unwrap_or(1e-2 * self.ttol)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Input(m.to_string()));
        if !(self.ttol > 0.0 && self.stol_plus > 0.0) {
            return bad("tolerances must be positive");
        }
        if let Some(s) = self.stol_minus {
            if !(s > 0.0 && s < self.stol_plus) {
                return bad("need 0 < stol⁻ < stol⁺");
            }
        }
        if let Some(s) = self.ttol_minus {
            if !(s > 0.0 && s < self.ttol) {
                return bad("need 0 < ttol⁻ < ttol⁺");
            }
        }
        if self.n_initial == 0 || self.tau1.is_nan() || self.tau1 <= 0.0 {
            return bad("the initial time step must be positive");
        }
        if self.max_dofs == 0 || self.max_slabs == 0 {
            return bad("budgets must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ReachedT,
    DeltaNonexistent,
    Budget,
}

impl Termination {
    /// Process exit code; δ-nonexistence counts as clean only where it is expected.
    pub fn exit_code(&self, delta_expected: bool) -> i32 {
        match self {
            Termination::ReachedT => 0,
            Termination::DeltaNonexistent if delta_expected => 0,
            Termination::DeltaNonexistent => 3,
            Termination::Budget => 2,
        }
    }
}

/// One accepted slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabRow {
    pub k: usize,
    pub t_old: f64,
    pub tau: f64,
    /// Degrees of freedom on the union mesh of the slab.
    pub dofs: usize,
    pub cells: usize,
    /// `η²_{S1}` of the new solution, total and largest cell value.
    pub s1_sq: f64,
    pub s1_max: f64,
    /// The temporal indicator gating the step.
    pub time_indicator: f64,
    pub ttol: f64,
    pub stol_plus: f64,
    pub refined: usize,
    pub coarsened: usize,
    pub halvings: usize,
    pub doublings: usize,
    /// Whether the time gate held for the accepted step before the mesh update.
    pub time_gate: bool,
    pub linf: f64,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub psi: Option<f64>,
    /// `∫|||e|||²` over the slab and `‖e(t)‖²` at its end, when tracked.
    pub err_energy_sq: Option<f64>,
    pub err_l2_sq: Option<f64>,
}

/// Estimator totals of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub eta: f64,
    pub eta_space: f64,
    pub eta_time: f64,
    pub weighted_dofs: f64,
}

/// Centre and side length of a cell of the final mesh.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellInfo {
    pub x: f64,
    pub y: f64,
    pub h: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunLog {
    pub problem: ProblemId,
    pub algorithm: String,
    pub eps: f64,
    pub p: usize,
    pub config: AdaptConfig,
    pub rows: Vec<SlabRow>,
    pub termination: Termination,
    pub initial_iterations: usize,
    /// The initial loop stopped at its iteration cap.
    pub initial_capped: bool,
    pub steps: usize,
    pub final_time: f64,
    pub final_linf: f64,
    /// `max_k ‖u_h(t^k)‖_{L∞}`.
    pub max_linf: f64,
    pub totals: Totals,
    pub error: Option<ErrorNorms>,
    /// Final continuation bound of the blow-up driver.
    pub blowup_bound: Option<f64>,
    pub interface: Option<InterfaceBound<f64>>,
    #[serde(skip)]
    pub final_mesh: Vec<CellInfo>,
}

impl RunLog {
    pub fn effectivity(&self) -> Option<f64> {
        self.error.as_ref().and_then(|e| effectivity(self.totals.eta, e.star))
    }
}
