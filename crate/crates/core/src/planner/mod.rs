//! Minimum-time transition planning over the planar point-mass model.

mod mission;
pub mod model;
pub mod solver;
mod trajectory;
pub mod transcription;

use std::fmt;
use serde::{Deserialize, Serialize};

pub use mission::{BoundaryState, MissionSpec, Obstacle, PathBounds};
pub use model::{planar_aero, planar_derivative, planar_rhs, planar_trim, PlanarAero, PlanarInput, PlanarState};
pub use trajectory::{feedforward_load, ReferenceTrajectory, CSV_HEADER};
pub use transcription::Transcription;

use crate::vehicle::{AeroFit, VehicleParams};
use crate::{Error, Result};
use solver::AlmOptions;
use transcription::{NodeValues, MIN_INTERIOR_SPEED};

/// Constraint tolerance of the cold-start feasibility phase; later phases tighten it.
const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub nodes: usize,
    /// Max collocation defect in physical units.
    pub tol_defect: f64,
    /// Max scaled constraint violation.
    pub tol_con: f64,
    pub tol_kkt: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Weight on squared input differences between nodes; zero for pure minimum time.
    pub smoothing: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            nodes: 40,
            tol_defect: 1e-6,
            tol_con: 1e-8,
            tol_kkt: 1e-5,
            max_outer: 60,
            max_inner: 300,
            smoothing: 0.0,
        }
    }
}

/// Solved (or best) node values.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSolution {
    pub time: Vec<f64>,
    /// `[x, z, V, gamma, T, alpha]` at each node.
    pub nodes: Vec<NodeValues>,
    pub final_time: f64,
    pub max_defect: f64,
    pub violation: f64,
    pub kkt: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
}

impl PlannerSolution {
    pub fn state(&self, k: usize) -> PlanarState {
        let n = self.nodes[k];
        PlanarState { x: n[0], z: n[1], speed: n[2], gamma: n[3] }
    }

    pub fn input(&self, k: usize) -> PlanarInput {
        let n = self.nodes[k];
        PlanarInput { thrust: n[4], pitch: n[3] + n[5] }
    }

    /// Node values at normalized time `tau`, linearly interpolated.
    fn at_fraction(&self, tau: f64) -> NodeValues {
        let n = self.nodes.len();
        let pos = tau.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (pos.floor() as usize).min(n - 2);
        let s = pos - k as f64;
        std::array::from_fn(|j| self.nodes[k][j] + s * (self.nodes[k + 1][j] - self.nodes[k][j]))
    }

    /// Minimum clearance from every inflated obstacle over all nodes.
    pub fn min_clearance(&self, obstacles: &[Obstacle]) -> f64 {
        let mut c = f64::INFINITY;
        for o in obstacles {
            for n in &self.nodes {
                c = c.min(o.clearance(n[0], n[1]));
            }
        }
        c
    }
}

/// Best iterate and diagnostics of a planner run that missed its tolerances.
#[derive(Debug, Clone)]
pub struct SolverFailure {
    pub reason: String,
    pub best: PlannerSolution,
}

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (defect {:.3e}, violation {:.3e}, kkt {:.3e}, {} outer / {} inner iterations)",
            self.reason,
            self.best.max_defect,
            self.best.violation,
            self.best.kkt,
            self.best.outer_iterations,
            self.best.inner_iterations
        )
    }
}

/// Cold-start guess: linear states, hover thrust, zero angle of attack.
pub fn initial_guess(mission: &MissionSpec, params: &VehicleParams, nodes: usize) -> (f64, Vec<NodeValues>) {
    let s0 = mission.initial;
    let pick = |fixed: Option<f64>, guess: Option<f64>, default: f64| fixed.or(guess).unwrap_or(default);
    let t = &mission.terminal;
    let g = &mission.terminal_guess;
    let end = [
        pick(t.x, g.x, s0.x),
        mission.terminal_altitude().unwrap_or(pick(None, g.z, s0.z)),
        pick(t.speed, g.speed, s0.speed),
        pick(t.gamma, g.gamma, s0.gamma),
    ];
    let start = [s0.x, s0.z, s0.speed, s0.gamma];
    let dist = ((end[0] - start[0]).powi(2) + (end[1] - start[1]).powi(2)).sqrt();
    let mean_speed = 0.5 * (start[2] + end[2]);
    let tf = mission.time_guess.unwrap_or(if dist > 1e-9 { dist / mean_speed } else { 0.05 });
    let thrust = params.weight().min(mission.max_thrust(params.max_thrust));
    let nodes = (0..nodes)
        .map(|k| {
            let s = k as f64 / (nodes - 1) as f64;
            let lerp = |j: usize| start[j] + s * (end[j] - start[j]);
            [lerp(0), lerp(1), lerp(2).max(MIN_INTERIOR_SPEED), lerp(3), thrust, 0.0]
        })
        .collect();
    (tf, nodes)
}

fn solution_from(tr: &Transcription, report: &solver::AlmReport) -> PlannerSolution {
    let y = &report.y;
    let n = tr.nodes();
    let tf = tr.final_time(y);
    PlannerSolution {
        time: (0..n).map(|k| tf * k as f64 / (n - 1) as f64).collect(),
        nodes: (0..n).map(|k| tr.node_values(y, k)).collect(),
        final_time: tf,
        max_defect: tr.physical_defects(y).amax(),
        violation: report.violation,
        kkt: report.kkt,
        outer_iterations: report.outer_iterations,
        inner_iterations: report.inner_iterations,
    }
}

/// Solves from a cold start.
pub fn solve_min_time(mission: &MissionSpec, params: &VehicleParams, opts: &SolverOptions) -> Result<PlannerSolution> {
    solve_min_time_from(mission, params, opts, None)
}

/// Solves from a previous solution, resampled onto `opts.nodes` nodes.
pub fn solve_min_time_from(
    mission: &MissionSpec,
    params: &VehicleParams,
    opts: &SolverOptions,
    warm: Option<&PlannerSolution>,
) -> Result<PlannerSolution> {
    let tr = Transcription::new(mission, opts.nodes, params, opts.smoothing)?;
    let alm = AlmOptions {
        tol_con: opts.tol_con,
        tol_kkt: opts.tol_kkt,
        max_outer: opts.max_outer,
        max_inner: opts.max_inner,
        ..Default::default()
    };
    let y0 = match warm {
        Some(w) => {
            let n = opts.nodes;
            let nodes: Vec<NodeValues> = (0..n).map(|k| w.at_fraction(k as f64 / (n - 1) as f64)).collect();
            tr.pack(w.final_time, &nodes)
        }
        None => {
            // A cold start first looks for any feasible trajectory; minimizing time
            // from the raw guess tends to collapse t_f onto an infeasible point.
            let (tf, nodes) = initial_guess(mission, params, opts.nodes);
            let feasibility = tr.clone().with_time_weight(0.0);
            let phase = AlmOptions { stop_when_feasible: true, tol_con: FEASIBILITY_TOL.max(alm.tol_con), ..alm };
            let y = solver::solve(&feasibility, &tr.pack(tf, &nodes), &phase).y;
            if opts.smoothing > 0.0 {
                // Smoothing from a rough point stalls; polish an unsmoothed solve instead.
                let rough = Transcription::new(mission, opts.nodes, params, 0.0)?;
                solver::solve(&rough, &y, &alm).y
            } else {
                y
            }
        }
    };
    let report = solver::solve(&tr, &y0, &alm);
    let sol = solution_from(&tr, &report);
    let reason = if !report.converged {
        Some("iteration limit reached before convergence")
    } else if sol.max_defect > opts.tol_defect {
        Some("collocation defect above tolerance")
    } else {
        None
    };
    match reason {
        Some(r) => Err(Error::SolverFailed(Box::new(SolverFailure {
            reason: r.to_string(),
            best: sol,
        }))),
        None => Ok(sol),
    }
}

/// Reference trajectory and aerodynamic feedforward for a solved plan.
pub fn extract_feedforward(sol: &PlannerSolution, params: &VehicleParams, fit: &AeroFit) -> Result<ReferenceTrajectory> {
    ReferenceTrajectory::from_planar(&sol.time, &sol.nodes, params, fit)
}

/// Largest defect when the planar model is integrated finely across each
/// interval with inputs interpolated linearly between nodes.
pub fn integrated_defect(sol: &PlannerSolution, params: &VehicleParams, substeps: usize) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..sol.nodes.len() - 1 {
        let (a, b) = (sol.nodes[k], sol.nodes[k + 1]);
        let h = (sol.time[k + 1] - sol.time[k]) / substeps as f64;
        let mut s = [a[0], a[1], a[2], a[3]];
        let input = |frac: f64| (a[4] + frac * (b[4] - a[4]), a[5] + frac * (b[5] - a[5]));
        let rhs = |s: [f64; 4], frac: f64| {
            let (t, al) = input(frac);
            planar_rhs(s[2], s[3], t, al, params, &params.aero_fit)
        };
        for i in 0..substeps {
            let f0 = i as f64 / substeps as f64;
            let fh = (i as f64 + 0.5) / substeps as f64;
            let f1 = (i as f64 + 1.0) / substeps as f64;
            let add = |s: [f64; 4], d: [f64; 4], c: f64| [s[0] + c * d[0], s[1] + c * d[1], s[2] + c * d[2], s[3] + c * d[3]];
            let k1 = rhs(s, f0);
            let k2 = rhs(add(s, k1, h / 2.0), fh);
            let k3 = rhs(add(s, k2, h / 2.0), fh);
            let k4 = rhs(add(s, k3, h), f1);
            for j in 0..4 {
                s[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        for j in 0..4 {
            worst = worst.max((s[j] - b[j]).abs());
        }
    }
    worst
}
