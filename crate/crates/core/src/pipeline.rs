//! Plan, build the reference, fly: the steps shared by the CLI, the C API
//! and the acceptance suite.

use crate::config::{ControllerFile, MissionFile};
use crate::planner::{extract_feedforward, solve_min_time, PlannerSolution, ReferenceTrajectory};
use crate::sim::{run_mission, FeedforwardMode, SimConfig, SimLog};
use crate::vehicle::{RigidBodyState, VehicleParams};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannedMission {
    pub solution: PlannerSolution,
    /// Planned maneuver followed by the steady tail.
    pub reference: ReferenceTrajectory,
    /// Simulated time covering the maneuver and the tail, s.
    pub flight_duration: f64,
}

impl PlannedMission {
    pub fn final_time(&self) -> f64 {
        self.solution.final_time
    }
}

/// Largest whole number of `1/rate` periods not exceeding `span`.
pub fn whole_periods(span: f64, rate: f64) -> f64 {
    ((span * rate) + 1e-9).floor() / rate
}

/// Solves the mission and appends the steady tail from its flight settings.
///
/// `nodes` overrides the node count in the file.
pub fn plan_mission(file: &MissionFile, params: &VehicleParams, nodes: Option<usize>) -> Result<PlannedMission> {
    let mut opts = file.solver;
    if let Some(n) = nodes {
        opts.nodes = n;
    }
    let solution = solve_min_time(&file.mission, params, &opts)?;
    let spacing = file.flight.spacing;
    let planned = extract_feedforward(&solution, params, &params.aero_fit)?;
    let end = solution.final_time + file.flight.tail;
    let reference = planned.with_steady_tail(end + spacing, spacing, params)?;
    let flight_duration = whole_periods(end, SimConfig::default().rates.outer_hz);
    Ok(PlannedMission { solution, reference, flight_duration })
}

/// Flies `reference` for `duration` seconds under the controller file's gains
/// and rates.
pub fn fly(
    reference: &ReferenceTrajectory,
    duration: f64,
    controller: &ControllerFile,
    mode: FeedforwardMode,
    params: &VehicleParams,
    initial_state: Option<RigidBodyState>,
) -> Result<SimLog> {
    let gains = controller.gains.resolve()?;
    let cfg = SimConfig {
        duration,
        feedforward: mode,
        initial_state: initial_state.map(Into::into),
        ..controller.sim_config()
    };
    run_mission(reference, &cfg, &gains, params)
}

/// Time a stored reference can be flown for at `rate`.
pub fn flyable_duration(reference: &ReferenceTrajectory, rate: f64) -> f64 {
    whole_periods(reference.duration(), rate)
}
