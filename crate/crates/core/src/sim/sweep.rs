use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{reference_start_state, run_mission, SimConfig, SimLog};
use crate::control::Gains;
use crate::planner::ReferenceTrajectory;
use crate::vehicle::{RigidBodyState, VehicleParams};
use crate::{Error, Result};

/// A reference to fly in a sweep, with how long to fly it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMission {
    pub name: String,
    pub trajectory: ReferenceTrajectory,
    pub duration: f64,
}

/// Inertial offset added to the start state of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Perturbation {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

impl Perturbation {
    pub fn apply(&self, state: &RigidBodyState) -> RigidBodyState {
        let mut s = RigidBodyState::from_inertial(
            state.position + Vector3::from(self.position),
            state.attitude,
            state.inertial_velocity() + Vector3::from(self.velocity),
        );
        s.rates = state.rates;
        s
    }
}

/// `n` offsets drawn uniformly from the boxes `[-p, p]^3` and `[-v, v]^3`,
/// restricted to the x = 0 plane when `planar` is set.
pub fn random_perturbations(n: usize, seed: u64, position_scale: f64, velocity_scale: f64, planar: bool) -> Vec<Perturbation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| -> [f64; 3] {
        let mut v = [0.0; 3];
        for (i, c) in v.iter_mut().enumerate() {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            *c = if planar && i == 0 { 0.0 } else { scale * u };
        }
        v
    };
    (0..n)
        .map(|_| {
            let position = draw(position_scale);
            let velocity = draw(velocity_scale);
            Perturbation { position, velocity }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub id: usize,
    pub mission: String,
    pub gains_index: usize,
    pub perturbation_index: usize,
    /// Full log, or the partial log of a diverged run.
    pub log: Option<SimLog>,
    pub failure: Option<String>,
}

/// One pooled point of the uncertainty scatter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSample {
    pub run: usize,
    pub time: f64,
    /// `|P_e'|`, m/s.
    pub velocity_error: f64,
    /// `|dF_A|`, N.
    pub load_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    /// Ordered by run id.
    pub runs: Vec<RunOutcome>,
}

impl SweepResult {
    /// Samples from every run that finished, in run order.
    pub fn samples(&self) -> Vec<ErrorSample> {
        self.runs
            .iter()
            .filter(|r| r.failure.is_none())
            .filter_map(|r| r.log.as_ref().map(|log| (r.id, log)))
            .flat_map(|(id, log)| {
                (0..log.len()).map(move |k| ErrorSample {
                    run: id,
                    time: log.time[k],
                    velocity_error: log.velocity_error[k].norm(),
                    load_error: log.load_error[k],
                })
            })
            .collect()
    }

    pub fn failure_count(&self) -> usize {
        self.runs.iter().filter(|r| r.failure.is_some()).count()
    }
}

fn run_one(
    mission: &SweepMission,
    gains: &Gains,
    perturbation: &Perturbation,
    cfg: &SimConfig,
    params: &VehicleParams,
) -> Result<SimLog> {
    let start = perturbation.apply(&reference_start_state(&mission.trajectory, params)?);
    let cfg = SimConfig {
        duration: mission.duration,
        initial_state: Some(start.into()),
        ..cfg.clone()
    };
    run_mission(&mission.trajectory, &cfg, gains, params)
}

/// Every mission flown with every gain set from every perturbed start.
///
/// Run ids enumerate missions, then gains, then perturbations. Failed runs
/// are recorded and do not stop the sweep.
pub fn monte_carlo_sweep(
    missions: &[SweepMission],
    gains: &[Gains],
    perturbations: &[Perturbation],
    cfg: &SimConfig,
    params: &VehicleParams,
) -> Result<SweepResult> {
    if missions.is_empty() || gains.is_empty() || perturbations.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one mission, gain set and perturbation".into()));
    }
    let (ng, np) = (gains.len(), perturbations.len());
    let total = missions.len() * ng * np;
    let runs = (0..total)
        .into_par_iter()
        .map(|id| {
            let (m, g, p) = (id / (ng * np), (id / np) % ng, id % np);
            let mission = &missions[m];
            let (log, failure) = match run_one(mission, &gains[g], &perturbations[p], cfg, params) {
                Ok(log) => (Some(log), None),
                Err(Error::Diverged { log, .. }) => {
                    let msg = format!("diverged at t = {:.3} s", log.time.last().copied().unwrap_or(0.0));
                    (Some(*log), Some(msg))
                }
                Err(e) => (None, Some(e.to_string())),
            };
            RunOutcome {
                id,
                mission: mission.name.clone(),
                gains_index: g,
                perturbation_index: p,
                log,
                failure,
            }
        })
        .collect();
    Ok(SweepResult { runs })
}
