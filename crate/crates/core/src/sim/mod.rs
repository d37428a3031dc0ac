//! Fixed-step closed-loop simulation of the plant under the cascade controller.

mod integrator;
mod log;
mod sweep;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use integrator::{rk4, step_rk4};
pub use log::{ErrorSummary, SimLog, LOG_HEADER};
pub use sweep::{
    monte_carlo_sweep, random_perturbations, ErrorSample, Perturbation, RunOutcome, SweepMission, SweepResult,
};

use crate::control::{CascadeController, ControlRates, Gains, OuterLoop, OuterLoopCommand, RotorCommand};
use crate::planner::ReferenceTrajectory;
use crate::vehicle::{aero_forces_moments, rotor_wrench, AeroFit, Environment, RigidBodyState, VehicleParams};
use crate::{Error, Result};
use log::LogRow;

/// Source of the aerodynamic load handed to the position loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeedforwardMode {
    /// Pure feedback, no load compensation.
    None,
    /// Load predicted with the planner's fit.
    #[default]
    Optimal,
    /// Load predicted with [`AeroFit::DEGRADED`].
    Perturbed,
}

impl FeedforwardMode {
    pub const ALL: [FeedforwardMode; 3] = [FeedforwardMode::None, FeedforwardMode::Optimal, FeedforwardMode::Perturbed];

    /// The reference with this mode's load.
    pub fn apply(self, traj: &ReferenceTrajectory, params: &VehicleParams) -> ReferenceTrajectory {
        match self {
            FeedforwardMode::None => traj.without_load(),
            FeedforwardMode::Optimal => traj.clone(),
            FeedforwardMode::Perturbed => traj.with_fit(params, &AeroFit::DEGRADED),
        }
    }
}

impl fmt::Display for FeedforwardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedforwardMode::None => "none",
            FeedforwardMode::Optimal => "optimal",
            FeedforwardMode::Perturbed => "perturbed",
        })
    }
}

impl FromStr for FeedforwardMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FeedforwardMode::None),
            "optimal" => Ok(FeedforwardMode::Optimal),
            "perturbed" => Ok(FeedforwardMode::Perturbed),
            other => Err(Error::InvalidParameter(format!(
                "unknown feedforward mode '{other}' (expected none, optimal or perturbed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Plant integration step, s.
    pub dt_plant: f64,
    pub rates: ControlRates,
    /// Simulated time, s.
    pub duration: f64,
    /// Start state; `None` starts on the reference.
    pub initial_state: Option<InitialState>,
    pub feedforward: FeedforwardMode,
    pub environment: Environment,
    pub seed: u64,
    /// Abort when `|P_e|` exceeds this, m.
    pub divergence_limit: f64,
}

/// Serializable form of a [`RigidBodyState`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub position: [f64; 3],
    pub attitude: [f64; 3],
    /// Body frame.
    pub velocity: [f64; 3],
    pub rates: [f64; 3],
}

impl From<InitialState> for RigidBodyState {
    fn from(s: InitialState) -> Self {
        RigidBodyState {
            position: s.position.into(),
            attitude: s.attitude.into(),
            velocity: s.velocity.into(),
            rates: s.rates.into(),
        }
    }
}

impl From<RigidBodyState> for InitialState {
    fn from(s: RigidBodyState) -> Self {
        InitialState {
            position: s.position.into(),
            attitude: s.attitude.into(),
            velocity: s.velocity.into(),
            rates: s.rates.into(),
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_plant: 1e-3,
            rates: ControlRates::default(),
            duration: 10.0,
            initial_state: None,
            feedforward: FeedforwardMode::Optimal,
            environment: Environment::default(),
            seed: 0,
            divergence_limit: 100.0,
        }
    }
}

/// Plant steps per controller period, or an error if the period is not a
/// whole number of steps.
fn steps_per(dt: f64, hz: f64, name: &str) -> Result<usize> {
    let ratio = 1.0 / (hz * dt);
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio {
        return Err(Error::InvalidParameter(format!(
            "plant step {dt} s does not divide the {name} period {} s",
            1.0 / hz
        )));
    }
    Ok(n as usize)
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_plant > 0.0 && self.dt_plant.is_finite()) {
            return Err(Error::InvalidParameter("dt_plant must be > 0".into()));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidParameter("duration must be > 0".into()));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::InvalidParameter("divergence_limit must be > 0".into()));
        }
        self.rates.validate()?;
        self.environment.validate()?;
        steps_per(self.dt_plant, self.rates.outer_hz, "outer-loop")?;
        steps_per(self.dt_plant, self.rates.inner_hz, "inner-loop")?;
        Ok(())
    }

    /// Number of logged samples, one per outer-loop period.
    pub fn sample_count(&self) -> usize {
        (self.duration * self.rates.outer_hz).round() as usize
    }
}

/// State on the reference at its start time, attitude from the position-loop
/// inversion at zero error, body rates zero.
pub fn reference_start_state(traj: &ReferenceTrajectory, params: &VehicleParams) -> Result<RigidBodyState> {
    let t0 = traj.start_time();
    let r = traj.sample(t0)?;
    let fallback = Vector3::new(-traj.pitch_at(t0)?, 0.0, 0.0);
    // Gains do not matter at zero error.
    let gains = Gains::from_natural(1.0, 1.0)?;
    let cmd = OuterLoop::new(fallback).update(&r.position, &r.velocity, &r, &gains, params);
    Ok(RigidBodyState::from_inertial(r.position, cmd.attitude, r.velocity))
}

/// One plant step as seen by an observer of [`simulate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantStep {
    pub time: f64,
    pub state: RigidBodyState,
    pub command: OuterLoopCommand,
    pub rotors: RotorCommand,
}

/// Runs the closed loop and reports the held commands at every plant step.
pub fn simulate<F: FnMut(&PlantStep)>(
    traj: &ReferenceTrajectory,
    cfg: &SimConfig,
    gains: &Gains,
    params: &VehicleParams,
    mut observer: F,
) -> Result<SimLog> {
    cfg.validate()?;
    params.validate()?;
    let t0 = traj.start_time();
    if traj.is_empty() || traj.end_time() < t0 + cfg.duration - 1e-9 {
        return Err(Error::TrajectoryCoverage(t0 + cfg.duration));
    }
    let reference = cfg.feedforward.apply(traj, params);
    let mut state = match cfg.initial_state {
        Some(s) => s.into(),
        None => reference_start_state(traj, params)?,
    };
    let outer_every = steps_per(cfg.dt_plant, cfg.rates.outer_hz, "outer-loop")?;
    let inner_every = steps_per(cfg.dt_plant, cfg.rates.inner_hz, "inner-loop")?;
    let mut ctrl = CascadeController::new(*gains, params, &cfg.rates, state.attitude)?;
    let samples = cfg.sample_count();
    let total = samples * outer_every;
    let mut log = SimLog::default();
    let diverged = |time: f64, error: f64, log: SimLog| Error::Diverged { time, error, log: Box::new(log) };

    for step in 0..total {
        let time = t0 + step as f64 * cfg.dt_plant;
        if step % outer_every == 0 {
            let sample = reference.sample(time)?;
            let cmd = ctrl.outer_update(&state, &sample);
            let rotors = match ctrl.inner_update(&state) {
                Ok(r) => r,
                Err(_) => return Err(diverged(time, (sample.position - state.position).norm(), log)),
            };
            let (thrust, _) = rotor_wrench(&rotors, params);
            let aero = match aero_forces_moments(&state, thrust, &cfg.environment, params) {
                Ok(a) => a,
                Err(_) => return Err(diverged(time, (sample.position - state.position).norm(), log)),
            };
            let pe = sample.position - state.position;
            log.push(LogRow {
                time,
                state,
                command: cmd,
                rotors,
                aero_load: aero.inertial_load(&state.attitude),
                feedforward: sample.aero_load,
                reference: sample.position,
                position_error: pe,
                velocity_error: sample.velocity - state.inertial_velocity(),
            });
            if pe.norm() > cfg.divergence_limit {
                return Err(diverged(time, pe.norm(), log));
            }
        } else if step % inner_every == 0 && ctrl.inner_update(&state).is_err() {
            let e = log.position_error.last().map_or(0.0, |e| e.norm());
            return Err(diverged(time, e, log));
        }
        observer(&PlantStep { time, state, command: *ctrl.command(), rotors: *ctrl.rotors() });
        state = match step_rk4(&state, ctrl.rotors(), cfg.dt_plant, &cfg.environment, params) {
            Ok(s) if s.is_finite() => s,
            _ => {
                let e = log.position_error.last().map_or(f64::NAN, |e| e.norm());
                return Err(diverged(time + cfg.dt_plant, e, log));
            }
        };
    }
    Ok(log)
}

/// Closed-loop run of `traj` for `cfg.duration` seconds.
pub fn run_mission(traj: &ReferenceTrajectory, cfg: &SimConfig, gains: &Gains, params: &VehicleParams) -> Result<SimLog> {
    simulate(traj, cfg, gains, params, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::hover_trim;

    fn hover_setup(duration: f64) -> (ReferenceTrajectory, SimConfig, VehicleParams) {
        let p = VehicleParams::default();
        let trim = hover_trim(Vector3::new(0.0, 0.0, -10.0), &p).unwrap();
        let load = trim.aero.inertial_load(&trim.state.attitude);
        let traj = ReferenceTrajectory::hover(trim.state.position, load, duration);
        let cfg = SimConfig {
            duration,
            initial_state: Some(trim.state.into()),
            ..Default::default()
        };
        (traj, cfg, p)
    }

    fn gains() -> Gains {
        Gains::from_natural(3.0, 0.7071).unwrap()
    }

    #[test]
    fn hover_is_held() {
        let (traj, cfg, p) = hover_setup(10.0);
        let log = run_mission(&traj, &cfg, &gains(), &p).unwrap();
        assert_eq!(log.len(), 1000);
        assert!(log.max_position_error() < 1e-3, "{}", log.max_position_error());
    }

    #[test]
    fn runs_are_deterministic() {
        let (traj, mut cfg, p) = hover_setup(2.0);
        cfg.initial_state = cfg.initial_state.map(|mut s| {
            s.position[2] += 0.5;
            s
        });
        let a = run_mission(&traj, &cfg, &gains(), &p).unwrap();
        let b = run_mission(&traj, &cfg, &gains(), &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn commands_are_zero_order_held() {
        let (traj, mut cfg, p) = hover_setup(1.0);
        cfg.initial_state = cfg.initial_state.map(|mut s| {
            s.position = [0.3, -0.2, -9.5];
            s
        });
        let mut steps = Vec::new();
        simulate(&traj, &cfg, &gains(), &p, |s| steps.push(*s)).unwrap();
        let mut rotor_changes = 0;
        for k in 1..steps.len() {
            if steps[k].command != steps[k - 1].command {
                assert_eq!(k % 10, 0, "outer command changed at step {k}");
            }
            if steps[k].rotors != steps[k - 1].rotors {
                assert_eq!(k % 2, 0, "rotor command changed at step {k}");
                rotor_changes += 1;
            }
        }
        assert!(rotor_changes > 100);
    }

    #[test]
    fn load_error_matches_components() {
        let (traj, mut cfg, p) = hover_setup(1.0);
        cfg.initial_state = cfg.initial_state.map(|mut s| {
            s.velocity = [0.0, 1.0, 0.4];
            s
        });
        let log = run_mission(&traj, &cfg, &gains(), &p).unwrap();
        for k in 0..log.len() {
            let d = log.feedforward[k] - log.aero_load[k];
            assert!((log.load_error[k] - d.norm()).abs() < 1e-12);
        }
        assert!(log.load_error.iter().any(|e| *e > 1e-3));
    }

    #[test]
    fn divergence_keeps_partial_log() {
        let (traj, mut cfg, p) = hover_setup(5.0);
        cfg.divergence_limit = 0.2;
        cfg.initial_state = cfg.initial_state.map(|mut s| {
            s.position[2] += 1.0;
            s
        });
        match run_mission(&traj, &cfg, &gains(), &p) {
            Err(Error::Diverged { time, error, log }) => {
                assert_eq!(time, 0.0);
                assert!(error > 0.2);
                assert_eq!(log.len(), 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn rejects_indivisible_rates() {
        let cfg = SimConfig { dt_plant: 3e-3, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig { duration: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn short_trajectory_rejected() {
        let (traj, mut cfg, p) = hover_setup(1.0);
        cfg.duration = 2.0;
        assert!(matches!(run_mission(&traj, &cfg, &gains(), &p), Err(Error::TrajectoryCoverage(_))));
    }

    #[test]
    fn mode_strings() {
        for m in FeedforwardMode::ALL {
            assert_eq!(m.to_string().parse::<FeedforwardMode>().unwrap(), m);
        }
        assert!("optimum".parse::<FeedforwardMode>().is_err());
    }

    #[test]
    fn start_state_sits_on_reference() {
        let (traj, _, p) = hover_setup(1.0);
        let s = reference_start_state(&traj, &p).unwrap();
        assert_eq!(s.position, traj.position[0]);
        assert!(s.inertial_velocity().norm() < 1e-12);
    }
}
