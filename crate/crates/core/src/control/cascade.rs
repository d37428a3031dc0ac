use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{AttitudeReference, AttitudeReferenceFilter, Allocator, Gains, OuterLoop, OuterLoopCommand, ReferenceSample, RotorCommand};
use crate::vehicle::{RigidBodyState, VehicleParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlRates {
    pub outer_hz: f64,
    pub inner_hz: f64,
    /// Attitude reference filter cutoff, rad/s.
    pub filter_cutoff: f64,
}

impl Default for ControlRates {
    fn default() -> Self {
        ControlRates {
            outer_hz: 100.0,
            inner_hz: 500.0,
            filter_cutoff: 20.0,
        }
    }
}

impl ControlRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("outer_hz", self.outer_hz), ("inner_hz", self.inner_hz), ("filter_cutoff", self.filter_cutoff)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        if self.inner_hz < self.outer_hz {
            return Err(Error::InvalidParameter("inner loop must run at least as fast as the outer loop".into()));
        }
        Ok(())
    }
}

/// Position loop, attitude reference filter, attitude loop and mixer for one vehicle.
///
/// The caller owns the clock: call [`outer_update`](Self::outer_update) at
/// the outer rate and [`inner_update`](Self::inner_update) at the inner rate.
#[derive(Debug, Clone)]
pub struct CascadeController {
    gains: Gains,
    params: VehicleParams,
    allocator: Allocator,
    outer: OuterLoop,
    filter: AttitudeReferenceFilter,
    command: OuterLoopCommand,
    reference: AttitudeReference,
    moment: Vector3<f64>,
    rotors: RotorCommand,
}

impl CascadeController {
    pub fn new(gains: Gains, params: &VehicleParams, rates: &ControlRates, initial_attitude: Vector3<f64>) -> Result<Self> {
        gains.validate()?;
        rates.validate()?;
        Ok(CascadeController {
            gains,
            params: params.clone(),
            allocator: Allocator::new(params)?,
            outer: OuterLoop::new(initial_attitude),
            filter: AttitudeReferenceFilter::new(rates.filter_cutoff, 1.0 / rates.outer_hz),
            command: OuterLoopCommand {
                attitude: initial_attitude,
                ..Default::default()
            },
            reference: AttitudeReference {
                attitude: initial_attitude,
                ..Default::default()
            },
            moment: Vector3::zeros(),
            rotors: RotorCommand::default(),
        })
    }

    pub fn outer_update(&mut self, state: &RigidBodyState, sample: &ReferenceSample) -> OuterLoopCommand {
        let cmd = self
            .outer
            .update(&state.position, &state.inertial_velocity(), sample, &self.gains, &self.params);
        self.reference = self.filter.update(&cmd.attitude);
        self.command = cmd;
        cmd
    }

    pub fn inner_update(&mut self, state: &RigidBodyState) -> Result<RotorCommand> {
        self.moment = super::attitude_inner_loop(&state.attitude, &state.rates, &self.reference, &self.gains, &self.params)?;
        self.rotors = self.allocator.allocate(self.command.thrust, &self.moment)?;
        Ok(self.rotors)
    }

    pub fn command(&self) -> &OuterLoopCommand {
        &self.command
    }

    pub fn attitude_reference(&self) -> &AttitudeReference {
        &self.reference
    }

    pub fn moment(&self) -> Vector3<f64> {
        self.moment
    }

    pub fn rotors(&self) -> &RotorCommand {
        &self.rotors
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hover_holds_symmetric_rotors() {
        let p = VehicleParams::default();
        let att = Vector3::new(-FRAC_PI_2, 0.0, 0.0);
        let mut c = CascadeController::new(Gains::from_natural(3.0, 0.7071).unwrap(), &p, &ControlRates::default(), att).unwrap();
        let s = RigidBodyState { attitude: att, ..Default::default() };
        c.outer_update(&s, &ReferenceSample::default());
        let r = c.inner_update(&s).unwrap();
        let w0 = r.speeds[0];
        assert!(r.speeds.iter().all(|w| (w - w0).abs() < 1e-9));
        assert!((4.0 * p.k_thrust() * w0 * w0 - p.weight()).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted_rates() {
        let r = ControlRates { outer_hz: 500.0, inner_hz: 100.0, filter_cutoff: 20.0 };
        assert!(r.validate().is_err());
    }
}
