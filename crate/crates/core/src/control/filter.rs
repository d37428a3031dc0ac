use nalgebra::Vector3;

use super::inner::AttitudeReference;
use crate::vehicle::frames::wrap_angle;

/// Numerical differentiation of the attitude command with first-order
/// low-pass smoothing on both derivative stages.
#[derive(Debug, Clone)]
pub struct AttitudeReferenceFilter {
    dt: f64,
    blend: f64,
    last_input: Option<Vector3<f64>>,
    last_rate: Vector3<f64>,
    rate: Vector3<f64>,
    accel: Vector3<f64>,
}

impl AttitudeReferenceFilter {
    /// `cutoff` in rad/s, `dt` the sample period of the command stream.
    pub fn new(cutoff: f64, dt: f64) -> Self {
        AttitudeReferenceFilter {
            dt,
            blend: dt * cutoff / (1.0 + dt * cutoff),
            last_input: None,
            last_rate: Vector3::zeros(),
            rate: Vector3::zeros(),
            accel: Vector3::zeros(),
        }
    }

    pub fn update(&mut self, command: &Vector3<f64>) -> AttitudeReference {
        let prev = self.last_input.unwrap_or(*command);
        let raw_rate = (command - prev).map(wrap_angle) / self.dt;
        self.rate += (raw_rate - self.rate) * self.blend;
        let raw_accel = (self.rate - self.last_rate) / self.dt;
        self.accel += (raw_accel - self.accel) * self.blend;
        self.last_rate = self.rate;
        self.last_input = Some(*command);
        AttitudeReference {
            attitude: *command,
            rate: self.rate,
            accel: self.accel,
        }
    }
}
