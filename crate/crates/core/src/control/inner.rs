use nalgebra::Vector3;

use super::Gains;
use crate::vehicle::frames::{euler_rate_matrix, euler_rate_matrix_dot, euler_rates, wrap_angle};
use crate::vehicle::VehicleParams;
use crate::Result;

/// Desired attitude with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AttitudeReference {
    pub attitude: Vector3<f64>,
    pub rate: Vector3<f64>,
    pub accel: Vector3<f64>,
}

/// Feedback-linearizing attitude law. Returns the body moment command.
pub fn attitude_inner_loop(
    attitude: &Vector3<f64>,
    omega_b: &Vector3<f64>,
    reference: &AttitudeReference,
    gains: &Gains,
    params: &VehicleParams,
) -> Result<Vector3<f64>> {
    let euler_dot = euler_rates(attitude, omega_b)?;
    let err = (reference.attitude - attitude).map(wrap_angle);
    let kp = Vector3::from(gains.kappa_p);
    let kd = Vector3::from(gains.kappa_d);
    let euler_accel = reference.accel + kd.component_mul(&(reference.rate - euler_dot)) + kp.component_mul(&err);
    let omega_dot = euler_rate_matrix(attitude) * euler_accel + euler_rate_matrix_dot(attitude, &euler_dot) * euler_dot;
    let j = params.inertia();
    Ok(j * omega_dot + omega_b.cross(&(j * omega_b)))
}
