//! Frame conventions.
//!
//! Inertial frame: z points down (gravity is `+g` along z), y is the
//! downrange direction the vehicle transitions along, x completes a
//! right-handed triad. Body frame: y along the nose (thrust axis), z out of
//! the belly, x along the left wing.
//!
//! Attitude is a 3-2-1 Euler sequence `[phi, theta, psi]`: yaw `psi` about
//! inertial z, then `theta` about the intermediate y, then `phi` about body
//! x. Because the nose is body y, `phi` is the pitch angle and `theta` the
//! roll angle, so the 90 degree pitch-up of a tailsitter never approaches
//! the `theta = +-pi/2` singularity. Nose-up pitch is negative `phi`; hover
//! (nose straight up) is `phi = -pi/2`.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;

/// Cosine of the roll angle below which the Euler-rate map is treated as singular.
pub const GIMBAL_TOLERANCE: f64 = 1e-6;

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Rotation taking body-frame vectors to the inertial frame.
pub fn body_to_inertial(attitude: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    let (spsi, cpsi) = attitude[2].sin_cos();
    let rz = Matrix3::new(cpsi, -spsi, 0.0, spsi, cpsi, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cth, 0.0, sth, 0.0, 1.0, 0.0, -sth, 0.0, cth);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cphi, -sphi, 0.0, sphi, cphi);
    rz * ry * rx
}

/// Rotation taking inertial-frame vectors to the body frame.
pub fn inertial_to_body(attitude: &Vector3<f64>) -> Matrix3<f64> {
    body_to_inertial(attitude).transpose()
}

/// Map from Euler-angle rates to body rates, `omega_b = L * psi_dot`.
pub fn euler_rate_matrix(attitude: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    Matrix3::new(
        1.0, 0.0, -sth, //
        0.0, cphi, sphi * cth, //
        0.0, -sphi, cphi * cth,
    )
}

/// Time derivative of [`euler_rate_matrix`] along the given Euler rates.
pub fn euler_rate_matrix_dot(attitude: &Vector3<f64>, rates: &Vector3<f64>) -> Matrix3<f64> {
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    let (dphi, dth) = (rates[0], rates[1]);
    Matrix3::new(
        0.0,
        0.0,
        -cth * dth,
        0.0,
        -sphi * dphi,
        cphi * cth * dphi - sphi * sth * dth,
        0.0,
        -cphi * dphi,
        -sphi * cth * dphi - cphi * sth * dth,
    )
}

/// Euler-angle rates from body rates. Fails at the roll singularity.
pub fn euler_rates(attitude: &Vector3<f64>, omega_b: &Vector3<f64>) -> crate::Result<Vector3<f64>> {
    check_gimbal(attitude)?;
    let (sphi, cphi) = attitude[0].sin_cos();
    let (sth, cth) = attitude[1].sin_cos();
    let (p, q, r) = (omega_b[0], omega_b[1], omega_b[2]);
    let psi_dot = (q * sphi + r * cphi) / cth;
    let theta_dot = q * cphi - r * sphi;
    let phi_dot = p + psi_dot * sth;
    Ok(Vector3::new(phi_dot, theta_dot, psi_dot))
}

pub fn check_gimbal(attitude: &Vector3<f64>) -> crate::Result<()> {
    if attitude[1].cos().abs() < GIMBAL_TOLERANCE {
        return Err(crate::Error::GimbalLock(attitude[1]));
    }
    Ok(())
}
