//! Shared helpers: independent oracle implementations and config paths.
#![allow(dead_code)]

use nalgebra::{Matrix3, Rotation3, Vector2, Vector3};
use std::f64::consts::PI;
use std::path::PathBuf;

use tailsitter::planner::{PlanarInput, PlanarState};
use tailsitter::vehicle::{RigidBodyState, VehicleParams};

pub fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Largest component-wise error relative to `max(|want|, 1)`.
pub fn relative_residual(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs() / w.abs().max(1.0)).fold(0.0, f64::max)
}

/// Plant derivative built from rotation matrices and per-rotor sums.
pub fn plant_oracle(s: &RigidBodyState, w: [f64; 4], p: &VehicleParams) -> [f64; 12] {
    let [phi, theta, psi] = [s.attitude[0], s.attitude[1], s.attitude[2]];
    let r_bi = Rotation3::from_euler_angles(phi, theta, psi).into_inner();

    let kt = p.air_density * PI * p.rotor_radius.powi(4) * p.thrust_coefficient;
    let kq = p.air_density * PI * p.rotor_radius.powi(5) * p.torque_coefficient;
    let f: Vec<f64> = w.iter().map(|x| kt * x * x).collect();
    let q: Vec<f64> = w.iter().map(|x| kq * x * x).collect();
    let thrust: f64 = f.iter().sum();
    // Rotors 3 and 4 sit on the +y side of the longitudinal arm; 2 and 3 on the +x side of the lateral arm.
    let m_ctrl = Vector3::new(
        p.arm_longitudinal * (f[2] + f[3] - f[0] - f[1]),
        q[0] - q[1] + q[2] - q[3],
        p.arm_lateral * (f[1] + f[2] - f[0] - f[3]),
    );

    // Aerodynamics in wind axes, rotated into the body by the effective angle of attack.
    let vb = s.velocity;
    let speed = vb.norm();
    let wake = 1.2 * (thrust / (2.0 * p.air_density * PI * p.rotor_radius * p.rotor_radius)).sqrt();
    let alpha_e = if vb[2] == 0.0 && vb[1] + wake == 0.0 { 0.0 } else { vb[2].atan2(vb[1] + wake) };
    let alpha = if speed > 0.0 { vb[2].atan2(vb[1]) } else { 0.0 };
    let [a0, a1, a2, a3, a4] = p.aero_fit.lift;
    let [b0, b1] = p.aero_fit.drag;
    let cl = (a4 * alpha_e + a3) * (-a2 * alpha_e * alpha_e).exp() + a1 * (2.0 * alpha_e).sin() + a0;
    let cd_raw = |a: f64| b1 * (2.0 * a).cos() + b0;
    let blend = speed * speed / (speed * speed + 0.25);
    let cd = cd_raw(0.0) * (1.0 - blend) + cd_raw(alpha) * blend;
    let qbar = 0.5 * p.air_density * (speed + wake).powi(2);
    let (lift, drag) = (qbar * p.wing_area * cl, qbar * p.fuselage_area * cd);
    let f_a = Rotation3::from_axis_angle(&Vector3::x_axis(), alpha_e) * Vector3::new(0.0, -drag, -lift);
    let m_a = Vector3::from(p.r_ac).cross(&f_a);

    let omega = s.rates;
    let inertia = Matrix3::from_diagonal(&Vector3::new(p.ixx, p.iyy, p.izz));
    let force = Vector3::new(0.0, thrust, 0.0) + f_a + r_bi.transpose() * Vector3::new(0.0, 0.0, p.mass * p.gravity);
    let vdot = force / p.mass - omega.cross(&vb);
    let wdot = inertia.try_inverse().unwrap() * (m_ctrl + m_a - omega.cross(&(inertia * omega)));

    // Body rates from Euler rates, column by column, then inverted numerically.
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), phi).into_inner();
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), theta).into_inner();
    let l = Matrix3::from_columns(&[
        Vector3::x(),
        rx.transpose() * Vector3::y(),
        rx.transpose() * ry.transpose() * Vector3::z(),
    ]);
    let euler_dot = l.lu().solve(&omega).unwrap();
    let pdot = r_bi * vb;

    let mut out = [0.0; 12];
    for (i, v) in [pdot, euler_dot, vdot, wdot].iter().enumerate() {
        out[3 * i..3 * i + 3].copy_from_slice(v.as_slice());
    }
    out
}

/// Planar point-mass derivative assembled as a force vector in the (downrange, up) plane.
pub fn planar_oracle(s: &PlanarState, u: &PlanarInput, p: &VehicleParams) -> [f64; 4] {
    let dir = |a: f64| Vector2::new(a.cos(), a.sin());
    let perp = |v: Vector2<f64>| Vector2::new(-v[1], v[0]);
    let e_v = dir(s.gamma);
    let e_b = dir(u.pitch);
    let alpha = u.pitch - s.gamma;
    let wake = 1.2 * (u.thrust / (8.0 * p.air_density * PI * p.rotor_radius.powi(2))).sqrt();
    let air = s.speed * e_v + wake * e_b;
    let va = air.norm();
    let e_a = air / va;
    let alpha_e = (u.pitch - e_a[1].atan2(e_a[0]) + PI).rem_euclid(2.0 * PI) - PI;
    let [a0, a1, a2, a3, a4] = p.aero_fit.lift;
    let [b0, b1] = p.aero_fit.drag;
    let cl = (a4 * alpha_e + a3) * (-a2 * alpha_e * alpha_e).exp() + a1 * (2.0 * alpha_e).sin() + a0;
    let cd = b1 * (2.0 * alpha).cos() + b0;
    let lift = 0.5 * p.air_density * va * va * p.wing_area * cl;
    let drag = 0.5 * p.air_density * s.speed * s.speed * p.fuselage_area * cd;
    let force = u.thrust * e_b + lift * perp(e_a) - drag * e_a - Vector2::new(0.0, p.mass * p.gravity);
    let acc = force / p.mass;
    [s.speed * e_v[0], s.speed * e_v[1], acc.dot(&e_v), acc.dot(&perp(e_v)) / s.speed]
}
