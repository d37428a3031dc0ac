//! Wake-coupled wing and fuselage aerodynamics of the 6DOF plant.

use nalgebra::Vector3;
use std::f64::consts::PI;

use super::frames;
use super::{AeroFit, Environment, RigidBodyState, VehicleParams};
use crate::{Error, Result};

/// Below this airspeed the fuselage drag coefficient blends toward its
/// axial-flow value, because the angle of the inertial velocity is
/// meaningless at rest while the rotor wake still loads the airframe.
pub const LOW_SPEED_BLEND: f64 = 0.5;

/// Empirical scale on the momentum-theory induced velocity.
pub const WAKE_FACTOR: f64 = 1.2;

pub fn lift_coefficient(alpha_e: f64, fit: &AeroFit) -> f64 {
    let [a0, a1, a2, a3, a4] = fit.lift;
    (a4 * alpha_e + a3) * (-a2 * alpha_e * alpha_e).exp() + a1 * (2.0 * alpha_e).sin() + a0
}

pub fn drag_coefficient(alpha: f64, fit: &AeroFit) -> f64 {
    let [b0, b1] = fit.drag;
    b1 * (2.0 * alpha).cos() + b0
}

/// Fully developed wake speed behind the rotor disk for total thrust `thrust`.
pub fn rotor_wake(thrust: f64, params: &VehicleParams) -> Result<f64> {
    if thrust < 0.0 || !thrust.is_finite() {
        return Err(Error::NegativeThrust(thrust));
    }
    let disk = 2.0 * params.air_density * PI * params.rotor_radius.powi(2);
    Ok(WAKE_FACTOR * (thrust / disk).sqrt())
}

/// Angle of the wake-augmented flow over the wing, quadrant safe.
///
/// Zero when there is no flow at all.
pub fn effective_aoa(w: f64, v: f64, wake: f64) -> f64 {
    let axial = v + wake;
    if w == 0.0 && axial == 0.0 {
        0.0
    } else {
        w.atan2(axial)
    }
}

/// Aerodynamic state of the airframe at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroState {
    pub airspeed: f64,
    pub wake_speed: f64,
    pub alpha: f64,
    pub alpha_e: f64,
    pub lift: f64,
    pub drag: f64,
    pub side: f64,
    /// Body frame, N.
    pub force: Vector3<f64>,
    /// Body frame, N m.
    pub moment: Vector3<f64>,
}

impl AeroState {
    /// The aerodynamic force resolved in the inertial frame with the sign used
    /// by the position inversion (`T - F_A + m g e3 = m P''`), i.e. the
    /// negated inertial force: a lift that holds the vehicle up is `+z`.
    pub fn inertial_load(&self, attitude: &Vector3<f64>) -> Vector3<f64> {
        -(frames::body_to_inertial(attitude) * self.force)
    }
}

/// Lift, drag, side force and the resulting body-frame force and moment.
///
/// Lift and drag act in the wind axes of the effective (wake-augmented) flow,
/// rotated from the body by `alpha_e` about body x. Drag uses the angle of
/// the inertial velocity `alpha`.
pub fn aero_forces_moments(
    state: &RigidBodyState,
    thrust: f64,
    env: &Environment,
    params: &VehicleParams,
) -> Result<AeroState> {
    let vb = state.velocity;
    let (v, w) = (vb[1], vb[2]);
    let airspeed = vb.norm();
    let wake = rotor_wake(thrust, params)?;
    let alpha_e = effective_aoa(w, v, wake);
    let alpha = if airspeed > 0.0 { w.atan2(v) } else { 0.0 };

    let fit = &params.aero_fit;
    let blend = airspeed * airspeed / (airspeed * airspeed + LOW_SPEED_BLEND * LOW_SPEED_BLEND);
    let cd0 = drag_coefficient(0.0, fit);
    let cd = cd0 + blend * (drag_coefficient(alpha, fit) - cd0);
    let cl = lift_coefficient(alpha_e, fit);

    let qbar = 0.5 * params.air_density * (airspeed + wake).powi(2);
    let lift = qbar * params.wing_area * cl;
    let drag = qbar * params.fuselage_area * cd;

    // Side force follows the crosswind component across the wing span.
    let wind_b = frames::inertial_to_body(&state.attitude) * Vector3::from(env.wind_direction);
    let side = 0.5 * params.air_density * env.crosswind.powi(2) * params.side_area * params.side_force_slope * alpha
        * wind_b[0];

    let (s, c) = alpha_e.sin_cos();
    let y_wind = Vector3::new(0.0, c, s);
    let z_wind = Vector3::new(0.0, -s, c);
    let force = Vector3::new(side, 0.0, 0.0) - y_wind * drag - z_wind * lift;
    let moment = params.r_ac().cross(&force);

    Ok(AeroState {
        airspeed,
        wake_speed: wake,
        alpha,
        alpha_e,
        lift,
        drag,
        side,
        force,
        moment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const IDEAL: AeroFit = AeroFit::IDEAL;

    #[test]
    fn lift_at_zero_is_a3_plus_a0() {
        assert_relative_eq!(lift_coefficient(0.0, &IDEAL), 0.44, epsilon = 1e-15);
        let zero = AeroFit { lift: [0.0; 5], drag: [0.0; 2] };
        assert_eq!(lift_coefficient(0.0, &zero), 0.0);
    }

    #[test]
    fn lift_at_point_three() {
        // (5.59*0.3 + 0.07) exp(-12.35*0.09) + 0.69 sin(0.6) + 0.37, evaluated
        // independently at 30 digits.
        assert_relative_eq!(lift_coefficient(0.3, &IDEAL), 1.334479849766643, epsilon = 1e-14);
    }

    #[test]
    fn drag_endpoints_and_parity() {
        assert_relative_eq!(drag_coefficient(0.0, &IDEAL), 0.02, epsilon = 1e-14);
        assert_relative_eq!(drag_coefficient(PI / 2.0, &IDEAL), 2.12, epsilon = 1e-14);
        for a in [0.1, 0.7, 1.3, 2.9] {
            assert_eq!(drag_coefficient(a, &IDEAL), drag_coefficient(-a, &IDEAL));
        }
    }

    #[test]
    fn drag_extremes_of_ideal_fit() {
        let cds: Vec<f64> = (0..=200).map(|i| drag_coefficient(-PI / 2.0 + PI * i as f64 / 200.0, &IDEAL)).collect();
        let min = cds.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = cds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(min, cds[100]);
        assert_relative_eq!(max, cds[0]);
        assert_relative_eq!(max, cds[200]);
    }

    #[test]
    fn wake_from_momentum_theory() {
        let p = VehicleParams::default();
        assert_eq!(rotor_wake(0.0, &p).unwrap(), 0.0);
        let unit = 2.0 * p.air_density * PI * p.rotor_radius.powi(2);
        assert_relative_eq!(rotor_wake(unit, &p).unwrap(), 1.2, epsilon = 1e-14);
        let a = rotor_wake(40.0, &p).unwrap();
        let b = rotor_wake(80.0, &p).unwrap();
        assert_relative_eq!(b / a, 2f64.sqrt(), epsilon = 1e-14);
        assert!(matches!(rotor_wake(-1.0, &p), Err(Error::NegativeThrust(_))));
    }

    #[test]
    fn effective_aoa_cases() {
        assert_eq!(effective_aoa(0.0, 3.0, 2.0), 0.0);
        assert_relative_eq!(effective_aoa(5.0, 3.0, 2.0), PI / 4.0);
        assert_eq!(effective_aoa(0.0, 0.0, 0.0), 0.0);
        let mut prev = f64::INFINITY;
        for wake in [0.0, 1.0, 10.0, 100.0, 1000.0] {
            let a = effective_aoa(2.0, 1.0, wake);
            assert!(a < prev);
            prev = a;
        }
        assert!(prev < 0.003);
    }

    #[test]
    fn rest_without_thrust_is_unloaded() {
        let p = VehicleParams { r_ac: [0.1, -0.2, 0.05], ..Default::default() };
        let a = aero_forces_moments(&RigidBodyState::default(), 0.0, &Environment::default(), &p).unwrap();
        assert_eq!(a.force, Vector3::zeros());
        assert_eq!(a.moment, Vector3::zeros());
    }

    #[test]
    fn zero_offset_has_no_moment() {
        let s = RigidBodyState { velocity: Vector3::new(0.3, 8.0, 1.2), ..Default::default() };
        let a = aero_forces_moments(&s, 40.0, &Environment::default(), &VehicleParams::default()).unwrap();
        assert!(a.force.norm() > 1.0);
        assert_eq!(a.moment, Vector3::zeros());
    }

    #[test]
    fn hover_lift_matches_hand_chain() {
        let p = VehicleParams::default();
        let s = RigidBodyState { attitude: Vector3::new(-PI / 2.0, 0.0, 0.0), ..Default::default() };
        let t = p.weight();
        let a = aero_forces_moments(&s, t, &Environment::default(), &p).unwrap();
        // Independent chain: V_w = 1.2 sqrt(T / (2 rho pi R^2)), L = rho/2 V_w^2 S_w C_L(0).
        let vw = 1.2 * (t / (2.0 * 1.225 * PI * 0.40f64.powi(2))).sqrt();
        let lift = 0.5 * 1.225 * vw * vw * 0.20 * 0.44;
        let drag = 0.5 * 1.225 * vw * vw * 0.08 * 0.02;
        assert_eq!(a.alpha_e, 0.0);
        assert_relative_eq!(a.lift, lift, max_relative = 1e-13);
        assert_relative_eq!(a.force, Vector3::new(0.0, -drag, -lift), max_relative = 1e-13);
    }

    #[test]
    fn yaw_rotation_leaves_body_force_unchanged() {
        let p = VehicleParams::default();
        let mut s = RigidBodyState {
            attitude: Vector3::new(-0.6, 0.1, 0.0),
            velocity: Vector3::new(0.2, 6.0, 1.5),
            ..Default::default()
        };
        let base = aero_forces_moments(&s, 60.0, &Environment::default(), &p).unwrap();
        for psi in [0.5, -2.0, 3.0] {
            s.attitude[2] = psi;
            let turned = aero_forces_moments(&s, 60.0, &Environment::default(), &p).unwrap();
            assert_relative_eq!(turned.force, base.force, epsilon = 1e-12);
        }
    }
}
