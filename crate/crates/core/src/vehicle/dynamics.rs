//! Rigid-body equations of motion of the plant.

use nalgebra::{Vector3, Vector4};

use super::aero::{aero_forces_moments, AeroState};
use super::frames;
use super::{Environment, VehicleParams};
use crate::control::RotorCommand;
use crate::{Error, Result};

/// 12-state pose and velocity of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    /// Inertial position (z down), m.
    pub position: Vector3<f64>,
    /// Euler attitude `[phi (pitch), theta (roll), psi (yaw)]`, rad.
    pub attitude: Vector3<f64>,
    /// Body translational velocity `[u, v, w]`, m/s.
    pub velocity: Vector3<f64>,
    /// Body rotational velocity `[p, q, r]`, rad/s.
    pub rates: Vector3<f64>,
}

/// Time derivative of a [`RigidBodyState`], field for field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateDerivative {
    pub position: Vector3<f64>,
    pub attitude: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub rates: Vector3<f64>,
}

impl RigidBodyState {
    pub fn inertial_velocity(&self) -> Vector3<f64> {
        frames::body_to_inertial(&self.attitude) * self.velocity
    }

    /// Builds a state from an inertial velocity.
    pub fn from_inertial(position: Vector3<f64>, attitude: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        RigidBodyState {
            position,
            attitude,
            velocity: frames::inertial_to_body(&attitude) * velocity,
            rates: Vector3::zeros(),
        }
    }

    pub fn euler_rates(&self) -> Result<Vector3<f64>> {
        frames::euler_rates(&self.attitude, &self.rates)
    }

    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        out[0..3].copy_from_slice(self.position.as_slice());
        out[3..6].copy_from_slice(self.attitude.as_slice());
        out[6..9].copy_from_slice(self.velocity.as_slice());
        out[9..12].copy_from_slice(self.rates.as_slice());
        out
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn wrapped(mut self) -> Self {
        self.attitude = self.attitude.map(frames::wrap_angle);
        self
    }
}

/// Total thrust and control moments `[L, M, N]` produced by the rotors,
/// using hover thrust and torque coefficients.
pub fn rotor_wrench(rotors: &RotorCommand, params: &VehicleParams) -> (f64, Vector3<f64>) {
    let sq: Vector4<f64> = rotors.speeds.map(|w| w * w);
    let f = crate::control::mixing_matrix(params) * sq;
    (f[0], Vector3::new(f[1], f[2], f[3]))
}

/// Right-hand side of the 6DOF equations of motion.
pub fn state_derivative(
    state: &RigidBodyState,
    rotors: &RotorCommand,
    env: &Environment,
    params: &VehicleParams,
) -> Result<StateDerivative> {
    if rotors.speeds.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidParameter("rotor speeds must be finite and >= 0".into()));
    }
    let (thrust, control) = rotor_wrench(rotors, params);
    let aero = aero_forces_moments(state, thrust, env, params)?;
    derivative_with(state, thrust, &control, &aero, params)
}

/// Equations of motion for a given thrust, control moment and aerodynamic load.
pub fn derivative_with(
    state: &RigidBodyState,
    thrust: f64,
    control: &Vector3<f64>,
    aero: &AeroState,
    params: &VehicleParams,
) -> Result<StateDerivative> {
    let euler_dot = state.euler_rates()?;
    let m = params.mass;
    let (u, v, w) = (state.velocity[0], state.velocity[1], state.velocity[2]);
    let (p, q, r) = (state.rates[0], state.rates[1], state.rates[2]);

    let gravity_b = frames::inertial_to_body(&state.attitude) * Vector3::new(0.0, 0.0, params.gravity);
    let velocity_dot = Vector3::new(0.0, thrust / m, 0.0)
        + aero.force / m
        + gravity_b
        + Vector3::new(r * v - q * w, p * w - r * u, q * u - p * v);

    let (ixx, iyy, izz) = (params.ixx, params.iyy, params.izz);
    let torque = control + aero.moment;
    let rates_dot = Vector3::new(
        (torque[0] + (iyy - izz) * q * r) / ixx,
        (torque[1] + (izz - ixx) * p * r) / iyy,
        (torque[2] + (ixx - iyy) * p * q) / izz,
    );

    Ok(StateDerivative {
        position: state.inertial_velocity(),
        attitude: euler_dot,
        velocity: velocity_dot,
        rates: rates_dot,
    })
}

/// Steady hover with full aerodynamics: the nose-up attitude and total thrust
/// for which the wake-induced wing and fuselage loads, thrust and weight
/// balance with the vehicle at rest.
#[derive(Debug, Clone, Copy)]
pub struct HoverTrim {
    pub state: RigidBodyState,
    pub thrust: f64,
    pub aero: AeroState,
}

pub fn hover_trim(position: Vector3<f64>, params: &VehicleParams) -> Result<HoverTrim> {
    let env = Environment::default();
    let rest = RigidBodyState { position, ..Default::default() };
    // Body-plane force magnitude |(T - D, -L)| must equal the weight.
    let residual = |t: f64| -> Result<f64> {
        let a = aero_forces_moments(&rest, t, &env, params)?;
        Ok(((t - a.drag).powi(2) + a.lift.powi(2)).sqrt() - params.weight())
    };
    let mut thrust = params.weight();
    for _ in 0..100 {
        let r = residual(thrust)?;
        if r.abs() < 1e-12 * params.weight() {
            break;
        }
        let h = 1e-6 * thrust.max(1.0);
        let slope = (residual(thrust + h)? - residual(thrust - h)?) / (2.0 * h);
        thrust = (thrust - r / slope).max(0.0);
    }
    let aero = aero_forces_moments(&rest, thrust, &env, params)?;
    let kappa = (-aero.lift).atan2(thrust - aero.drag);
    let phi = frames::wrap_angle(-std::f64::consts::FRAC_PI_2 - kappa);
    let state = RigidBodyState {
        position,
        attitude: Vector3::new(phi, 0.0, 0.0),
        ..Default::default()
    };
    let aero = aero_forces_moments(&state, thrust, &env, params)?;
    if residual(thrust)?.abs() > 1e-8 * params.weight() {
        return Err(Error::InfeasibleMission("hover trim did not converge".into()));
    }
    Ok(HoverTrim { state, thrust, aero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::allocate;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn rotors_for(thrust: f64, params: &VehicleParams) -> RotorCommand {
        allocate(thrust, &Vector3::zeros(), params).unwrap()
    }

    #[test]
    fn bare_hover_is_equilibrium() {
        let p = VehicleParams::default().without_aero();
        let s = RigidBodyState {
            attitude: Vector3::new(-FRAC_PI_2, 0.0, 0.0),
            ..Default::default()
        };
        let d = state_derivative(&s, &rotors_for(p.weight(), &p), &Environment::default(), &p).unwrap();
        assert!(d.velocity.norm() < 1e-9, "{:?}", d.velocity);
        assert!(d.rates.norm() < 1e-9);
    }

    #[test]
    fn wake_loaded_hover_trim_is_equilibrium() {
        let p = VehicleParams::default();
        let trim = hover_trim(Vector3::new(0.0, 0.0, -30.0), &p).unwrap();
        assert!(trim.aero.lift > 1.0);
        assert!(trim.state.attitude[0] > -FRAC_PI_2 && trim.state.attitude[0] < 0.0);
        let d = state_derivative(&trim.state, &rotors_for(trim.thrust, &p), &Environment::default(), &p).unwrap();
        assert!(d.velocity.norm() < 1e-9, "{:?}", d.velocity);
        assert!(d.rates.norm() < 1e-9);
    }

    #[test]
    fn free_fall_accelerates_at_g() {
        let p = VehicleParams::default();
        let s = RigidBodyState {
            attitude: Vector3::new(-0.7, 0.2, 1.1),
            ..Default::default()
        };
        let d = state_derivative(&s, &RotorCommand::default(), &Environment::default(), &p).unwrap();
        let inertial = frames::body_to_inertial(&s.attitude) * d.velocity;
        assert_relative_eq!(inertial, Vector3::new(0.0, 0.0, p.gravity), epsilon = 1e-12);
    }

    #[test]
    fn gyroscopic_torques_do_no_work() {
        let p = VehicleParams::default().without_aero();
        for seed in 0..50 {
            let f = |k: usize| ((seed * 7 + k * 13) as f64 * 0.61).sin() * 3.0;
            let s = RigidBodyState {
                attitude: Vector3::new(f(1), 0.5 * f(2) / 3.0, f(3)),
                rates: Vector3::new(f(4), f(5), f(6)),
                ..Default::default()
            };
            let d = state_derivative(&s, &RotorCommand::default(), &Environment::default(), &p).unwrap();
            let j = p.inertia();
            let ke_rate = s.rates.dot(&(j * d.rates));
            assert!(ke_rate.abs() < 1e-10, "{ke_rate}");
        }
    }

    #[test]
    fn gimbal_lock_is_an_error() {
        let p = VehicleParams::default();
        let s = RigidBodyState {
            attitude: Vector3::new(0.0, FRAC_PI_2, 0.0),
            ..Default::default()
        };
        assert!(matches!(
            state_derivative(&s, &RotorCommand::default(), &Environment::default(), &p),
            Err(Error::GimbalLock(_))
        ));
    }

    #[test]
    fn negative_rotor_speed_rejected() {
        let p = VehicleParams::default();
        let cmd = RotorCommand { speeds: Vector4::new(1.0, -1.0, 1.0, 1.0), ..Default::default() };
        assert!(state_derivative(&RigidBodyState::default(), &cmd, &Environment::default(), &p).is_err());
    }
}
