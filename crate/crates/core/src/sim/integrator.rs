use nalgebra::{SVector, Vector3};

use crate::control::RotorCommand;
use crate::vehicle::{state_derivative, Environment, RigidBodyState, StateDerivative, VehicleParams};
use crate::{Error, Result};

/// One classical Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4<const N: usize, F>(t: f64, y: &SVector<f64, N>, dt: f64, mut f: F) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let half = 0.5 * dt;
    let k1 = f(t, y)?;
    let k2 = f(t + half, &(y + k1 * half))?;
    let k3 = f(t + half, &(y + k2 * half))?;
    let k4 = f(t + dt, &(y + k3 * dt))?;
    Ok(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

fn pack(s: &RigidBodyState) -> SVector<f64, 12> {
    SVector::from(s.to_array())
}

fn pack_derivative(d: &StateDerivative) -> SVector<f64, 12> {
    let mut v = SVector::<f64, 12>::zeros();
    for (i, part) in [d.position, d.attitude, d.velocity, d.rates].iter().enumerate() {
        v.fixed_rows_mut::<3>(3 * i).copy_from(part);
    }
    v
}

fn unpack(v: &SVector<f64, 12>) -> RigidBodyState {
    let part = |i: usize| Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
    RigidBodyState {
        position: part(0),
        attitude: part(1),
        velocity: part(2),
        rates: part(3),
    }
}

/// Advances the plant by `dt` with rotor speeds held constant.
pub fn step_rk4(
    state: &RigidBodyState,
    rotors: &RotorCommand,
    dt: f64,
    env: &Environment,
    params: &VehicleParams,
) -> Result<RigidBodyState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("time step must be > 0, got {dt}")));
    }
    let y = rk4(0.0, &pack(state), dt, |_, y| {
        Ok(pack_derivative(&state_derivative(&unpack(y), rotors, env, params)?))
    })?;
    Ok(unpack(&y).wrapped())
}
