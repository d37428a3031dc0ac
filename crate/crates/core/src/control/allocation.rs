use nalgebra::{Matrix4, Vector3, Vector4};

use crate::vehicle::VehicleParams;
use crate::{Error, Result};

/// Speeds of the four rotors, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RotorCommand {
    pub speeds: Vector4<f64>,
    /// Rotors whose squared speed came out negative and was clamped to zero.
    pub clamped_low: u8,
    /// Rotors clamped at the speed ceiling.
    pub clamped_high: u8,
}

impl RotorCommand {
    pub fn saturated(&self) -> bool {
        self.clamped_low + self.clamped_high > 0
    }
}

/// Forward map from squared rotor speeds to `[T, L, M, N]`.
pub fn mixing_matrix(params: &VehicleParams) -> Matrix4<f64> {
    let kt = params.k_thrust();
    let kq = params.k_torque();
    let dl = params.arm_longitudinal;
    let dn = params.arm_lateral;
    Matrix4::new(
        kt, kt, kt, kt, //
        -dl * kt, -dl * kt, dl * kt, dl * kt, //
        kq, -kq, kq, -kq, //
        -dn * kt, dn * kt, dn * kt, -dn * kt,
    )
}

/// Inverts the Omega-squared rotor model. Built once per airframe.
#[derive(Debug, Clone)]
pub struct Allocator {
    inverse: Matrix4<f64>,
    max_speed: f64,
}

impl Allocator {
    pub fn new(params: &VehicleParams) -> Result<Self> {
        let mix = mixing_matrix(params);
        let scale = mix.abs().max();
        if scale == 0.0 || mix.determinant().abs() < 1e-12 * scale.powi(4) {
            return Err(Error::SingularMixer);
        }
        let inverse = mix.try_inverse().ok_or(Error::SingularMixer)?;
        Ok(Allocator {
            inverse,
            max_speed: params.max_rotor_speed(),
        })
    }

    pub fn allocate(&self, thrust: f64, moment: &Vector3<f64>) -> Result<RotorCommand> {
        if thrust < 0.0 || !thrust.is_finite() {
            return Err(Error::NegativeThrust(thrust));
        }
        let squares = self.inverse * Vector4::new(thrust, moment[0], moment[1], moment[2]);
        let mut cmd = RotorCommand::default();
        for i in 0..4 {
            let mut sq = squares[i];
            if sq < 0.0 {
                sq = 0.0;
                cmd.clamped_low += 1;
            }
            let mut w = sq.sqrt();
            if w > self.max_speed {
                w = self.max_speed;
                cmd.clamped_high += 1;
            }
            cmd.speeds[i] = w;
        }
        Ok(cmd)
    }
}

/// One-shot allocation; prefer a stored [`Allocator`] in loops.
pub fn allocate(thrust: f64, moment: &Vector3<f64>, params: &VehicleParams) -> Result<RotorCommand> {
    Allocator::new(params)?.allocate(thrust, moment)
}
