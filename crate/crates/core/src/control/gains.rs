use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Diagonal outer-loop (position) and inner-loop (attitude) gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    /// Position gain diagonal, 1/s^2.
    pub kp: [f64; 3],
    /// Velocity gain diagonal, 1/s.
    pub kd: [f64; 3],
    /// Attitude gain diagonal, 1/s^2.
    pub kappa_p: [f64; 3],
    /// Attitude-rate gain diagonal, 1/s.
    pub kappa_d: [f64; 3],
}

/// Default inner-loop natural frequency and damping, rad/s.
pub const INNER_OMEGA_N: f64 = 15.0;
pub const INNER_ZETA: f64 = 0.9;

impl Gains {
    pub fn new(kp: [f64; 3], kd: [f64; 3], kappa_p: [f64; 3], kappa_d: [f64; 3]) -> Result<Self> {
        let g = Gains { kp, kd, kappa_p, kappa_d };
        g.validate()?;
        Ok(g)
    }

    /// Isotropic position gains `K_P = w^2 I`, `K_D = 2 zeta w I` with default inner gains.
    pub fn from_natural(omega_n: f64, zeta: f64) -> Result<Self> {
        let kp = omega_n * omega_n;
        let kd = 2.0 * zeta * omega_n;
        let ip = INNER_OMEGA_N * INNER_OMEGA_N;
        let id = 2.0 * INNER_ZETA * INNER_OMEGA_N;
        Gains::new([kp; 3], [kd; 3], [ip; 3], [id; 3])
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("kp", &self.kp),
            ("kd", &self.kd),
            ("kappa_p", &self.kappa_p),
            ("kappa_d", &self.kappa_d),
        ];
        for (name, diag) in all {
            if let Some(v) = diag.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
                return Err(Error::InvalidParameter(format!("gain {name} entries must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn kp_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.kp))
    }

    pub fn kd_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::from(self.kd))
    }

    pub fn min_kp(&self) -> f64 {
        self.kp.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_kp(&self) -> f64 {
        self.kp.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_kd(&self) -> f64 {
        self.kd.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Whether `m min(K_D) > alpha1`, the damping needed to dominate a
    /// velocity-proportional feedforward error.
    pub fn robust(&self, alpha1: f64, mass: f64) -> bool {
        mass * self.min_kd() > alpha1
    }
}
