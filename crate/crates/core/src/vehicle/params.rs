use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result};

/// Sinusoidal lift and drag fits.
///
/// `C_L(a) = (a4 a + a3) exp(-a2 a^2) + a1 sin(2a) + a0` and
/// `C_D(a) = b1 cos(2a) + b0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeroFit {
    /// `[a0, a1, a2, a3, a4]`
    pub lift: [f64; 5],
    /// `[b0, b1]`
    pub drag: [f64; 2],
}

impl AeroFit {
    /// Wind-tunnel-quality fit used by the planner and the plant.
    pub const IDEAL: AeroFit = AeroFit {
        lift: [0.37, 0.69, 12.35, 0.07, 5.59],
        drag: [1.07, -1.05],
    };

    /// Deliberately degraded fit used to build the perturbed feedforward.
    pub const DEGRADED: AeroFit = AeroFit {
        lift: [0.47, 0.73, 12.35, 0.08, 3.18],
        drag: [1.07, -1.07],
    };

    pub fn new(lift: [f64; 5], drag: [f64; 2]) -> Result<Self> {
        let fit = AeroFit { lift, drag };
        fit.validate()?;
        Ok(fit)
    }

    /// Checks finiteness and that `C_D >= 0` on a dense grid over `[-pi/2, pi/2]`.
    pub fn validate(&self) -> Result<()> {
        if self.lift.iter().chain(self.drag.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("aero fit coefficients must be finite".into()));
        }
        let samples = 721;
        for i in 0..samples {
            let alpha = -PI / 2.0 + PI * i as f64 / (samples - 1) as f64;
            let cd = super::aero::drag_coefficient(alpha, self);
            if cd < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "drag fit is negative ({cd:.4}) at alpha = {alpha:.4} rad"
                )));
            }
        }
        Ok(())
    }
}

/// Physical constants of one airframe. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    pub mass: f64,
    pub ixx: f64,
    pub iyy: f64,
    pub izz: f64,
    pub rotor_radius: f64,
    pub thrust_coefficient: f64,
    pub torque_coefficient: f64,
    /// Moment arm of the pitch (body x) differential thrust.
    pub arm_longitudinal: f64,
    /// Moment arm of the yaw (body z) differential thrust.
    pub arm_lateral: f64,
    pub wing_area: f64,
    pub fuselage_area: f64,
    pub side_area: f64,
    /// Center of mass to aerodynamic center, body frame.
    pub r_ac: [f64; 3],
    pub air_density: f64,
    pub gravity: f64,
    /// Ceiling on total thrust of all four rotors.
    pub max_thrust: f64,
    pub aero_fit: AeroFit,
    /// Slope of the linear side-force fit `C_Y = slope * alpha`; zero disables side force.
    #[serde(default)]
    pub side_force_slope: f64,
}

impl Default for VehicleParams {
    /// A 20 lb class quadrotor biplane. Only `mass` is tied to published
    /// numbers; geometry and rotor constants are placeholders of plausible scale.
    fn default() -> Self {
        VehicleParams {
            mass: 9.07,
            ixx: 0.35,
            iyy: 0.45,
            izz: 0.60,
            rotor_radius: 0.40,
            thrust_coefficient: 0.012,
            torque_coefficient: 0.0012,
            arm_longitudinal: 0.30,
            arm_lateral: 0.30,
            wing_area: 0.20,
            fuselage_area: 0.08,
            side_area: 0.10,
            r_ac: [0.0, 0.0, 0.0],
            air_density: 1.225,
            gravity: 9.81,
            max_thrust: 178.0,
            aero_fit: AeroFit::IDEAL,
            side_force_slope: 0.0,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("ixx", self.ixx),
            ("iyy", self.iyy),
            ("izz", self.izz),
            ("rotor_radius", self.rotor_radius),
            ("thrust_coefficient", self.thrust_coefficient),
            ("torque_coefficient", self.torque_coefficient),
            ("air_density", self.air_density),
            ("max_thrust", self.max_thrust),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        let nonneg = [
            ("wing_area", self.wing_area),
            ("fuselage_area", self.fuselage_area),
            ("side_area", self.side_area),
            ("arm_longitudinal", self.arm_longitudinal),
            ("arm_lateral", self.arm_lateral),
            ("gravity", self.gravity),
        ];
        for (name, v) in nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        if self.r_ac.iter().any(|c| !c.is_finite()) || !self.side_force_slope.is_finite() {
            return Err(Error::InvalidParameter("r_ac and side_force_slope must be finite".into()));
        }
        self.aero_fit.validate()
    }

    /// Same airframe with every aerodynamic surface removed.
    pub fn without_aero(&self) -> Self {
        VehicleParams {
            wing_area: 0.0,
            fuselage_area: 0.0,
            side_area: 0.0,
            ..self.clone()
        }
    }

    /// `k_T = rho pi R^4 C_T`, thrust per rotor per (rad/s)^2.
    pub fn k_thrust(&self) -> f64 {
        self.air_density * PI * self.rotor_radius.powi(4) * self.thrust_coefficient
    }

    /// `k_Q = rho pi R^5 C_Q`, hub torque per rotor per (rad/s)^2.
    pub fn k_torque(&self) -> f64 {
        self.air_density * PI * self.rotor_radius.powi(5) * self.torque_coefficient
    }

    /// Per-rotor speed ceiling implied by `max_thrust`.
    pub fn max_rotor_speed(&self) -> f64 {
        (self.max_thrust / (4.0 * self.k_thrust())).sqrt()
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        Matrix3::from_diagonal(&Vector3::new(self.ixx, self.iyy, self.izz))
    }

    pub fn r_ac(&self) -> Vector3<f64> {
        Vector3::from(self.r_ac)
    }

    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Ambient wind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    /// Crosswind speed, m/s.
    pub crosswind: f64,
    /// Inertial unit vector the crosswind blows along.
    pub wind_direction: [f64; 3],
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            crosswind: 0.0,
            wind_direction: [1.0, 0.0, 0.0],
        }
    }
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if !(self.crosswind.is_finite() && self.crosswind >= 0.0) {
            return Err(Error::InvalidParameter("crosswind must be >= 0".into()));
        }
        let n = Vector3::from(self.wind_direction).norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter("wind_direction must be a unit vector".into()));
        }
        Ok(())
    }
}
