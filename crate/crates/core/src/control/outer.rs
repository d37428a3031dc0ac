//! Position loop: PD acceleration command and inversion of the translational
//! dynamics for thrust and attitude.

use nalgebra::Vector3;

use super::Gains;
use crate::vehicle::VehicleParams;

/// One sample of the reference the position loop tracks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceSample {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
    /// Predicted aerodynamic load in the inversion's sign convention (lift up is `+z`).
    pub aero_load: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OuterLoopCommand {
    pub thrust: f64,
    /// `[phi_c, theta_c, psi_c]`
    pub attitude: Vector3<f64>,
    pub accel_cmd: Vector3<f64>,
    /// The attitude was held because the inversion was degenerate.
    pub held: bool,
    /// The roll command hit [`OuterLoop::max_roll`].
    pub roll_limited: bool,
}

/// Thrust vector the rotors must supply so that the translational dynamics
/// produce `accel` given the predicted aerodynamic load.
pub fn required_thrust_vector(accel: &Vector3<f64>, aero_load: &Vector3<f64>, params: &VehicleParams) -> Vector3<f64> {
    let m = params.mass;
    Vector3::new(
        aero_load[0] + m * accel[0],
        aero_load[1] + m * accel[1],
        aero_load[2] + m * (accel[2] - params.gravity),
    )
}

/// Stateful position loop; remembers the last attitude for degenerate samples.
#[derive(Debug, Clone)]
pub struct OuterLoop {
    previous: Vector3<f64>,
    /// Bound on `|theta_c|`, keeps the command away from the Euler singularity.
    pub max_roll: f64,
}

impl Default for OuterLoop {
    fn default() -> Self {
        OuterLoop::new(Vector3::new(-std::f64::consts::FRAC_PI_2, 0.0, 0.0))
    }
}

impl OuterLoop {
    pub fn new(initial_attitude: Vector3<f64>) -> Self {
        OuterLoop {
            previous: initial_attitude,
            max_roll: 1.4,
        }
    }

    pub fn update(
        &mut self,
        position: &Vector3<f64>,
        velocity: &Vector3<f64>,
        reference: &ReferenceSample,
        gains: &Gains,
        params: &VehicleParams,
    ) -> OuterLoopCommand {
        let pe = reference.position - position;
        let ve = reference.velocity - velocity;
        let accel_cmd = reference.acceleration + gains.kd_matrix() * ve + gains.kp_matrix() * pe;
        let tv = required_thrust_vector(&accel_cmd, &reference.aero_load, params);
        let thrust = tv.norm();

        let mut roll = if tv[0] == 0.0 && tv[2] == 0.0 {
            0.0
        } else {
            (tv[0] / tv[2]).atan()
        };
        let mut roll_limited = false;
        if roll.abs() > self.max_roll || !roll.is_finite() {
            roll = self.max_roll.copysign(tv[0] * tv[2]);
            roll_limited = true;
        }
        let num = tv[2] / roll.cos();
        let den = tv[1];
        let held = num == 0.0 && den == 0.0;
        let attitude = if held {
            self.previous
        } else {
            Vector3::new(num.atan2(den), roll, 0.0)
        };
        self.previous = attitude;
        OuterLoopCommand {
            thrust,
            attitude,
            accel_cmd,
            held,
            roll_limited,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::frames::body_to_inertial;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn gains() -> Gains {
        Gains::from_natural(3.0, 0.7071).unwrap()
    }

    #[test]
    fn hover_command() {
        let p = VehicleParams::default();
        let mut ol = OuterLoop::default();
        let cmd = ol.update(&Vector3::zeros(), &Vector3::zeros(), &ReferenceSample::default(), &gains(), &p);
        assert_relative_eq!(cmd.thrust, p.weight(), epsilon = 1e-12);
        assert_relative_eq!(cmd.attitude, Vector3::new(-FRAC_PI_2, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn lift_carrying_weight_needs_no_thrust() {
        let p = VehicleParams::default();
        let mut ol = OuterLoop::new(Vector3::new(-0.3, 0.0, 0.0));
        let r = ReferenceSample {
            aero_load: Vector3::new(0.0, 0.0, p.weight()),
            ..Default::default()
        };
        let cmd = ol.update(&Vector3::zeros(), &Vector3::zeros(), &r, &gains(), &p);
        assert_eq!(cmd.thrust, 0.0);
        assert!(cmd.held);
        assert_eq!(cmd.attitude, Vector3::new(-0.3, 0.0, 0.0));
    }

    #[test]
    fn gain_signs_drive_error_to_zero() {
        let p = VehicleParams::default();
        let mut ol = OuterLoop::default();
        let r = ReferenceSample { position: Vector3::new(0.0, 0.0, -1.0), ..Default::default() };
        let cmd = ol.update(&Vector3::zeros(), &Vector3::zeros(), &r, &gains(), &p);
        // Reference is above: accelerate upward (negative z) with extra thrust.
        assert!(cmd.accel_cmd[2] < 0.0);
        assert!(cmd.thrust > p.weight());
    }

    proptest! {
        #[test]
        fn inversion_round_trip(
            pe in prop::array::uniform3(-3.0f64..3.0),
            ve in prop::array::uniform3(-3.0f64..3.0),
            acc in prop::array::uniform3(-4.0f64..4.0),
            fy in -60.0f64..60.0, fz in -40.0f64..40.0,
        ) {
            let p = VehicleParams::default();
            let mut ol = OuterLoop::default();
            let r = ReferenceSample {
                position: Vector3::from(pe),
                velocity: Vector3::from(ve),
                acceleration: Vector3::from(acc),
                aero_load: Vector3::new(0.0, fy, fz),
            };
            let cmd = ol.update(&Vector3::zeros(), &Vector3::zeros(), &r, &gains(), &p);
            let tv = required_thrust_vector(&cmd.accel_cmd, &r.aero_load, &p);
            prop_assert!((cmd.thrust.powi(2) - tv.norm_squared()).abs() < 1e-12 * tv.norm_squared().max(1.0));
            prop_assume!(!cmd.roll_limited && !cmd.held);
            let rebuilt = body_to_inertial(&cmd.attitude) * Vector3::new(0.0, cmd.thrust, 0.0);
            prop_assert!((rebuilt - tv).norm() < 1e-10 * tv.norm().max(1.0));
        }

        #[test]
        fn attitude_continuous_along_paths(
            a in prop::array::uniform3(-0.8f64..0.8),
            b in prop::array::uniform3(-0.8f64..0.8),
            fy in 0.0f64..50.0,
        ) {
            let p = VehicleParams::default();
            let mut ol = OuterLoop::default();
            let mut prev: Option<Vector3<f64>> = None;
            let steps = 2000;
            for k in 0..=steps {
                let s = k as f64 / steps as f64;
                let e = Vector3::from(a) * (1.0 - s) + Vector3::from(b) * s;
                let r = ReferenceSample { position: e, aero_load: Vector3::new(0.0, fy * s, 0.0), ..Default::default() };
                let cmd = ol.update(&Vector3::zeros(), &Vector3::zeros(), &r, &gains(), &p);
                if let Some(q) = prev {
                    prop_assert!((cmd.attitude - q).norm() < 0.05, "jump at s = {s}");
                }
                prev = Some(cmd.attitude);
            }
        }
    }
}
