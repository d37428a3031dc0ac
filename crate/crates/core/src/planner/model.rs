//! Point-mass planar transition model used by the planner.
//!
//! Planar frame: `x` downrange, `z` altitude (up), flight-path angle `gamma`
//! above horizontal, pitch `phi = gamma + alpha` nose-up positive.

use num_dual::DualNum;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::vehicle::{AeroFit, VehicleParams};
use crate::{Error, Result};

/// Speeds at or below this are rejected by [`planar_derivative`].
pub const SPEED_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarState {
    pub x: f64,
    pub z: f64,
    pub speed: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarInput {
    pub thrust: f64,
    /// Pitch, nose-up positive.
    pub pitch: f64,
}

/// Wake, effective airspeed and aerodynamic loads of the planar model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarAero<D> {
    pub wake: D,
    pub airspeed: D,
    pub alpha_e: D,
    pub lift: D,
    pub drag: D,
}

fn lift_coefficient<D: DualNum<Primitive = f64> + Copy>(a: D, fit: &AeroFit) -> D {
    let [a0, a1, a2, a3, a4] = fit.lift;
    (a * a4 + a3) * (a * a * (-a2)).exp() + (a * 2.0).sin() * a1 + a0
}

fn drag_coefficient<D: DualNum<Primitive = f64> + Copy>(a: D, fit: &AeroFit) -> D {
    let [b0, b1] = fit.drag;
    (a * 2.0).cos() * b1 + b0
}

/// Planner wake: each rotor carries a quarter of the thrust.
pub fn planar_wake<D: DualNum<Primitive = f64> + Copy>(thrust: D, params: &VehicleParams) -> D {
    (thrust / (8.0 * params.air_density * PI * params.rotor_radius.powi(2))).sqrt() * crate::vehicle::aero::WAKE_FACTOR
}

pub fn planar_aero<D: DualNum<Primitive = f64> + Copy>(
    speed: D,
    thrust: D,
    alpha: D,
    params: &VehicleParams,
    fit: &AeroFit,
) -> PlanarAero<D> {
    let wake = planar_wake(thrust, params);
    let airspeed = (speed * speed + wake * wake + speed * wake * alpha.cos() * 2.0).sqrt();
    let alpha_e = (speed * alpha.sin() / airspeed).asin();
    let qbar = 0.5 * params.air_density;
    let lift = lift_coefficient(alpha_e, fit) * airspeed * airspeed * (qbar * params.wing_area);
    let drag = drag_coefficient(alpha, fit) * speed * speed * (qbar * params.fuselage_area);
    PlanarAero {
        wake,
        airspeed,
        alpha_e,
        lift,
        drag,
    }
}

/// Rates `[x', z', V', gamma']` for speed, flight-path angle, thrust and
/// angle of attack. Does not guard the `1/V` singularity.
pub fn planar_rhs<D: DualNum<Primitive = f64> + Copy>(
    speed: D,
    gamma: D,
    thrust: D,
    alpha: D,
    params: &VehicleParams,
    fit: &AeroFit,
) -> [D; 4] {
    let m = params.mass;
    let g = params.gravity;
    let aero = planar_aero(speed, thrust, alpha, params, fit);
    let (sg, cg) = gamma.sin_cos();
    let (sa, ca) = alpha.sin_cos();
    let (sd, cd) = (alpha - aero.alpha_e).sin_cos();
    let speed_dot = (thrust * ca - aero.lift * sd - aero.drag * cd) / m - sg * g;
    let gamma_dot = ((thrust * sa + aero.lift * cd - aero.drag * sd) / m - cg * g) / speed;
    [speed * cg, speed * sg, speed_dot, gamma_dot]
}

pub fn planar_derivative(s: &PlanarState, u: &PlanarInput, params: &VehicleParams) -> Result<[f64; 4]> {
    if !(s.speed > SPEED_EPS) {
        return Err(Error::SingularFlightPath(s.speed));
    }
    if u.thrust < 0.0 {
        return Err(Error::NegativeThrust(u.thrust));
    }
    Ok(planar_rhs(s.speed, s.gamma, u.thrust, u.pitch - s.gamma, params, &params.aero_fit))
}

/// Thrust and angle of attack holding speed and flight-path angle constant.
pub fn planar_trim(speed: f64, gamma: f64, params: &VehicleParams, fit: &AeroFit) -> Result<PlanarInput> {
    use nalgebra::{SMatrix, SVector};
    use num_dual::{jacobian, DualSVec64};
    if !(speed > SPEED_EPS) {
        return Err(Error::SingularFlightPath(speed));
    }
    let w = params.weight();
    let residual = |u: SVector<DualSVec64<2>, 2>| {
        let f = planar_rhs(DualSVec64::from(speed), DualSVec64::from(gamma), u[0] * w, u[1], params, fit);
        SVector::from([f[2], f[3] * speed])
    };
    // Thrust in units of weight, angle of attack in rad.
    let mut u = SVector::<f64, 2>::new(gamma.sin().abs().max(0.1), 0.0);
    for _ in 0..100 {
        let (r, j): (SVector<f64, 2>, SMatrix<f64, 2, 2>) = jacobian(residual, &u);
        if r.norm() < 1e-12 {
            return Ok(PlanarInput { thrust: u[0] * w, pitch: gamma + u[1] });
        }
        let Some(step) = j.lu().solve(&-r) else { break };
        let mut t = 1.0;
        let mut next = u + step;
        while (next[0] < 0.0 || next[1].abs() > PI / 2.0) && t > 1e-6 {
            t *= 0.5;
            next = u + step * t;
        }
        u = next;
    }
    Err(Error::InfeasibleMission(format!("no trim at V = {speed} m/s, gamma = {gamma} rad")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn vertical_flight_kinematics() {
        let p = VehicleParams::default();
        let s = PlanarState { speed: 3.0, gamma: FRAC_PI_2, ..Default::default() };
        let d = planar_derivative(&s, &PlanarInput { thrust: 50.0, pitch: FRAC_PI_2 }, &p).unwrap();
        assert!(d[0].abs() < 1e-15);
        assert_eq!(d[1], 3.0);
    }

    #[test]
    fn level_trim_is_stationary() {
        // Solve T cos(a) = D-part and T sin(a) + L-part = mg for (T, a) at fixed speed.
        let p = VehicleParams::default();
        let v = 20.0;
        let (mut t, mut a) = (30.0, 0.3);
        for _ in 0..50 {
            let r = |t: f64, a: f64| {
                let d = planar_rhs(v, 0.0, t, a, &p, &p.aero_fit);
                [d[2], d[3]]
            };
            let f = r(t, a);
            let h = 1e-7;
            let ft = r(t + h, a);
            let fa = r(t, a + h);
            let j = [[(ft[0] - f[0]) / h, (fa[0] - f[0]) / h], [(ft[1] - f[1]) / h, (fa[1] - f[1]) / h]];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            t -= (j[1][1] * f[0] - j[0][1] * f[1]) / det;
            a -= (-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        }
        let s = PlanarState { speed: v, ..Default::default() };
        let d = planar_derivative(&s, &PlanarInput { thrust: t, pitch: a }, &p).unwrap();
        assert!(d[2].abs() < 1e-10 && d[3].abs() < 1e-10, "{d:?}");
        assert!(t > 0.0 && a.abs() < PI / 4.0);
    }

    #[test]
    fn trim_matches_newton_oracle() {
        let p = VehicleParams::default();
        for (v, g) in [(12.86, 0.0), (1.54, PI / 2.0), (8.0, 0.2)] {
            let u = planar_trim(v, g, &p, &p.aero_fit).unwrap();
            let s = PlanarState { speed: v, gamma: g, ..Default::default() };
            let d = planar_derivative(&s, &u, &p).unwrap();
            assert!(d[2].abs() < 1e-10 && d[3].abs() < 1e-10, "{v} {g} {d:?}");
            assert!(u.thrust > 0.0);
        }
    }

    #[test]
    fn zero_speed_rejected() {
        let p = VehicleParams::default();
        let s = PlanarState::default();
        assert!(matches!(
            planar_derivative(&s, &PlanarInput { thrust: 1.0, pitch: 0.0 }, &p),
            Err(Error::SingularFlightPath(_))
        ));
    }

    #[test]
    fn wake_relations() {
        let p = VehicleParams::default();
        let (v, t, a) = (4.0, 70.0, 0.4);
        let aero = planar_aero(v, t, a, &p, &p.aero_fit);
        let vw = 1.2 * (t / (8.0 * p.air_density * PI * p.rotor_radius.powi(2))).sqrt();
        assert_relative_eq!(aero.wake, vw, epsilon = 1e-12);
        assert_relative_eq!(aero.airspeed, (v * v + vw * vw + 2.0 * v * vw * a.cos()).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(aero.alpha_e.sin() * aero.airspeed, v * a.sin(), epsilon = 1e-12);
    }

    #[test]
    fn dual_numbers_agree_with_finite_differences() {
        use nalgebra::SVector;
        use num_dual::jacobian;
        let p = VehicleParams::default();
        let y = SVector::<f64, 4>::new(5.0, 0.3, 60.0, 0.2);
        let (f, jac) = jacobian(
            |v: SVector<num_dual::DualSVec64<4>, 4>| SVector::from(planar_rhs(v[0], v[1], v[2], v[3], &p, &p.aero_fit)),
            &y,
        );
        for j in 0..4 {
            let mut yp = y;
            yp[j] += 1e-6;
            let fp = planar_rhs(yp[0], yp[1], yp[2], yp[3], &p, &p.aero_fit);
            for i in 0..4 {
                assert_relative_eq!((fp[i] - f[i]) / 1e-6, jac[(i, j)], epsilon = 1e-4, max_relative = 1e-4);
            }
        }
    }
}
