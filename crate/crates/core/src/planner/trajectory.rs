//! Time-indexed reference for the position loop.
//!
//! The planner plane maps to inertial axes as `(x, z) -> (y, -z)`: planner
//! downrange becomes inertial `y` and altitude becomes `-z` (z down). The
//! inertial `x` channel is held at zero.

use nalgebra::Vector3;
use std::io::{Read, Write};

use super::model::{planar_aero, planar_rhs, planar_trim};
use crate::control::ReferenceSample;
use crate::vehicle::{AeroFit, VehicleParams};
use crate::{Error, Result};

pub const CSV_HEADER: [&str; 18] = [
    "t", "x_d", "y_d", "z_d", "xd_d", "yd_d", "zd_d", "xdd_d", "ydd_d", "zdd_d", "FAx", "FAy", "FAz", "alpha", "alpha_e",
    "gamma", "T", "phi",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReferenceTrajectory {
    pub time: Vec<f64>,
    pub position: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    pub acceleration: Vec<Vector3<f64>>,
    /// Predicted aerodynamic load, lift up is `+z` after negation (see
    /// [`crate::vehicle::AeroState::inertial_load`]).
    pub aero_load: Vec<Vector3<f64>>,
    pub speed: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_e: Vec<f64>,
    pub thrust: Vec<f64>,
    /// Planner pitch `gamma + alpha`, nose-up positive.
    pub pitch: Vec<f64>,
    pub lift: Vec<f64>,
    pub drag: Vec<f64>,
}

/// Inertial load from lift and drag acting on the effective flow at `beta = phi - alpha_e`.
pub fn feedforward_load(lift: f64, drag: f64, beta: f64) -> Vector3<f64> {
    let (s, c) = beta.sin_cos();
    Vector3::new(0.0, lift * s + drag * c, lift * c - drag * s)
}

fn hermite(p0: f64, m0: f64, p1: f64, m1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * h * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * h * m1
}

impl ReferenceTrajectory {
    /// Builds the reference from planner nodes, with loads from `fit`.
    pub fn from_planar(
        time: &[f64],
        nodes: &[[f64; 6]],
        params: &VehicleParams,
        fit: &AeroFit,
    ) -> Result<ReferenceTrajectory> {
        if time.len() != nodes.len() || time.len() < 2 {
            return Err(Error::InvalidParameter("trajectory needs matching time and node arrays".into()));
        }
        if time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("trajectory time grid must be strictly increasing".into()));
        }
        let mut tr = ReferenceTrajectory::default();
        for (t, n) in time.iter().zip(nodes) {
            let [x, z, v, gamma, thrust, alpha] = *n;
            let f = planar_rhs(v, gamma, thrust, alpha, params, &params.aero_fit);
            let (sg, cg) = gamma.sin_cos();
            let (vdot, gdot) = (f[2], f[3]);
            tr.time.push(*t);
            tr.position.push(Vector3::new(0.0, x, -z));
            tr.velocity.push(Vector3::new(0.0, v * cg, -v * sg));
            tr.acceleration.push(Vector3::new(
                0.0,
                vdot * cg - v * gdot * sg,
                -(vdot * sg + v * gdot * cg),
            ));
            tr.speed.push(v);
            tr.gamma.push(gamma);
            tr.alpha.push(alpha);
            tr.thrust.push(thrust);
            tr.pitch.push(gamma + alpha);
        }
        tr.alpha_e = vec![0.0; time.len()];
        tr.lift = vec![0.0; time.len()];
        tr.drag = vec![0.0; time.len()];
        tr.aero_load = vec![Vector3::zeros(); time.len()];
        Ok(tr.with_fit(params, fit))
    }

    /// Same kinematic reference with loads predicted by another fit.
    pub fn with_fit(&self, params: &VehicleParams, fit: &AeroFit) -> ReferenceTrajectory {
        let mut out = self.clone();
        for k in 0..self.len() {
            let a = planar_aero(self.speed[k], self.thrust[k], self.alpha[k], params, fit);
            out.alpha_e[k] = a.alpha_e;
            out.lift[k] = a.lift;
            out.drag[k] = a.drag;
            out.aero_load[k] = feedforward_load(a.lift, a.drag, self.pitch[k] - a.alpha_e);
        }
        out
    }

    /// Stationary reference at an inertial position holding a constant load.
    pub fn hover(position: Vector3<f64>, aero_load: Vector3<f64>, duration: f64) -> ReferenceTrajectory {
        let n = 2;
        ReferenceTrajectory {
            time: vec![0.0, duration],
            position: vec![position; n],
            velocity: vec![Vector3::zeros(); n],
            acceleration: vec![Vector3::zeros(); n],
            aero_load: vec![aero_load; n],
            speed: vec![0.0; n],
            gamma: vec![std::f64::consts::FRAC_PI_2; n],
            alpha: vec![0.0; n],
            alpha_e: vec![0.0; n],
            thrust: vec![0.0; n],
            pitch: vec![std::f64::consts::FRAC_PI_2; n],
            lift: vec![aero_load[2]; n],
            drag: vec![aero_load[1]; n],
        }
    }

    /// Appends trimmed flight at the terminal speed and flight-path angle
    /// until `end_time`, sampled every `spacing` seconds.
    pub fn with_steady_tail(&self, end_time: f64, spacing: f64, params: &VehicleParams) -> Result<ReferenceTrajectory> {
        if self.is_empty() || end_time <= self.end_time() {
            return Ok(self.clone());
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter("tail spacing must be > 0".into()));
        }
        let k = self.len() - 1;
        let (v, gamma) = (self.speed[k], self.gamma[k]);
        let trim = planar_trim(v, gamma, params, &params.aero_fit)?;
        let (x0, z0) = (self.position[k][1], -self.position[k][2]);
        let t0 = self.end_time();
        let count = (((end_time - t0) / spacing).ceil() as usize).max(2);
        let time: Vec<f64> = (1..=count).map(|i| t0 + i as f64 * spacing).collect();
        let nodes: Vec<[f64; 6]> = time
            .iter()
            .map(|t| {
                let d = v * (t - t0);
                [x0 + d * gamma.cos(), z0 + d * gamma.sin(), v, gamma, trim.thrust, trim.pitch - gamma]
            })
            .collect();
        let tail = ReferenceTrajectory::from_planar(&time, &nodes, params, &params.aero_fit)?;
        let mut out = self.clone();
        out.time.extend(&tail.time);
        out.position.extend(&tail.position);
        out.velocity.extend(&tail.velocity);
        out.acceleration.extend(&tail.acceleration);
        out.aero_load.extend(&tail.aero_load);
        out.speed.extend(&tail.speed);
        out.gamma.extend(&tail.gamma);
        out.alpha.extend(&tail.alpha);
        out.alpha_e.extend(&tail.alpha_e);
        out.thrust.extend(&tail.thrust);
        out.pitch.extend(&tail.pitch);
        out.lift.extend(&tail.lift);
        out.drag.extend(&tail.drag);
        Ok(out)
    }

    /// Same trajectory with the aerodynamic load removed.
    pub fn without_load(&self) -> ReferenceTrajectory {
        let mut out = self.clone();
        out.aero_load.iter_mut().for_each(|f| *f = Vector3::zeros());
        out
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.time[0]
    }

    pub fn end_time(&self) -> f64 {
        *self.time.last().unwrap_or(&0.0)
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    fn locate(&self, t: f64) -> Result<(usize, f64, f64)> {
        let (t0, t1) = (self.start_time(), self.end_time());
        let tol = 1e-9 * (1.0 + t1.abs());
        if self.len() < 2 || !(t >= t0 - tol && t <= t1 + tol) {
            return Err(Error::TrajectoryCoverage(t));
        }
        let t = t.clamp(t0, t1);
        let k = self.time.partition_point(|&s| s <= t).clamp(1, self.len() - 1) - 1;
        let h = self.time[k + 1] - self.time[k];
        Ok((k, h, (t - self.time[k]) / h))
    }

    fn slope(&self, values: &[Vector3<f64>], k: usize) -> Vector3<f64> {
        let n = self.len();
        let (a, b) = if k == 0 {
            (0, 1)
        } else if k == n - 1 {
            (n - 2, n - 1)
        } else {
            (k - 1, k + 1)
        };
        (values[b] - values[a]) / (self.time[b] - self.time[a])
    }

    fn cubic(&self, values: &[Vector3<f64>], slopes: (Vector3<f64>, Vector3<f64>), k: usize, h: f64, s: f64) -> Vector3<f64> {
        Vector3::from_fn(|i, _| hermite(values[k][i], slopes.0[i], values[k + 1][i], slopes.1[i], h, s))
    }

    /// Reference at time `t` by cubic Hermite interpolation between nodes.
    pub fn sample(&self, t: f64) -> Result<ReferenceSample> {
        let (k, h, s) = self.locate(t)?;
        let vel_slopes = (self.acceleration[k], self.acceleration[k + 1]);
        let pos_slopes = (self.velocity[k], self.velocity[k + 1]);
        let acc_slopes = (self.slope(&self.acceleration, k), self.slope(&self.acceleration, k + 1));
        let load_slopes = (self.slope(&self.aero_load, k), self.slope(&self.aero_load, k + 1));
        Ok(ReferenceSample {
            position: self.cubic(&self.position, pos_slopes, k, h, s),
            velocity: self.cubic(&self.velocity, vel_slopes, k, h, s),
            acceleration: self.cubic(&self.acceleration, acc_slopes, k, h, s),
            aero_load: self.cubic(&self.aero_load, load_slopes, k, h, s),
        })
    }

    /// Linearly interpolated planner pitch at `t`.
    pub fn pitch_at(&self, t: f64) -> Result<f64> {
        let (k, _, s) = self.locate(t)?;
        Ok(self.pitch[k] + s * (self.pitch[k + 1] - self.pitch[k]))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(CSV_HEADER)?;
        for k in 0..self.len() {
            let mut row = vec![self.time[k]];
            for v in [&self.position[k], &self.velocity[k], &self.acceleration[k], &self.aero_load[k]] {
                row.extend(v.iter());
            }
            row.extend([self.alpha[k], self.alpha_e[k], self.gamma[k], self.thrust[k], self.pitch[k]]);
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<ReferenceTrajectory> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(Error::InvalidParameter(format!("unexpected trajectory header: {header:?}")));
        }
        let mut tr = ReferenceTrajectory::default();
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad number in trajectory: {e}")))?;
            let vec3 = |i: usize| Vector3::new(v[i], v[i + 1], v[i + 2]);
            tr.time.push(v[0]);
            tr.position.push(vec3(1));
            tr.velocity.push(vec3(4));
            tr.acceleration.push(vec3(7));
            let load = vec3(10);
            tr.aero_load.push(load);
            let (alpha, alpha_e, gamma, thrust, pitch) = (v[13], v[14], v[15], v[16], v[17]);
            tr.alpha.push(alpha);
            tr.alpha_e.push(alpha_e);
            tr.gamma.push(gamma);
            tr.thrust.push(thrust);
            tr.pitch.push(pitch);
            tr.speed.push(vec3(4).norm());
            let (s, c) = (pitch - alpha_e).sin_cos();
            tr.lift.push(load[1] * s + load[2] * c);
            tr.drag.push(load[1] * c - load[2] * s);
        }
        if tr.len() < 2 || tr.time.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("trajectory needs >= 2 strictly increasing samples".into()));
        }
        Ok(tr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Nodes from an RK4 integration of the planar model so kinematics are consistent.
    fn climb_turn() -> ReferenceTrajectory {
        let p = VehicleParams::default();
        let n = 80;
        let dt = 0.05;
        let input = |t: f64| (70.0 + t, 0.3 * (t * 0.7).sin());
        let rhs = |s: [f64; 4], t: f64| {
            let (th, al) = input(t);
            planar_rhs(s[2], s[3], th, al, &p, &p.aero_fit)
        };
        let mut s = [0.0, 0.0, 2.0, 1.2];
        let mut time = Vec::new();
        let mut nodes = Vec::new();
        let sub = 20;
        let h = dt / sub as f64;
        for k in 0..n {
            let t0 = k as f64 * dt;
            let (th, al) = input(t0);
            time.push(t0);
            nodes.push([s[0], s[1], s[2], s[3], th, al]);
            for i in 0..sub {
                let t = t0 + i as f64 * h;
                let add = |s: [f64; 4], d: [f64; 4], c: f64| std::array::from_fn(|j| s[j] + c * d[j]);
                let k1 = rhs(s, t);
                let k2 = rhs(add(s, k1, h / 2.0), t + h / 2.0);
                let k3 = rhs(add(s, k2, h / 2.0), t + h / 2.0);
                let k4 = rhs(add(s, k3, h), t + h);
                s = std::array::from_fn(|j| s[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]));
            }
        }
        ReferenceTrajectory::from_planar(&time, &nodes, &p, &p.aero_fit).unwrap()
    }

    #[test]
    fn zero_aero_gives_zero_load() {
        assert_eq!(feedforward_load(0.0, 0.0, 0.7), Vector3::zeros());
    }

    #[test]
    fn aligned_flow_gives_drag_and_lift() {
        assert_eq!(feedforward_load(30.0, 4.0, 0.0), Vector3::new(0.0, 4.0, 30.0));
    }

    #[test]
    fn load_is_rotation_of_drag_and_lift() {
        for (l, d, b) in [(12.0, 3.0, 0.4), (50.0, 0.5, -1.1), (7.0, 9.0, 2.5)] {
            // Planar force (-D, L) in flow axes rotated by beta, mapped to z-down, then negated.
            let (s, c) = f64::sin_cos(b);
            let fx = c * -d - s * l;
            let fz = s * -d + c * l;
            let load = feedforward_load(l, d, b);
            assert_relative_eq!(load[1], -fx, epsilon = 1e-12);
            assert_relative_eq!(load[2], fz, epsilon = 1e-12);
            assert_eq!(load[0], 0.0);
        }
    }

    #[test]
    fn planar_and_consistent() {
        let tr = climb_turn();
        assert!(tr.aero_load.iter().all(|f| f[0] == 0.0));
        assert!(tr.position.iter().all(|p| p[0] == 0.0));
        // Velocity is the derivative of position to interpolation order.
        for k in 1..tr.len() - 1 {
            let fd = (tr.position[k + 1] - tr.position[k - 1]) / (tr.time[k + 1] - tr.time[k - 1]);
            assert!((fd - tr.velocity[k]).norm() < 0.05, "{k} {fd} {}", tr.velocity[k]);
            let fa = (tr.velocity[k + 1] - tr.velocity[k - 1]) / (tr.time[k + 1] - tr.time[k - 1]);
            assert!((fa - tr.acceleration[k]).norm() < 0.1, "{k} {fa} {}", tr.acceleration[k]);
        }
    }

    #[test]
    fn sample_reproduces_nodes() {
        let tr = climb_turn();
        for k in 0..tr.len() {
            let s = tr.sample(tr.time[k]).unwrap();
            assert_relative_eq!(s.position, tr.position[k], epsilon = 1e-12);
            assert_relative_eq!(s.velocity, tr.velocity[k], epsilon = 1e-12);
            assert_relative_eq!(s.aero_load, tr.aero_load[k], epsilon = 1e-10);
        }
        assert!(matches!(tr.sample(100.0), Err(Error::TrajectoryCoverage(_))));
    }

    #[test]
    fn perturbed_fit_keeps_kinematics() {
        let p = VehicleParams::default();
        let tr = climb_turn();
        let pert = tr.with_fit(&p, &AeroFit::DEGRADED);
        assert_eq!(tr.position, pert.position);
        assert_eq!(tr.acceleration, pert.acceleration);
        assert!(tr.aero_load.iter().zip(&pert.aero_load).any(|(a, b)| (a - b).norm() > 1e-3));
    }

    #[test]
    fn steady_tail_is_unaccelerated() {
        let p = VehicleParams::default();
        let tr = climb_turn();
        let ext = tr.with_steady_tail(tr.end_time() + 2.0, 0.05, &p).unwrap();
        assert!(ext.end_time() >= tr.end_time() + 2.0 - 1e-12);
        assert_eq!(ext.position[..tr.len()], tr.position[..]);
        for k in tr.len()..ext.len() {
            assert!(ext.acceleration[k].norm() < 1e-9);
            assert_relative_eq!(ext.velocity[k], tr.velocity[tr.len() - 1], epsilon = 1e-12);
        }
        let s = ext.sample(tr.end_time() + 1.0).unwrap();
        assert!(s.acceleration.norm() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let tr = climb_turn();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let back = ReferenceTrajectory::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.time, tr.time);
        assert_eq!(back.aero_load, tr.aero_load);
        for k in 0..tr.len() {
            assert_relative_eq!(back.lift[k], tr.lift[k], epsilon = 1e-9);
            assert_relative_eq!(back.drag[k], tr.drag[k], epsilon = 1e-9);
            assert_relative_eq!(back.speed[k], tr.speed[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn wrong_header_rejected() {
        let text = "t,a\n0,1\n";
        assert!(ReferenceTrajectory::read_csv(text.as_bytes()).is_err());
    }
}
