use nalgebra::{Vector3, Vector4};
use std::io::{Read, Write};

use crate::control::{OuterLoopCommand, RotorCommand};
use crate::vehicle::RigidBodyState;
use crate::{Error, Result};

/// Column schema of [`SimLog::write_csv`].
pub const LOG_HEADER: [&str; 46] = [
    "t", "x", "y", "z", "phi", "theta", "psi", "u", "v", "w", "p", "q", "r", "T_c", "phi_c", "theta_c", "psi_c",
    "ax_c", "ay_c", "az_c", "held", "roll_limited", "w1", "w2", "w3", "w4", "clamped_low", "clamped_high", "FAx",
    "FAy", "FAz", "FAx_ff", "FAy_ff", "FAz_ff", "ex", "ey", "ez", "exd", "eyd", "ezd", "dFA", "x_d", "y_d", "z_d",
    "saturated", "speed",
];

/// Closed-loop record sampled at the outer-loop rate.
///
/// Each row holds the plant state at an outer-loop instant and the commands
/// computed from it, which are then held until the next instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimLog {
    pub time: Vec<f64>,
    pub states: Vec<RigidBodyState>,
    pub commands: Vec<OuterLoopCommand>,
    pub rotors: Vec<RotorCommand>,
    /// Plant aerodynamic load in the inversion's sign convention.
    pub aero_load: Vec<Vector3<f64>>,
    /// Load the controller assumed.
    pub feedforward: Vec<Vector3<f64>>,
    pub reference: Vec<Vector3<f64>>,
    pub position_error: Vec<Vector3<f64>>,
    pub velocity_error: Vec<Vector3<f64>>,
    /// `|F_A* - F_A|`
    pub load_error: Vec<f64>,
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

/// Max and RMS of the position and velocity error norms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSummary {
    pub rms_position: f64,
    pub max_position: f64,
    pub rms_velocity: f64,
    pub max_velocity: f64,
    pub saturated_samples: usize,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn rms_position_error(&self) -> f64 {
        rms(self.position_error.iter().map(|e| e.norm()))
    }

    pub fn rms_velocity_error(&self) -> f64 {
        rms(self.velocity_error.iter().map(|e| e.norm()))
    }

    /// RMS position error over samples with `t0 <= t <= t1`.
    pub fn rms_position_error_within(&self, t0: f64, t1: f64) -> f64 {
        rms(self
            .time
            .iter()
            .zip(&self.position_error)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(_, e)| e.norm()))
    }

    pub fn max_position_error(&self) -> f64 {
        self.position_error.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn max_velocity_error(&self) -> f64 {
        self.velocity_error.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> ErrorSummary {
        ErrorSummary {
            rms_position: self.rms_position_error(),
            max_position: self.max_position_error(),
            rms_velocity: self.rms_velocity_error(),
            max_velocity: self.max_velocity_error(),
            saturated_samples: self.rotors.iter().filter(|r| r.saturated()).count(),
        }
    }

    pub(crate) fn push(&mut self, row: LogRow) {
        self.time.push(row.time);
        self.states.push(row.state);
        self.commands.push(row.command);
        self.rotors.push(row.rotors);
        self.aero_load.push(row.aero_load);
        self.feedforward.push(row.feedforward);
        self.reference.push(row.reference);
        self.position_error.push(row.position_error);
        self.velocity_error.push(row.velocity_error);
        self.load_error.push((row.feedforward - row.aero_load).norm());
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(LOG_HEADER)?;
        for k in 0..self.len() {
            let c = &self.commands[k];
            let r = &self.rotors[k];
            let mut row = vec![self.time[k]];
            row.extend(self.states[k].to_array());
            row.push(c.thrust);
            row.extend(c.attitude.iter());
            row.extend(c.accel_cmd.iter());
            row.push(f64::from(u8::from(c.held)));
            row.push(f64::from(u8::from(c.roll_limited)));
            row.extend(r.speeds.iter());
            row.push(f64::from(r.clamped_low));
            row.push(f64::from(r.clamped_high));
            for v in [&self.aero_load[k], &self.feedforward[k], &self.position_error[k], &self.velocity_error[k]] {
                row.extend(v.iter());
            }
            row.push(self.load_error[k]);
            row.extend(self.reference[k].iter());
            row.push(f64::from(u8::from(r.saturated())));
            row.push(self.states[k].velocity.norm());
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<SimLog> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.iter().ne(LOG_HEADER.iter().copied()) {
            return Err(Error::InvalidParameter("unexpected simulation log header".into()));
        }
        let mut log = SimLog::default();
        for rec in r.records() {
            let rec = rec?;
            let v: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidParameter(format!("bad number in simulation log: {e}")))?;
            let vec3 = |i: usize| Vector3::new(v[i], v[i + 1], v[i + 2]);
            log.time.push(v[0]);
            log.states.push(RigidBodyState {
                position: vec3(1),
                attitude: vec3(4),
                velocity: vec3(7),
                rates: vec3(10),
            });
            log.commands.push(OuterLoopCommand {
                thrust: v[13],
                attitude: vec3(14),
                accel_cmd: vec3(17),
                held: v[20] != 0.0,
                roll_limited: v[21] != 0.0,
            });
            log.rotors.push(RotorCommand {
                speeds: Vector4::new(v[22], v[23], v[24], v[25]),
                clamped_low: v[26] as u8,
                clamped_high: v[27] as u8,
            });
            log.aero_load.push(vec3(28));
            log.feedforward.push(vec3(31));
            log.position_error.push(vec3(34));
            log.velocity_error.push(vec3(37));
            log.load_error.push(v[40]);
            log.reference.push(vec3(41));
        }
        Ok(log)
    }
}

pub(crate) struct LogRow {
    pub time: f64,
    pub state: RigidBodyState,
    pub command: OuterLoopCommand,
    pub rotors: RotorCommand,
    pub aero_load: Vector3<f64>,
    pub feedforward: Vector3<f64>,
    pub reference: Vector3<f64>,
    pub position_error: Vector3<f64>,
    pub velocity_error: Vector3<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> SimLog {
        let mut log = SimLog::default();
        for k in 0..5 {
            let t = k as f64 * 0.01;
            log.push(LogRow {
                time: t,
                state: RigidBodyState {
                    position: Vector3::new(t, -t, 1.0 / 3.0),
                    attitude: Vector3::new(-1.5, 0.01, 0.0),
                    ..Default::default()
                },
                command: OuterLoopCommand { thrust: 88.9, held: k == 2, ..Default::default() },
                rotors: RotorCommand { speeds: Vector4::repeat(400.0 + t), clamped_low: 1, clamped_high: 0 },
                aero_load: Vector3::new(0.0, 1.0, 2.0),
                feedforward: Vector3::new(0.0, 1.5, 2.0 + t),
                reference: Vector3::zeros(),
                position_error: Vector3::new(0.0, 3.0, 4.0),
                velocity_error: Vector3::new(0.0, 0.0, t),
            });
        }
        log
    }

    #[test]
    fn load_error_is_norm_of_difference() {
        let log = sample_log();
        for k in 0..log.len() {
            assert_eq!(log.load_error[k], (log.feedforward[k] - log.aero_load[k]).norm());
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let log = sample_log();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = SimLog::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn summary_metrics() {
        let log = sample_log();
        let s = log.summary();
        assert!((s.rms_position - 5.0).abs() < 1e-12);
        assert_eq!(s.max_position, 5.0);
        assert_eq!(s.saturated_samples, 5);
        assert!((s.max_velocity - 0.04).abs() < 1e-15);
    }

    #[test]
    fn empty_log_has_zero_metrics() {
        assert_eq!(SimLog::default().summary(), ErrorSummary::default());
    }
}
