use serde::Serialize;

use super::bound::UncertaintyBound;
use super::lyapunov::{lyapunov_value, LyapunovForm};
use crate::control::Gains;
use crate::sim::SimLog;
use crate::{Error, Result};

fn min3(v: &[f64; 3]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn max3(v: &[f64; 3]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Ultimate bound on the tracking error under a bounded load error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantSet {
    pub v_lim: f64,
    /// Denominator of the position-error ellipse, `2 V_lim / min diag(K_P)`, m^2.
    pub position_axis_sq: f64,
    /// Denominator of the velocity-error ellipse, `2 V_lim`, m^2/s^2.
    pub velocity_axis_sq: f64,
    pub kp_min: f64,
    pub kp_max: f64,
    pub kd_min: f64,
    pub mass: f64,
    pub alpha0: f64,
    pub alpha1: f64,
}

impl InvariantSet {
    pub fn position_semi_axis(&self) -> f64 {
        self.position_axis_sq.sqrt()
    }

    pub fn velocity_semi_axis(&self) -> f64 {
        self.velocity_axis_sq.sqrt()
    }

    /// Position error beyond which the Lyapunov derivative is negative.
    pub fn position_threshold(&self) -> f64 {
        self.alpha0 / (self.mass * self.kp_min)
    }

    /// Velocity error beyond which the Lyapunov derivative is negative.
    pub fn velocity_threshold(&self) -> f64 {
        self.alpha0 / (self.mass * self.kd_min - self.alpha1)
    }

    /// Whether `(|e|, |e_d|)` lies inside both ellipses.
    pub fn contains(&self, position_error: f64, velocity_error: f64) -> bool {
        position_error * position_error <= self.position_axis_sq && velocity_error * velocity_error <= self.velocity_axis_sq
    }
}

/// `V_lim = max(sigma_max(K_P), 1) (a0^2 / (m^2 sigma_min(K_P)^2) + a0^2 / (m sigma_min(K_D) - a1)^2)`.
///
/// Fails when the damping cannot dominate the velocity-proportional part of
/// the load error, `m min diag(K_D) <= alpha1`.
pub fn compute_invariant_set(gains: &Gains, bound: &UncertaintyBound, mass: f64) -> Result<InvariantSet> {
    gains.validate()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
    }
    let (kp_min, kp_max, kd_min) = (min3(&gains.kp), max3(&gains.kp), min3(&gains.kd));
    let (a0, a1) = (bound.alpha0, bound.alpha1);
    if !(a0 >= 0.0 && a1 >= 0.0) {
        return Err(Error::InvalidParameter("uncertainty bound coefficients must be >= 0".into()));
    }
    let damping = mass * kd_min;
    if damping <= a1 {
        return Err(Error::RobustConditionViolated { required: a1 / mass, actual: kd_min });
    }
    let v_lim = kp_max.max(1.0) * (a0 * a0 / (mass * mass * kp_min * kp_min) + a0 * a0 / (damping - a1).powi(2));
    Ok(InvariantSet {
        v_lim,
        position_axis_sq: 2.0 * v_lim / kp_min,
        velocity_axis_sq: 2.0 * v_lim,
        kp_min,
        kp_max,
        kd_min,
        mass,
        alpha0: a0,
        alpha1: a1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContainmentSample {
    pub time: f64,
    pub value: f64,
    pub position_error: f64,
    pub velocity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    /// First time `V` drops to `V_lim` or below.
    pub entry_time: Option<f64>,
    /// Samples after entry with `V > V_lim (1 + tol)`.
    pub violations: Vec<ContainmentSample>,
    pub max_after_entry: f64,
    pub trace: Vec<ContainmentSample>,
}

impl ContainmentReport {
    pub fn entered(&self) -> bool {
        self.entry_time.is_some()
    }

    /// Entered the set and never left it.
    pub fn contained(&self) -> bool {
        self.entered() && self.violations.is_empty()
    }
}

fn trace(log: &SimLog, form: &LyapunovForm) -> Vec<ContainmentSample> {
    (0..log.len())
        .map(|k| {
            let (e, d) = (&log.position_error[k], &log.velocity_error[k]);
            ContainmentSample {
                time: log.time[k],
                value: lyapunov_value(e, d, form),
                position_error: e.norm(),
                velocity_error: d.norm(),
            }
        })
        .collect()
}

/// Follows `V` along a logged run and checks it stays below `V_lim (1 + tol)`
/// once it has first reached `V_lim`.
pub fn verify_containment(log: &SimLog, set: &InvariantSet, form: &LyapunovForm, tol: f64) -> ContainmentReport {
    let trace = trace(log, form);
    let entry = trace.iter().position(|s| s.value <= set.v_lim);
    let ceiling = set.v_lim * (1.0 + tol);
    let after = entry.map_or(&trace[..0], |k| &trace[k..]);
    ContainmentReport {
        entry_time: entry.map(|k| trace[k].time),
        violations: after.iter().filter(|s| s.value > ceiling).copied().collect(),
        max_after_entry: after.iter().map(|s| s.value).fold(0.0, f64::max),
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport {
    /// Sample pairs that started beyond both thresholds plus margins.
    pub checked: usize,
    /// Start times of pairs where `V` did not decrease.
    pub violations: Vec<f64>,
}

/// Checks `V` decreases between consecutive samples whenever the position
/// and velocity errors exceed their thresholds by `margins`.
pub fn check_decrease_outside(log: &SimLog, set: &InvariantSet, form: &LyapunovForm, margins: (f64, f64), tol: f64) -> DecreaseReport {
    let trace = trace(log, form);
    let (pt, vt) = (set.position_threshold() + margins.0, set.velocity_threshold() + margins.1);
    let mut report = DecreaseReport { checked: 0, violations: Vec::new() };
    for w in trace.windows(2) {
        if w[0].position_error >= pt && w[0].velocity_error >= vt {
            report.checked += 1;
            if w[1].value - w[0].value >= tol {
                report.violations.push(w[0].time);
            }
        }
    }
    report
}
