use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::control::Gains;
use crate::{Error, Result};

/// Default `epsilon` of the canonical form, as a fraction of `min diag(K_D)`.
pub const DEFAULT_EPSILON_RATIO: f64 = 1e-3;

/// Quadratic Lyapunov candidate
/// `V = 1/2 e'Q1 e + 1/2 e_d'Q2 e_d + e'Q3 e_d` on the stacked error `[e, e_d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovForm {
    pub q1: Matrix3<f64>,
    pub q2: Matrix3<f64>,
    pub q3: Matrix3<f64>,
    pub epsilon: f64,
}

fn symmetric(m: &Matrix3<f64>) -> bool {
    (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
}

fn min_eigenvalue(m: Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}

impl LyapunovForm {
    pub fn new(q1: Matrix3<f64>, q2: Matrix3<f64>, q3: Matrix3<f64>, epsilon: f64) -> Result<Self> {
        let f = LyapunovForm { q1, q2, q3, epsilon };
        f.validate()?;
        Ok(f)
    }

    /// `Q2 = I`, `Q3 = eps I`, `Q1 = K_P + eps K_D`.
    pub fn canonical(gains: &Gains, epsilon: f64) -> Result<Self> {
        let kp = Matrix3::from_diagonal(&Vector3::from(gains.kp));
        let kd = Matrix3::from_diagonal(&Vector3::from(gains.kd));
        LyapunovForm::new(kp + kd * epsilon, Matrix3::identity(), Matrix3::identity() * epsilon, epsilon)
    }

    /// Canonical form with the default `epsilon`.
    pub fn canonical_default(gains: &Gains) -> Result<Self> {
        LyapunovForm::canonical(gains, default_epsilon(gains))
    }

    /// The `epsilon -> 0` limit, whose level sets are the reported ellipses.
    pub fn limit(gains: &Gains) -> Result<Self> {
        LyapunovForm::canonical(gains, 0.0)
    }

    /// Checks symmetry, `Q2 > 0` and the Schur complement `Q1 - Q3'Q2^-1 Q3 > 0`.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("Lyapunov epsilon must be >= 0");
        }
        let all = [self.q1, self.q2, self.q3];
        if all.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            return bad("Lyapunov matrices must be finite");
        }
        if !symmetric(&self.q1) || !symmetric(&self.q2) {
            return bad("Q1 and Q2 must be symmetric");
        }
        if min_eigenvalue(self.q2) <= 0.0 {
            return bad("Q2 must be positive definite");
        }
        let Some(q2_inv) = self.q2.try_inverse() else {
            return bad("Q2 must be invertible");
        };
        let schur = self.q1 - self.q3.transpose() * q2_inv * self.q3;
        if min_eigenvalue(0.5 * (schur + schur.transpose())) <= 0.0 {
            return bad("Schur complement Q1 - Q3'Q2^-1 Q3 must be positive definite");
        }
        Ok(())
    }

    /// The 6x6 matrix with `V = 1/2 z'Qz`.
    pub fn stacked(&self) -> Matrix6<f64> {
        let mut q = Matrix6::zeros();
        q.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.q1);
        q.fixed_view_mut::<3, 3>(0, 3).copy_from(&self.q3);
        q.fixed_view_mut::<3, 3>(3, 0).copy_from(&self.q3.transpose());
        q.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.q2);
        q
    }

    /// Smallest and largest eigenvalue of the stacked matrix.
    pub fn eigen_bounds(&self) -> (f64, f64) {
        let ev = self.stacked().symmetric_eigenvalues();
        (ev.min(), ev.max())
    }
}

pub fn default_epsilon(gains: &Gains) -> f64 {
    DEFAULT_EPSILON_RATIO * gains.kd.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `V(e, e_d)`.
pub fn lyapunov_value(position_error: &Vector3<f64>, velocity_error: &Vector3<f64>, form: &LyapunovForm) -> f64 {
    let (e, d) = (position_error, velocity_error);
    0.5 * e.dot(&(form.q1 * e)) + 0.5 * d.dot(&(form.q2 * d)) + e.dot(&(form.q3 * d))
}

/// Stacks position and velocity error.
pub fn stack(position_error: &Vector3<f64>, velocity_error: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(
        position_error[0],
        position_error[1],
        position_error[2],
        velocity_error[0],
        velocity_error[1],
        velocity_error[2],
    )
}

/// Outcome of the nominal gain condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NominalCheck {
    /// Gains are positive definite; `epsilon` satisfies `K_P > eps^2 I` and `K_D > eps I`.
    Pass { epsilon: f64 },
    Fail { reason: &'static str },
}

impl NominalCheck {
    pub fn passed(&self) -> bool {
        matches!(self, NominalCheck::Pass { .. })
    }
}

/// Nominal (zero-uncertainty) convergence condition on the position gains.
pub fn check_nominal(gains: &Gains) -> NominalCheck {
    let kp_min = gains.kp.iter().cloned().fold(f64::INFINITY, f64::min);
    let kd_min = gains.kd.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(kp_min > 0.0) {
        return NominalCheck::Fail { reason: "K_P is not positive definite" };
    }
    if !(kd_min > 0.0) {
        return NominalCheck::Fail { reason: "K_D is not positive definite" };
    }
    let epsilon = (DEFAULT_EPSILON_RATIO * kd_min).min(0.5 * kp_min.sqrt());
    NominalCheck::Pass { epsilon }
}
