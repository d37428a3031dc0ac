//! Scalar identities behind the ultimate-bound argument, in terms of
//! `p = |e|`, `v = |e_d|` and the extreme gain eigenvalues.

/// Constants of the bound: mass, `alpha0`, `alpha1`, `min diag(K_P)`, `min diag(K_D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub mass: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub kp_min: f64,
    pub kd_min: f64,
}

impl BoundConstants {
    /// `c = alpha1 / (2 m kp_min)`.
    pub fn c(&self) -> f64 {
        self.alpha1 / (2.0 * self.mass * self.kp_min)
    }

    pub fn position_threshold(&self) -> f64 {
        self.alpha0 / (self.mass * self.kp_min)
    }

    /// Velocity threshold in the `eps -> 0` limit.
    pub fn velocity_threshold(&self) -> f64 {
        self.alpha0 / (self.mass * self.kd_min - self.alpha1)
    }

    /// Velocity threshold for a finite `eps`. The cross term `eps c a0 v / m`
    /// raises the limit value by the factor `1 + eps c`.
    pub fn velocity_threshold_eps(&self, eps: f64) -> f64 {
        self.velocity_threshold() * (1.0 + eps * self.c())
    }
}

/// Completing the square: returns both sides of
/// `p^2 - c2 p v = (p - c2 v / 2)^2 - c2^2 v^2 / 4`.
pub fn completed_square(p: f64, v: f64, c2: f64) -> (f64, f64) {
    (p * p - c2 * p * v, (p - 0.5 * c2 * v).powi(2) - 0.25 * c2 * c2 * v * v)
}

/// Upper bound on the Lyapunov derivative, regrouped in `x = p + c v`:
/// `eps (a0/m x - kp x^2) + (a0 (eps c + 1)/m v - (kd - a1/m) v^2)`.
pub fn derivative_bound(x: f64, v: f64, eps: f64, k: &BoundConstants) -> f64 {
    let m = k.mass;
    eps * (k.alpha0 / m * x - k.kp_min * x * x)
        + (k.alpha0 * (eps * k.c() + 1.0) / m * v - (k.kd_min - k.alpha1 / m) * v * v)
}

/// The same bound before regrouping, with the cross term `eps a1/m p v` explicit.
pub fn derivative_bound_expanded(p: f64, v: f64, eps: f64, k: &BoundConstants) -> f64 {
    let (m, c) = (k.mass, k.c());
    eps * k.alpha0 / m * p + 2.0 * eps * k.alpha0 * c / m * v + k.alpha0 / m * v
        - eps * k.kp_min * p * p
        - eps * k.alpha1 / m * p * v
        - eps * k.kp_min * c * c * v * v
        - (k.kd_min - k.alpha1 / m) * v * v
}

/// Lower bound on `|e|` implied by `x` reaching its threshold while `v` sits
/// at its threshold, and its closed form
/// `a0/(m kp) - a0 a1 / (2 m kp (m kd - a1))`.
pub fn position_floor(k: &BoundConstants) -> (f64, f64) {
    let chain = k.position_threshold() - k.c() * k.velocity_threshold();
    let closed = k.alpha0 / (k.mass * k.kp_min)
        - k.alpha0 * k.alpha1 / (2.0 * k.mass * k.kp_min * (k.mass * k.kd_min - k.alpha1));
    (chain, closed)
}
