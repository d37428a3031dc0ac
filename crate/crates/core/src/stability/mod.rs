//! Lyapunov analysis of the position loop: nominal convergence, the
//! load-error bound fitted from simulation, and the resulting ultimate bound.

pub mod identities;
mod bound;
mod invariant;
mod lyapunov;

pub use bound::{fit_uncertainty_bound, UncertaintyBound, MIN_SAMPLES};
pub use invariant::{
    check_decrease_outside, compute_invariant_set, verify_containment, ContainmentReport, ContainmentSample,
    DecreaseReport, InvariantSet,
};
pub use lyapunov::{
    check_nominal, default_epsilon, lyapunov_value, stack, LyapunovForm, NominalCheck, DEFAULT_EPSILON_RATIO,
};
