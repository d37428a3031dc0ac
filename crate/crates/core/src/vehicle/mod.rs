//! The truth plant: 6DOF rigid-body dynamics with thrust, gravity and
//! rotor-wake-coupled aerodynamics.

pub mod aero;
pub mod dynamics;
pub mod frames;
mod params;

pub use aero::{aero_forces_moments, drag_coefficient, effective_aoa, lift_coefficient, rotor_wake, AeroState};
pub use dynamics::{hover_trim, rotor_wrench, state_derivative, HoverTrim, RigidBodyState, StateDerivative};
pub use params::{AeroFit, Environment, VehicleParams};
