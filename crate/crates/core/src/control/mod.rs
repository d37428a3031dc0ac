//! Cascaded flight control: position loop, attitude loop and rotor mixer.

mod allocation;
mod cascade;
mod filter;
mod gains;
mod inner;
mod outer;

pub use allocation::{allocate, mixing_matrix, Allocator, RotorCommand};
pub use cascade::{CascadeController, ControlRates};
pub use filter::AttitudeReferenceFilter;
pub use gains::{Gains, INNER_OMEGA_N, INNER_ZETA};
pub use inner::{attitude_inner_loop, AttitudeReference};
pub use outer::{required_thrust_vector, OuterLoop, OuterLoopCommand, ReferenceSample};
