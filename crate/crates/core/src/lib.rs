mod error;

pub mod config;
pub mod control;
pub mod pipeline;
pub mod planner;
pub mod sim;
pub mod stability;
pub mod vehicle;

pub use error::{Error, Result};
