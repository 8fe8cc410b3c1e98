//! Simulator for short-range electromagnetic underwater sensor networks.

pub mod clustering;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod output;
pub mod physics;
pub mod rng;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
