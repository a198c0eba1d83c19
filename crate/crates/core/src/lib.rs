pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod greenfn;
pub mod langevin;
pub mod noise;
pub mod output;
pub mod params;
pub mod potential;
pub mod rng;
pub mod state;
pub mod wigner;

pub use error::{Error, Result};
pub use params::PhysicalParams;
pub use potential::Potential;
pub use state::{PhaseState, TimeGrid, Trajectory};
