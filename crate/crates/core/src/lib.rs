//! Optimal campaign control for SIS and SIR information epidemics.

pub mod abm;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod model;
pub mod problem;
pub mod profiles;
mod simplex;
pub mod sir;
pub mod sis;
pub mod solver;
pub mod strategies;

pub use error::{Error, Result};
pub use integrator::{ControlGrid, TimeGrid, Trajectory};
pub use problem::{ControlProblem, Controls};
pub use profiles::{BetaProfile, RateProfile};
pub use sir::SirParams;
pub use sis::SisParams;
pub use solver::{Method, Solution, SolverOptions};
pub use model::{AnySolution, Model};
pub use strategies::Strategy;
