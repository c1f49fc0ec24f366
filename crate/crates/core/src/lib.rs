//! Search-and-matching model of taste-based labor-market discrimination,
//! an event-driven simulator of the same economy, and a
//! difference-in-differences toolkit with state-clustered inference.
//!
//! The model and the estimators are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix `f64` for everyday use.

#![allow(clippy::needless_range_loop)]

pub mod econometrics;
pub mod error;
pub mod model;
pub mod scalar;
pub mod simulator;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Params = model::ModelParams<f64>;
pub type Distribution = model::DistributionSpec<f64>;
pub type Equilibrium = model::Equilibrium<f64>;
pub type SweepResult = model::SweepResult<f64>;
pub type Solver = model::SolverConfig<f64>;
pub type RegressionResult = econometrics::RegressionResult<f64>;
