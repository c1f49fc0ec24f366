//! Steady-state search model with prejudiced employers.

pub mod distribution;
pub mod equilibrium;
pub mod params;
pub mod quadrature;
pub mod root;
pub mod sweep;

pub use distribution::{DistributionSpec, Role};
pub use equilibrium::{
    acceptance_threshold, employment_value, mean_accepted_wage, mean_accepted_wage_at,
    non_participation_value, reservation_rhs, segregation_share, solve_equilibrium,
    solve_reservation_value, unemployment_value, wage, Equilibrium, SolverConfig, WorkerOutcome,
};
pub use params::{FirmType, ModelParams, WorkerType};
pub use quadrature::QuadConfig;
pub use sweep::{comparative_statics_sweep, linspace, Direction, Metric, SweepParameter, SweepResult};

use crate::error::Result;
use crate::scalar::Scalar;

/// Leisure law uniform on `[0, multiple * v_S]`, with `v_S` the majority
/// reservation value under `params`. `v_S` does not depend on the leisure
/// law, so this is well defined before solving.
pub fn leisure_scaled_to_majority<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    multiple: T,
    cfg: &SolverConfig<T>,
) -> Result<DistributionSpec<T>> {
    params.validate()?;
    productivity.validate(Role::Productivity)?;
    let v_s = solve_reservation_value(params, productivity, WorkerType::Majority, cfg)?.value;
    let upper = multiple * v_s;
    let spec = DistributionSpec::Uniform { lower: T::zero(), upper };
    spec.validate(Role::Leisure)?;
    Ok(spec)
}

/// Default desk configuration: lognormal(0, 0.5) productivity, leisure
/// uniform on `[0, 3 v_S]`, baseline parameters.
pub fn desk_configuration() -> (ModelParams<f64>, DistributionSpec<f64>, DistributionSpec<f64>) {
    let params = ModelParams::baseline();
    let productivity = DistributionSpec::Lognormal { log_mean: 0.0, log_sd: 0.5 };
    let leisure = leisure_scaled_to_majority(&params, &productivity, 3.0, &SolverConfig::default())
        .expect("baseline calibration is valid");
    (params, productivity, leisure)
}

/// Recovery-experiment configuration: the desk productivity law with
/// stronger prejudice (`d = 1`) and leisure uniform on `[0, 2 v_S]`. The
/// desk configuration cannot move the minority both-working probability by
/// more than about half a point; this one reaches about three points.
pub fn pipeline_configuration() -> (ModelParams<f64>, DistributionSpec<f64>, DistributionSpec<f64>) {
    let params = ModelParams { d: 1.0, ..ModelParams::baseline() };
    let productivity = DistributionSpec::Lognormal { log_mean: 0.0, log_sd: 0.5 };
    let leisure = leisure_scaled_to_majority(&params, &productivity, 2.0, &SolverConfig::default())
        .expect("pipeline calibration is valid");
    (params, productivity, leisure)
}
