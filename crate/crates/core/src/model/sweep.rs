//! Comparative statics over a grid of `d` or `λ_G`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::DistributionSpec;
use super::equilibrium::{mean_accepted_wage, solve_equilibrium, Equilibrium, SolverConfig};
use super::params::{ModelParams, WorkerType};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    D,
    LambdaG,
}

impl SweepParameter {
    pub fn apply<T: Scalar>(self, params: &ModelParams<T>, value: T) -> ModelParams<T> {
        match self {
            SweepParameter::D => params.with_d(value),
            SweepParameter::LambdaG => params.with_lambda_g(value),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::D => "d",
            SweepParameter::LambdaG => "lambda_g",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanWage,
    Unemployment,
    Participation,
    Segregation,
}

impl Metric {
    pub const ALL: [Metric; 4] =
        [Metric::MeanWage, Metric::Unemployment, Metric::Participation, Metric::Segregation];

    /// Direction predicted for the minority worker as the swept parameter
    /// rises. Segregation has no prediction for `λ_G`.
    pub fn predicted(self, parameter: SweepParameter) -> Option<Direction> {
        use Direction::*;
        match (parameter, self) {
            (SweepParameter::D, Metric::MeanWage) => Some(Nonincreasing),
            (SweepParameter::D, Metric::Unemployment) => Some(Nondecreasing),
            (SweepParameter::D, Metric::Participation) => Some(Nonincreasing),
            (SweepParameter::D, Metric::Segregation) => Some(Nondecreasing),
            (SweepParameter::LambdaG, Metric::MeanWage) => Some(Nondecreasing),
            (SweepParameter::LambdaG, Metric::Unemployment) => Some(Nonincreasing),
            (SweepParameter::LambdaG, Metric::Participation) => Some(Nondecreasing),
            (SweepParameter::LambdaG, Metric::Segregation) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub value: T,
    pub equilibrium: Option<Equilibrium<T>>,
    /// Mean accepted minority wage.
    pub mean_wage: Option<T>,
    pub error: Option<String>,
}

impl<T: Scalar> SweepPoint<T> {
    pub fn metric(&self, metric: Metric) -> Option<T> {
        let eq = self.equilibrium.as_ref()?;
        match metric {
            Metric::MeanWage => self.mean_wage,
            Metric::Unemployment => Some(eq.minority.unemployment_rate),
            Metric::Participation => Some(eq.minority.participation_rate),
            Metric::Segregation => eq.segregation_share,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityVerdict {
    pub metric: Metric,
    pub expected: Option<Direction>,
    pub nondecreasing: bool,
    pub nonincreasing: bool,
    /// Steps moving against `expected` by more than the tie band.
    pub violations: usize,
    /// `None` when there is no predicted direction.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub parameter: SweepParameter,
    pub grid: Vec<T>,
    pub points: Vec<SweepPoint<T>>,
    pub verdicts: Vec<MonotonicityVerdict>,
    pub failures: usize,
}

impl<T: Scalar> SweepResult<T> {
    /// Every predicted direction holds and every point solved.
    pub fn all_hold(&self) -> bool {
        self.failures == 0 && self.verdicts.iter().all(|v| v.holds != Some(false))
    }

    pub fn verdict(&self, metric: Metric) -> Option<&MonotonicityVerdict> {
        self.verdicts.iter().find(|v| v.metric == metric)
    }
}

pub fn validate_grid<T: Scalar>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidGrid("non-finite grid point".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evenly spaced grid with `points` entries from `start` to `stop`.
pub fn linspace<T: Scalar>(start: T, stop: T, points: usize) -> Vec<T> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / T::from_usize_lossy(n - 1);
            (0..n)
                .map(|i| if i == n - 1 { stop } else { start + step * T::from_usize_lossy(i) })
                .collect()
        }
    }
}

fn verdict<T: Scalar>(
    metric: Metric,
    parameter: SweepParameter,
    points: &[SweepPoint<T>],
    cfg: &SolverConfig<T>,
) -> MonotonicityVerdict {
    let series: Vec<T> = points.iter().filter_map(|p| p.metric(metric)).collect();
    let mut nondecreasing = true;
    let mut nonincreasing = true;
    let mut up_violations = 0;
    let mut down_violations = 0;
    for w in series.windows(2) {
        let band = cfg.tie_band(w[0].abs().max(w[1].abs()));
        let step = w[1] - w[0];
        if step < -band {
            nondecreasing = false;
            up_violations += 1;
        }
        if step > band {
            nonincreasing = false;
            down_violations += 1;
        }
    }
    let expected = metric.predicted(parameter);
    let violations = match expected {
        Some(Direction::Nondecreasing) => up_violations,
        Some(Direction::Nonincreasing) => down_violations,
        None => 0,
    };
    MonotonicityVerdict {
        metric,
        expected,
        nondecreasing,
        nonincreasing,
        violations,
        holds: expected.map(|_| violations == 0),
    }
}

/// Solves the equilibrium at every grid point and checks the predicted
/// directions for the minority worker. Points that fail to solve are kept
/// with their error and excluded from the verdicts.
pub fn comparative_statics_sweep<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    leisure: &DistributionSpec<T>,
    parameter: SweepParameter,
    grid: &[T],
    cfg: &SolverConfig<T>,
) -> Result<SweepResult<T>> {
    validate_grid(grid)?;
    for &value in grid {
        parameter.apply(params, value).validate()?;
    }
    let points: Vec<SweepPoint<T>> = grid
        .par_iter()
        .map(|&value| {
            let point_params = parameter.apply(params, value);
            let solved = solve_equilibrium(&point_params, productivity, leisure, cfg).map(|eq| {
                let w = mean_accepted_wage(WorkerType::Minority, &eq, productivity, &cfg.quad).ok();
                (eq, w)
            });
            match solved {
                Ok((eq, w)) => SweepPoint { value, equilibrium: Some(eq), mean_wage: w, error: None },
                Err(e) => SweepPoint { value, equilibrium: None, mean_wage: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let failures = points.iter().filter(|p| p.equilibrium.is_none()).count();
    let verdicts = Metric::ALL.iter().map(|&m| verdict(m, parameter, &points, cfg)).collect();
    Ok(SweepResult { parameter, grid: grid.to_vec(), points, verdicts, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_setup() -> (ModelParams<f64>, DistributionSpec<f64>, DistributionSpec<f64>) {
        (
            ModelParams::baseline(),
            DistributionSpec::Exponential { rate: 1.0 },
            DistributionSpec::Uniform { lower: 0.0, upper: 3.0 },
        )
    }

    #[test]
    fn single_point_is_vacuously_monotone() {
        let (params, g, q) = exp_setup();
        let r = comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[0.2], &SolverConfig::default()).unwrap();
        assert!(r.all_hold());
        assert!(r.verdicts.iter().all(|v| v.nondecreasing && v.nonincreasing));
    }

    #[test]
    fn d_grid_directions() {
        let (params, g, q) = exp_setup();
        let r = comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[0.0, 0.1, 0.2], &SolverConfig::default()).unwrap();
        assert!(r.all_hold(), "{:?}", r.verdicts);
        // Each point agrees with an independent solve.
        for p in &r.points {
            let eq = solve_equilibrium(&params.with_d(p.value), &g, &q, &SolverConfig::default()).unwrap();
            assert_eq!(p.equilibrium.unwrap(), eq);
        }
    }

    #[test]
    fn lambda_grid_directions() {
        let (params, g, q) = exp_setup();
        let r = comparative_statics_sweep(&params, &g, &q, SweepParameter::LambdaG, &[0.5, 1.0, 1.5], &SolverConfig::default()).unwrap();
        assert!(r.all_hold(), "{:?}", r.verdicts);
        assert_eq!(r.verdict(Metric::Segregation).unwrap().holds, None);
    }

    #[test]
    fn rejects_unsorted_and_invalid_grids() {
        let (params, g, q) = exp_setup();
        let cfg = SolverConfig::default();
        assert!(matches!(
            comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[0.2, 0.1], &cfg),
            Err(Error::InvalidGrid(_))
        ));
        assert!(comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[], &cfg).is_err());
        assert!(matches!(
            comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[-1.0, 0.1], &cfg),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn failed_points_are_flagged_not_fatal() {
        let (params, g, q) = exp_setup();
        let cfg = SolverConfig { max_iter: 2, ..SolverConfig::default() };
        let r = comparative_statics_sweep(&params, &g, &q, SweepParameter::D, &[0.0, 0.5], &cfg).unwrap();
        assert_eq!(r.failures, 2);
        assert!(r.points.iter().all(|p| p.error.is_some()));
        assert!(!r.all_hold());
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(0.2, 2.0, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[20], 2.0);
        validate_grid(&g).unwrap();
    }
}
