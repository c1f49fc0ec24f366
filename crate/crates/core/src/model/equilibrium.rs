//! Steady-state equilibrium of the search economy with prejudiced employers.

use serde::{Deserialize, Serialize};

use super::distribution::{DistributionSpec, Role};
use super::params::{FirmType, ModelParams, WorkerType};
use super::quadrature::QuadConfig;
use super::root::{bisect, secant_polish};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    /// Relative width at which bisection stops.
    pub rel_tol: T,
    /// Accepted `|v - rhs(v)|`, scaled by `max(1, |v|)`.
    pub residual_tol: T,
    pub max_iter: usize,
    pub polish: bool,
    pub quad: QuadConfig<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        SolverConfig {
            rel_tol: T::lit(1e-10).max(eps * T::lit(4.0)),
            residual_tol: T::lit(1e-12).max(eps * T::lit(64.0)),
            max_iter: 400,
            polish: true,
            quad: QuadConfig::default(),
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    /// Tie band for monotonicity verdicts: ten times the solver tolerance.
    pub fn tie_band(&self, scale: T) -> T {
        T::lit(10.0) * self.rel_tol.max(self.residual_tol) * scale.abs().max(T::one())
    }
}

/// Steady-state outcomes for one worker type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerOutcome<T> {
    pub worker: WorkerType,
    /// Flow value of unemployment `ρU`.
    pub reservation_value: T,
    pub unemployment_rate: T,
    pub participation_rate: T,
    /// `l (1 - u)`: share of the population employed.
    pub employment_share: T,
    /// Probability a meeting with a prejudiced firm turns into a match.
    pub acceptance_prejudiced: T,
    pub acceptance_unprejudiced: T,
    /// Set when no meeting can ever produce a match; `u = 1` then.
    pub no_acceptable_matches: bool,
    /// True when the value was set without iterating (zero arrival or zero
    /// bargaining weight).
    pub analytic: bool,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Scalar> WorkerOutcome<T> {
    pub fn acceptance(&self, firm: FirmType) -> T {
        match firm {
            FirmType::Prejudiced => self.acceptance_prejudiced,
            FirmType::Unprejudiced => self.acceptance_unprejudiced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium<T> {
    pub params: ModelParams<T>,
    pub minority: WorkerOutcome<T>,
    pub majority: WorkerOutcome<T>,
    /// Share of employed minority workers at unprejudiced firms. `None` when
    /// minority workers would reject every meeting.
    pub segregation_share: Option<T>,
}

impl<T: Scalar> Equilibrium<T> {
    pub fn worker(&self, worker: WorkerType) -> &WorkerOutcome<T> {
        match worker {
            WorkerType::Minority => &self.minority,
            WorkerType::Majority => &self.majority,
        }
    }

    pub fn reservation_value(&self, worker: WorkerType) -> T {
        self.worker(worker).reservation_value
    }

    pub fn max_residual(&self) -> T {
        self.minority.residual.abs().max(self.majority.residual.abs())
    }
}

/// Right-hand side of the reservation-value condition,
/// `b + λα/(ρ+η) [p PE(v + d_J) + (1-p) PE(v)]`.
pub fn reservation_rhs<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    v: T,
    worker: WorkerType,
    quad: &QuadConfig<T>,
) -> Result<T> {
    if !v.is_finite() {
        return Err(Error::NonFinite("candidate reservation value"));
    }
    let factor = params.surplus_factor(worker);
    if factor == T::zero() {
        return Ok(params.b);
    }
    let mut surplus = T::zero();
    for firm in FirmType::ALL {
        let share = params.firm_share(firm);
        if share > T::zero() {
            let threshold = v + params.disutility(worker, firm);
            surplus += share * productivity.partial_expectation(threshold, quad)?;
        }
    }
    Ok(params.b + factor * surplus)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservationSolution<T> {
    pub value: T,
    pub iterations: usize,
    pub residual: T,
    pub analytic: bool,
}

/// Solves `v = reservation_rhs(v)` on the bracket `[b, rhs(b)]`.
pub fn solve_reservation_value<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    worker: WorkerType,
    cfg: &SolverConfig<T>,
) -> Result<ReservationSolution<T>> {
    if params.surplus_factor(worker) == T::zero() {
        return Ok(ReservationSolution {
            value: params.b,
            iterations: 0,
            residual: T::zero(),
            analytic: true,
        });
    }
    let gap = |v: T| reservation_rhs(params, productivity, v, worker, &cfg.quad).map(|r| r - v);
    let lo = params.b;
    let hi = reservation_rhs(params, productivity, lo, worker, &cfg.quad)?;
    if hi < lo {
        return Err(Error::ContractViolation(
            "reservation_rhs(b) < b; partial expectations must be nonnegative".into(),
        ));
    }
    let (start, bracket) = bisect(gap, lo, hi, cfg.rel_tol, cfg.max_iter)?;
    let sol = if cfg.polish {
        secant_polish(gap, bracket, start, T::epsilon(), 60)?
    } else {
        start
    };
    let scale = sol.root.abs().max(T::one());
    if sol.value.abs() > cfg.residual_tol * scale {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual: sol.value.abs().as_f64(),
        });
    }
    Ok(ReservationSolution {
        value: sol.root,
        iterations: sol.iterations,
        residual: sol.value,
        analytic: false,
    })
}

fn worker_outcome<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    leisure: &DistributionSpec<T>,
    worker: WorkerType,
    cfg: &SolverConfig<T>,
) -> Result<WorkerOutcome<T>> {
    let sol = solve_reservation_value(params, productivity, worker, cfg)?;
    let v = sol.value;
    let acceptance_prejudiced =
        productivity.survival(v + params.disutility(worker, FirmType::Prejudiced));
    let acceptance_unprejudiced = productivity.survival(v);
    let weighted =
        params.p * acceptance_prejudiced + (T::one() - params.p) * acceptance_unprejudiced;
    let lambda = params.arrival_rate(worker);
    let unemployment_rate = params.eta / (params.eta + lambda * weighted);
    let participation_rate = leisure.cdf(v);
    Ok(WorkerOutcome {
        worker,
        reservation_value: v,
        unemployment_rate,
        participation_rate,
        employment_share: participation_rate * (T::one() - unemployment_rate),
        acceptance_prejudiced,
        acceptance_unprejudiced,
        no_acceptable_matches: weighted == T::zero(),
        analytic: sol.analytic,
        iterations: sol.iterations,
        residual: sol.residual,
    })
}

/// Solves the steady state for both worker types.
pub fn solve_equilibrium<T: Scalar>(
    params: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    leisure: &DistributionSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<Equilibrium<T>> {
    params.validate()?;
    productivity.validate(Role::Productivity)?;
    leisure.validate(Role::Leisure)?;
    let minority = worker_outcome(params, productivity, leisure, WorkerType::Minority, cfg)?;
    let majority = worker_outcome(params, productivity, leisure, WorkerType::Majority, cfg)?;
    let mut eq = Equilibrium { params: *params, minority, majority, segregation_share: None };
    eq.segregation_share = segregation_share(&eq, productivity).ok();
    Ok(eq)
}

/// Lowest productivity a (worker, firm) meeting accepts: `v_J + d_J`.
pub fn acceptance_threshold<T: Scalar>(worker: WorkerType, firm: FirmType, eq: &Equilibrium<T>) -> T {
    eq.reservation_value(worker) + eq.params.disutility(worker, firm)
}

/// Nash-bargained wage `α(x - d_J) + (1 - α) v_J` on an acceptable match.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn wage<T: Scalar>(x: T, worker: WorkerType, firm: FirmType, eq: &Equilibrium<T>) -> Result<T> {
    let threshold = acceptance_threshold(worker, firm, eq);
    if !(x >= threshold) {
        return Err(Error::ContractViolation(format!(
            "productivity {x} below acceptance threshold {threshold} for {}/{}",
            worker.label(),
            firm.label()
        )));
    }
    let alpha = eq.params.alpha;
    let v = eq.reservation_value(worker);
    Ok(alpha * (x - eq.params.disutility(worker, firm)) + (T::one() - alpha) * v)
}

/// Present value of staying out of the labor force, `z / ρ`.
pub fn non_participation_value<T: Scalar>(z: T, params: &ModelParams<T>) -> T {
    z / params.rho
}

/// Present value of unemployment, `U_J = v_J / ρ`.
pub fn unemployment_value<T: Scalar>(worker: WorkerType, eq: &Equilibrium<T>) -> T {
    eq.reservation_value(worker) / eq.params.rho
}

/// Present value of a job paying `w`, `(w + η U_J) / (ρ + η)`.
pub fn employment_value<T: Scalar>(w: T, worker: WorkerType, eq: &Equilibrium<T>) -> T {
    let params = &eq.params;
    (w + params.eta * unemployment_value(worker, eq)) / (params.rho + params.eta)
}

/// Share of matched minority workers employed by unprejudiced firms.
pub fn segregation_share<T: Scalar>(eq: &Equilibrium<T>, productivity: &DistributionSpec<T>) -> Result<T> {
    let p = eq.params.p;
    let v = eq.minority.reservation_value;
    let at_unprejudiced = (T::one() - p) * productivity.survival(v);
    let at_prejudiced = p * productivity.survival(v + eq.params.d);
    let total = at_prejudiced + at_unprejudiced;
    if total <= T::zero() {
        return Err(Error::NoEmployment);
    }
    Ok(at_unprejudiced / total)
}

/// Mean wage over accepted meetings, mixing firm types by their share of
/// matches. Uses `E[x - c | x >= c] = PE(c) / S(c)`, so the result is
/// `v + α Σ_I w_I PE(c_I) / Σ_I w_I S(c_I)`.
pub fn mean_accepted_wage<T: Scalar>(
    worker: WorkerType,
    eq: &Equilibrium<T>,
    productivity: &DistributionSpec<T>,
    quad: &QuadConfig<T>,
) -> Result<T> {
    let params = &eq.params;
    let mut surplus = T::zero();
    let mut mass = T::zero();
    for firm in FirmType::ALL {
        let share = params.firm_share(firm);
        if share == T::zero() {
            continue;
        }
        let threshold = acceptance_threshold(worker, firm, eq);
        surplus += share * productivity.partial_expectation(threshold, quad)?;
        mass += share * productivity.survival(threshold);
    }
    if mass <= T::zero() {
        return Err(Error::NoEmployment);
    }
    Ok(eq.reservation_value(worker) + params.alpha * surplus / mass)
}

/// Mean accepted wage at one firm type.
pub fn mean_accepted_wage_at<T: Scalar>(
    worker: WorkerType,
    firm: FirmType,
    eq: &Equilibrium<T>,
    productivity: &DistributionSpec<T>,
    quad: &QuadConfig<T>,
) -> Result<T> {
    let threshold = acceptance_threshold(worker, firm, eq);
    let survival = productivity.survival(threshold);
    if survival <= T::zero() {
        return Err(Error::NoEmployment);
    }
    let pe = productivity.partial_expectation(threshold, quad)?;
    Ok(eq.reservation_value(worker) + eq.params.alpha * pe / survival)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from a 40-digit bisection on the closed-form exponential
    // condition v = 0.4 + (0.5/0.15)[0.3 e^{-(v+0.2)} + 0.7 e^{-v}].
    const V_G: f64 = 1.278_077_698_341_023;
    const V_S: f64 = 1.304_426_757_466_091_7;
    const U_G: f64 = 0.275_161_216_645_530_67;
    const P_GN: f64 = 0.740_255_676_714_326_5;

    fn exp_setup() -> (ModelParams<f64>, DistributionSpec<f64>, DistributionSpec<f64>) {
        (
            ModelParams::baseline(),
            DistributionSpec::Exponential { rate: 1.0 },
            DistributionSpec::Uniform { lower: 0.0, upper: 3.0 },
        )
    }

    /// Plain bisection on the hand-expanded exponential condition; shares
    /// nothing with the library solver.
    fn oracle_minority(params: &ModelParams<f64>) -> f64 {
        let k = params.lambda_g * params.alpha / (params.rho + params.eta);
        let f = |v: f64| {
            params.b + k * (params.p * (-(v + params.d)).exp() + (1.0 - params.p) * (-v).exp()) - v
        };
        let (mut lo, mut hi) = (params.b, params.b + k);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn exponential_matches_bisection_oracle() {
        let (params, g, q) = exp_setup();
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        assert!((eq.minority.reservation_value - oracle_minority(&params)).abs() < 1e-8);
        assert!((eq.minority.reservation_value - V_G).abs() < 1e-12);
        assert!((eq.majority.reservation_value - V_S).abs() < 1e-12);
        assert!((eq.minority.unemployment_rate - U_G).abs() < 1e-12);
        assert!((eq.minority.participation_rate - V_G / 3.0).abs() < 1e-12);
        assert!((eq.segregation_share.unwrap() - P_GN).abs() < 1e-12);
        assert!(eq.max_residual() < 1e-12);
    }

    #[test]
    fn rhs_closed_form_at_b() {
        let (params, g, _) = exp_setup();
        let quad = QuadConfig::default();
        let got = reservation_rhs(&params, &g, params.b, WorkerType::Minority, &quad).unwrap();
        let k = 0.5 / 0.15;
        let want = 0.4 + k * (0.3 * (-(0.4f64 + 0.2)).exp() + 0.7 * (-0.4f64).exp());
        assert!((got - want).abs() < 1e-14);
        assert!((got - 2.512_891_743_510_518_2).abs() < 1e-13);
    }

    #[test]
    fn rhs_trivial_cases() {
        let (params, g, _) = exp_setup();
        let quad = QuadConfig::default();
        let silent = params.with_lambda_g(0.0);
        assert_eq!(reservation_rhs(&silent, &g, 7.0, WorkerType::Minority, &quad).unwrap(), params.b);
        let fair = params.with_d(0.0);
        for v in [0.0, 0.5, 1.3] {
            let a = reservation_rhs(&fair, &g, v, WorkerType::Minority, &quad).unwrap();
            let b = reservation_rhs(&fair, &g, v, WorkerType::Majority, &quad).unwrap();
            assert_eq!(a, b);
        }
        assert!(reservation_rhs(&params, &g, f64::NAN, WorkerType::Majority, &quad).is_err());
    }

    #[test]
    fn no_meetings() {
        let (params, g, q) = exp_setup();
        let params = ModelParams { lambda_g: 0.0, lambda_s: 0.0, ..params };
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        for w in WorkerType::ALL {
            let o = eq.worker(w);
            assert_eq!(o.reservation_value, params.b);
            assert_eq!(o.unemployment_rate, 1.0);
            assert_eq!(o.participation_rate, q.cdf(params.b));
            assert!(o.analytic);
        }
    }

    #[test]
    fn symmetric_when_fair() {
        let (params, g, q) = exp_setup();
        let eq = solve_equilibrium(&params.with_d(0.0), &g, &q, &SolverConfig::default()).unwrap();
        assert_eq!(eq.minority.reservation_value, eq.majority.reservation_value);
        assert_eq!(eq.minority.unemployment_rate, eq.majority.unemployment_rate);
        assert_eq!(eq.minority.participation_rate, eq.majority.participation_rate);
        assert!((eq.segregation_share.unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn all_rejection_is_legal_with_flag() {
        let params = ModelParams { b: 1.5, ..ModelParams::baseline() };
        let g = DistributionSpec::Uniform { lower: 0.0, upper: 1.0 };
        let q = DistributionSpec::Uniform { lower: 0.0, upper: 3.0 };
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        assert!(eq.minority.no_acceptable_matches);
        assert_eq!(eq.minority.unemployment_rate, 1.0);
        assert_eq!(eq.minority.reservation_value, 1.5);
        assert!(eq.segregation_share.is_none());
        assert_eq!(segregation_share(&eq, &g), Err(Error::NoEmployment));
        assert_eq!(mean_accepted_wage(WorkerType::Minority, &eq, &g, &QuadConfig::default()), Err(Error::NoEmployment));
    }

    #[test]
    fn thresholds_and_wages() {
        let (params, g, q) = exp_setup();
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        let t = acceptance_threshold(WorkerType::Minority, FirmType::Prejudiced, &eq);
        assert!((t - (V_G + 0.2)).abs() < 1e-12);
        for firm in FirmType::ALL {
            assert_eq!(acceptance_threshold(WorkerType::Majority, firm, &eq), eq.majority.reservation_value);
        }
        assert!(wage(t - 1e-9, WorkerType::Minority, FirmType::Prejudiced, &eq).is_err());
        let w = wage(t, WorkerType::Minority, FirmType::Prejudiced, &eq).unwrap();
        assert!((w - eq.minority.reservation_value).abs() < 1e-12);
    }

    #[test]
    fn wage_arithmetic() {
        let (params, g, q) = exp_setup();
        let mut eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        eq.minority.reservation_value = 1.0;
        let w = wage(2.0, WorkerType::Minority, FirmType::Prejudiced, &eq).unwrap();
        assert!((w - 1.4).abs() < 1e-15);
        eq.params.alpha = 1.0;
        let w = wage(2.0, WorkerType::Minority, FirmType::Prejudiced, &eq).unwrap();
        assert!((w - 1.8).abs() < 1e-15);
        eq.params.alpha = 0.0;
        assert_eq!(wage(5.0, WorkerType::Minority, FirmType::Unprejudiced, &eq).unwrap(), 1.0);
    }

    #[test]
    fn value_functions() {
        let (params, g, q) = exp_setup();
        let mut eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        assert_eq!(non_participation_value(0.0, &params), 0.0);
        let v = eq.minority.reservation_value;
        let at_reservation = employment_value(v, WorkerType::Minority, &eq);
        assert!((at_reservation - unemployment_value(WorkerType::Minority, &eq)).abs() < 1e-12);
        eq.minority.reservation_value = 1.0;
        let value = employment_value(1.4, WorkerType::Minority, &eq);
        assert!((value - 68.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn segregation_support_exhausted() {
        let (params, _, q) = exp_setup();
        let g = DistributionSpec::Uniform { lower: 0.0, upper: 1.0 };
        let mut eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        eq.minority.reservation_value = 0.2;
        eq.params.d = 0.8;
        assert_eq!(segregation_share(&eq, &g).unwrap(), 1.0);
        eq.params.d = 1.3;
        assert_eq!(segregation_share(&eq, &g).unwrap(), 1.0);
    }

    #[test]
    fn mean_wage_closed_form_exponential() {
        // Memorylessness: E[x - c | x >= c] = 1 for every threshold, so the
        // mean accepted wage is v + α.
        let (params, g, q) = exp_setup();
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        let quad = QuadConfig::default();
        let w = mean_accepted_wage(WorkerType::Minority, &eq, &g, &quad).unwrap();
        assert!((w - (V_G + 0.5)).abs() < 1e-12);
        let fair = solve_equilibrium(&params.with_d(0.0), &g, &q, &SolverConfig::default()).unwrap();
        let p = mean_accepted_wage_at(WorkerType::Minority, FirmType::Prejudiced, &fair, &g, &quad).unwrap();
        let n = mean_accepted_wage_at(WorkerType::Minority, FirmType::Unprejudiced, &fair, &g, &quad).unwrap();
        assert_eq!(p, n);
        let zero_alpha = solve_equilibrium(&ModelParams { alpha: 0.0, ..params }, &g, &q, &SolverConfig::default()).unwrap();
        assert_eq!(
            mean_accepted_wage(WorkerType::Minority, &zero_alpha, &g, &quad).unwrap(),
            zero_alpha.minority.reservation_value
        );
    }

    #[test]
    fn single_precision_solve() {
        let params = ModelParams::<f32> {
            lambda_g: 1.0,
            lambda_s: 1.0,
            eta: 0.1,
            rho: 0.05,
            b: 0.4,
            alpha: 0.5,
            d: 0.2,
            p: 0.3,
        };
        let g = DistributionSpec::Exponential { rate: 1.0f32 };
        let q = DistributionSpec::Uniform { lower: 0.0f32, upper: 3.0 };
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        assert!((eq.minority.reservation_value as f64 - V_G).abs() < 1e-5);
    }
}
