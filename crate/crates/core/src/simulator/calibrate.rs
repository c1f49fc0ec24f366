//! Chooses a post-shock parameter value that moves a model-implied outcome
//! by a target amount.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::root::{bisect, secant_polish};
use crate::model::{solve_equilibrium, DistributionSpec, Equilibrium, ModelParams, SolverConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockKnob {
    D,
    LambdaG,
}

impl ShockKnob {
    fn get<T: Scalar>(self, params: &ModelParams<T>) -> T {
        match self {
            ShockKnob::D => params.d,
            ShockKnob::LambdaG => params.lambda_g,
        }
    }

    fn set<T: Scalar>(self, params: &ModelParams<T>, value: T) -> ModelParams<T> {
        match self {
            ShockKnob::D => params.with_d(value),
            ShockKnob::LambdaG => params.with_lambda_g(value),
        }
    }

    fn default_bounds<T: Scalar>(self, params: &ModelParams<T>) -> (T, T) {
        let ten = T::lit(10.0);
        (T::zero(), ten * self.get(params).max(T::one()))
    }
}

/// Minority-worker outcome the shock is calibrated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationOutcome {
    /// Per-worker employment probability `e = l (1 - u)`.
    Employment,
    /// Probability both partners of a minority couple work, `e^2`.
    #[default]
    BothWorking,
}

impl CalibrationOutcome {
    pub fn evaluate<T: Scalar>(self, eq: &Equilibrium<T>) -> T {
        let e = eq.minority.employment_share;
        match self {
            CalibrationOutcome::Employment => e,
            CalibrationOutcome::BothWorking => e * e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration<T> {
    pub knob: ShockKnob,
    pub outcome: CalibrationOutcome,
    pub target_effect: T,
    pub base: ModelParams<T>,
    pub post: ModelParams<T>,
    pub base_value: T,
    pub post_value: T,
    /// `post_value - base_value`, from a fresh solve at the calibrated knob.
    pub achieved_effect: T,
    pub iterations: usize,
}

/// Root-solves the knob so the outcome changes by `target_effect` relative
/// to `base`. The search runs between the base value and whichever bound
/// lies in the direction of the target; `bounds` defaults to
/// `[0, 10 max(knob, 1)]`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_shock<T: Scalar>(
    base: &ModelParams<T>,
    productivity: &DistributionSpec<T>,
    leisure: &DistributionSpec<T>,
    target_effect: T,
    outcome: CalibrationOutcome,
    knob: ShockKnob,
    bounds: Option<(T, T)>,
    cfg: &SolverConfig<T>,
) -> Result<Calibration<T>> {
    if !target_effect.is_finite() {
        return Err(Error::NonFinite("target effect"));
    }
    let base_eq = solve_equilibrium(base, productivity, leisure, cfg)?;
    let base_value = outcome.evaluate(&base_eq);
    let start = knob.get(base);
    let (lo, hi) = bounds.unwrap_or_else(|| knob.default_bounds(base));
    if !(lo <= start && start <= hi) {
        return Err(Error::param("bounds", "must contain the base value of the knob"));
    }
    let effect_at = |k: T| -> Result<T> {
        let eq = solve_equilibrium(&knob.set(base, k), productivity, leisure, cfg)?;
        Ok(outcome.evaluate(&eq) - base_value)
    };
    if target_effect == T::zero() {
        return Ok(Calibration {
            knob,
            outcome,
            target_effect,
            base: *base,
            post: *base,
            base_value,
            post_value: base_value,
            achieved_effect: T::zero(),
            iterations: 0,
        });
    }
    let at_lo = effect_at(lo)?;
    let at_hi = effect_at(hi)?;
    let (min, max) = (at_lo.min(at_hi).min(T::zero()), at_lo.max(at_hi).max(T::zero()));
    if target_effect < min || target_effect > max {
        return Err(Error::Unreachable {
            target: target_effect.as_f64(),
            min: min.as_f64(),
            max: max.as_f64(),
        });
    }
    // The outcome is monotone in the knob, so the side is fixed by the sign.
    let far = if (at_lo - T::zero()) * target_effect > T::zero() { lo } else { hi };
    let gap = |k: T| effect_at(k).map(|e| e - target_effect);
    let (first, bracket) = bisect(gap, start, far, cfg.rel_tol, cfg.max_iter)?;
    let found = secant_polish(gap, bracket, first, T::epsilon(), 40)?;
    let post = knob.set(base, found.root);
    let post_eq = solve_equilibrium(&post, productivity, leisure, cfg)?;
    let post_value = outcome.evaluate(&post_eq);
    Ok(Calibration {
        knob,
        outcome,
        target_effect,
        base: *base,
        post,
        base_value,
        post_value,
        achieved_effect: post_value - base_value,
        iterations: found.iterations,
    })
}
