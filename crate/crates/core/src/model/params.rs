use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Worker type. `Minority` workers face the hiring disutility at prejudiced
/// employers; `Majority` workers are treated identically by both firm types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WorkerType {
    #[serde(rename = "G")]
    Minority,
    #[serde(rename = "S")]
    Majority,
}

impl WorkerType {
    pub const ALL: [WorkerType; 2] = [WorkerType::Minority, WorkerType::Majority];

    pub fn label(self) -> &'static str {
        match self {
            WorkerType::Minority => "G",
            WorkerType::Majority => "S",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FirmType {
    #[serde(rename = "P")]
    Prejudiced,
    #[serde(rename = "N")]
    Unprejudiced,
}

impl FirmType {
    pub const ALL: [FirmType; 2] = [FirmType::Prejudiced, FirmType::Unprejudiced];

    pub fn label(self) -> &'static str {
        match self {
            FirmType::Prejudiced => "P",
            FirmType::Unprejudiced => "N",
        }
    }
}

/// Exogenous parameters of the search economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams<T> {
    /// Meeting rate for minority workers.
    pub lambda_g: T,
    /// Meeting rate for majority workers.
    pub lambda_s: T,
    /// Job destruction rate.
    pub eta: T,
    /// Discount rate.
    pub rho: T,
    /// Flow value of unemployment.
    pub b: T,
    /// Worker bargaining weight.
    pub alpha: T,
    /// Flow disutility a prejudiced employer attaches to a minority hire.
    pub d: T,
    /// Share of prejudiced employers.
    pub p: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("lambda_g", self.lambda_g),
            ("lambda_s", self.lambda_s),
            ("eta", self.eta),
            ("rho", self.rho),
            ("b", self.b),
            ("alpha", self.alpha),
            ("d", self.d),
            ("p", self.p),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        if self.eta <= T::zero() {
            return Err(Error::param("eta", "must be positive"));
        }
        if self.rho <= T::zero() {
            return Err(Error::param("rho", "must be positive"));
        }
        if self.alpha < T::zero() || self.alpha > T::one() {
            return Err(Error::param("alpha", "must lie in [0, 1]"));
        }
        if self.p < T::zero() || self.p > T::one() {
            return Err(Error::param("p", "must lie in [0, 1]"));
        }
        if self.d < T::zero() {
            return Err(Error::param("d", "must be nonnegative"));
        }
        if self.lambda_g < T::zero() {
            return Err(Error::param("lambda_g", "must be nonnegative"));
        }
        if self.lambda_s < T::zero() {
            return Err(Error::param("lambda_s", "must be nonnegative"));
        }
        Ok(())
    }

    pub fn arrival_rate(&self, worker: WorkerType) -> T {
        match worker {
            WorkerType::Minority => self.lambda_g,
            WorkerType::Majority => self.lambda_s,
        }
    }

    /// Disutility applied to a (worker, firm) pair: `d` for a minority worker
    /// at a prejudiced firm, zero otherwise.
    pub fn disutility(&self, worker: WorkerType, firm: FirmType) -> T {
        match (worker, firm) {
            (WorkerType::Minority, FirmType::Prejudiced) => self.d,
            _ => T::zero(),
        }
    }

    /// Weight of a firm type among meetings.
    pub fn firm_share(&self, firm: FirmType) -> T {
        match firm {
            FirmType::Prejudiced => self.p,
            FirmType::Unprejudiced => T::one() - self.p,
        }
    }

    /// `λ_J α / (ρ + η)`, the slope multiplying the expected surplus.
    pub fn surplus_factor(&self, worker: WorkerType) -> T {
        self.arrival_rate(worker) * self.alpha / (self.rho + self.eta)
    }

    pub fn with_d(mut self, d: T) -> Self {
        self.d = d;
        self
    }

    pub fn with_lambda_g(mut self, lambda_g: T) -> Self {
        self.lambda_g = lambda_g;
        self
    }
}

impl ModelParams<f64> {
    /// Desk calibration used throughout the examples and tests.
    pub fn baseline() -> Self {
        ModelParams {
            lambda_g: 1.0,
            lambda_s: 1.0,
            eta: 0.1,
            rho: 0.05,
            b: 0.4,
            alpha: 0.5,
            d: 0.2,
            p: 0.3,
        }
    }
}
