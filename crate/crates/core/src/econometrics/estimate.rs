//! Difference-in-differences, event-study and triple-difference estimators.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::design::{build_design, Design, RegressionSpec, TermKind};
use super::ols::{ols, OlsFit};
use super::table::Table;
use super::vcov::{cluster_vcov, Adjustment};
use crate::error::{Error, Result};
use crate::scalar::{normal_quantile, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow<T> {
    pub name: String,
    pub estimate: T,
    pub std_error: T,
    pub t_stat: T,
}

/// Retained fixed-effect and trend columns, by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AbsorbedCounts {
    pub intercept: usize,
    pub unit_effects: usize,
    pub time_effects: usize,
    pub group_interactions: usize,
    pub trend_terms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics<T> {
    pub rss: T,
    pub r_squared: T,
    /// Largest normalized inner product of residuals with a retained column.
    pub orthogonality: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult<T> {
    pub focus: String,
    /// Reported terms: group main effect, covariates, treatment, leads,
    /// lags and interaction, in design order.
    pub coefficients: Vec<CoefficientRow<T>>,
    /// Covariance of the reported terms.
    pub vcov: Vec<Vec<T>>,
    pub n_obs: usize,
    pub n_clusters: usize,
    /// Retained columns, absorbed ones included.
    pub n_params: usize,
    pub absorbed: AbsorbedCounts,
    pub diagnostics: Diagnostics<T>,
    /// Names of columns removed as collinear.
    pub dropped: Vec<String>,
    pub adjustment: Adjustment,
}

impl<T: Scalar> RegressionResult<T> {
    pub fn coefficient(&self, name: &str) -> Option<&CoefficientRow<T>> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn focus_coefficient(&self) -> &CoefficientRow<T> {
        self.coefficient(&self.focus).expect("focus coefficient is always retained")
    }

    /// Rows whose names start with `prefix`, e.g. `lead_`.
    pub fn terms_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a CoefficientRow<T>> + 'a {
        self.coefficients.iter().filter(move |c| c.name.starts_with(prefix))
    }

    /// Writes `term,estimate,std_error,t_stat` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "estimate", "std_error", "t_stat"])?;
        for c in &self.coefficients {
            w.write_record([
                c.name.clone(),
                format!("{:e}", c.estimate),
                format!("{:e}", c.std_error),
                format!("{:e}", c.t_stat),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Two-sided normal critical value at significance `level`.
pub fn critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::param("level", "must lie in (0, 1]"));
    }
    Ok(if level == 1.0 { 0.0 } else { normal_quantile(1.0 - level / 2.0) })
}

/// Assembles a result from a fitted design. Errors if the focus column was
/// dropped as collinear.
pub fn summarize<T: Scalar>(
    design: &Design<T>,
    fit: &OlsFit<T>,
    vcov: &super::linalg::DenseMatrix<T>,
    focus: &str,
    adjustment: Adjustment,
) -> Result<RegressionResult<T>> {
    let dropped: Vec<String> = fit.dropped.iter().map(|&j| design.names[j].clone()).collect();
    if dropped.iter().any(|d| d == focus) {
        return Err(Error::RankDeficient(vec![focus.to_string()]));
    }
    let mut absorbed = AbsorbedCounts::default();
    let mut reported = Vec::new();
    for (a, &j) in fit.retained.iter().enumerate() {
        match design.kinds[j] {
            TermKind::Intercept => absorbed.intercept += 1,
            TermKind::UnitEffect => absorbed.unit_effects += 1,
            TermKind::TimeEffect => absorbed.time_effects += 1,
            TermKind::GroupUnitEffect | TermKind::GroupTimeEffect => absorbed.group_interactions += 1,
            TermKind::Trend => absorbed.trend_terms += 1,
            _ => reported.push(a),
        }
    }
    let coefficients = reported
        .iter()
        .map(|&a| {
            let se = vcov.get(a, a).max(T::zero()).sqrt();
            let est = fit.coefficients[a];
            CoefficientRow {
                name: design.names[fit.retained[a]].clone(),
                estimate: est,
                std_error: se,
                t_stat: if se > T::zero() { est / se } else { T::nan() },
            }
        })
        .collect();
    let sub = reported.iter().map(|&a| reported.iter().map(|&b| vcov.get(a, b)).collect()).collect();
    Ok(RegressionResult {
        focus: focus.to_string(),
        coefficients,
        vcov: sub,
        n_obs: fit.n_obs,
        n_clusters: design.n_clusters,
        n_params: fit.rank(),
        absorbed,
        diagnostics: Diagnostics { rss: fit.rss, r_squared: fit.r_squared(), orthogonality: fit.orthogonality },
        dropped,
        adjustment,
    })
}

/// Builds, fits and summarizes any supported specification.
pub fn fit<T: Scalar>(table: &Table, spec: &RegressionSpec) -> Result<RegressionResult<T>> {
    let design = build_design::<T>(table, spec)?;
    let weights = design.weights.as_deref();
    let fitted = ols(&design, &design.outcome, weights)?;
    let v = cluster_vcov(&design, &fitted, weights, &design.clusters, spec.adjustment)?;
    summarize(&design, &fitted, &v, &spec.focus(), spec.adjustment)
}

pub fn estimate_did<T: Scalar>(table: &Table, spec: &RegressionSpec) -> Result<RegressionResult<T>> {
    if spec.event_window.is_some() || spec.group.is_some() {
        return Err(Error::param("spec", "difference-in-differences takes no event window or group interaction"));
    }
    fit(table, spec)
}

pub fn estimate_event_study<T: Scalar>(table: &Table, spec: &RegressionSpec) -> Result<RegressionResult<T>> {
    if spec.event_window.is_none() {
        return Err(Error::param("event_window", "an event study needs leads and lags"));
    }
    fit(table, spec)
}

pub fn estimate_ddd<T: Scalar>(table: &Table, spec: &RegressionSpec) -> Result<RegressionResult<T>> {
    if spec.group.is_none() {
        return Err(Error::param("group", "a triple difference needs a group interaction"));
    }
    fit(table, spec)
}
