//! Regression specifications and design-matrix construction.
//!
//! Observations sharing every regressor input (unit, period, group,
//! treatment and covariate values) produce identical design rows, so the
//! design stores each distinct row once with a map from observations to
//! rows. Least squares on the distinct rows with summed weights is exact.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::linalg::DenseMatrix;
use super::table::{Column, Factor, Table};
use super::vcov::Adjustment;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventWindow {
    pub leads: usize,
    pub lags: usize,
}

/// Interacts the fixed effects and the treatment with membership in one
/// level of a grouping column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupInteraction {
    pub column: String,
    pub level: String,
}

/// Keeps only rows whose `column` label equals `level`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetFilter {
    pub column: String,
    pub level: String,
}

fn default_treatment() -> String {
    "ssm".into()
}
fn default_unit() -> String {
    "state_id".into()
}
fn default_time() -> String {
    "year".into()
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub outcome: String,
    #[serde(default = "default_treatment")]
    pub treatment: String,
    #[serde(default = "default_unit")]
    pub unit: String,
    #[serde(default = "default_time")]
    pub time: String,
    #[serde(default = "yes")]
    pub unit_effects: bool,
    #[serde(default = "yes")]
    pub time_effects: bool,
    /// Unit-specific polynomial time trends of this order (0, 1 or 2).
    #[serde(default)]
    pub trend_order: u8,
    #[serde(default)]
    pub event_window: Option<EventWindow>,
    #[serde(default)]
    pub group: Option<GroupInteraction>,
    #[serde(default)]
    pub subset: Option<SubsetFilter>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default = "default_unit")]
    pub cluster: String,
    #[serde(default)]
    pub weight: Option<String>,
    /// Omitted unit level; the first sorted level when absent.
    #[serde(default)]
    pub reference_unit: Option<String>,
    #[serde(default)]
    pub reference_time: Option<String>,
    #[serde(default)]
    pub adjustment: Adjustment,
}

impl RegressionSpec {
    /// Two-way fixed-effects difference-in-differences on `outcome`.
    pub fn did(outcome: &str) -> Self {
        RegressionSpec {
            outcome: outcome.into(),
            treatment: default_treatment(),
            unit: default_unit(),
            time: default_time(),
            unit_effects: true,
            time_effects: true,
            trend_order: 0,
            event_window: None,
            group: None,
            subset: None,
            covariates: Vec::new(),
            cluster: default_unit(),
            weight: None,
            reference_unit: None,
            reference_time: None,
            adjustment: Adjustment::default(),
        }
    }

    pub fn with_event_window(mut self, leads: usize, lags: usize) -> Self {
        self.event_window = Some(EventWindow { leads, lags });
        self
    }

    pub fn with_group(mut self, column: &str, level: &str) -> Self {
        self.group = Some(GroupInteraction { column: column.into(), level: level.into() });
        self
    }

    pub fn with_subset(mut self, column: &str, level: &str) -> Self {
        self.subset = Some(SubsetFilter { column: column.into(), level: level.into() });
        self
    }

    /// Name of the coefficient of interest.
    pub fn focus(&self) -> String {
        match &self.group {
            Some(g) => interaction_name(&self.treatment, &g.level),
            None => self.treatment.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trend_order > 2 {
            return Err(Error::param("trend_order", "must be 0, 1 or 2"));
        }
        if self.outcome.is_empty() || self.treatment.is_empty() {
            return Err(Error::param("outcome", "outcome and treatment must be named"));
        }
        Ok(())
    }
}

pub fn interaction_name(treatment: &str, level: &str) -> String {
    format!("{treatment}_x_{level}")
}

pub fn lead_name(j: usize) -> String {
    format!("lead_{j}")
}

pub fn lag_name(k: usize) -> String {
    format!("lag_{k}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TermKind {
    #[default]
    Intercept,
    UnitEffect,
    TimeEffect,
    GroupEffect,
    GroupUnitEffect,
    GroupTimeEffect,
    Trend,
    Covariate,
    Treatment,
    Lead,
    Lag,
    Interaction,
}

impl TermKind {
    /// Fixed effects and trends are absorbed: counted, not reported.
    pub fn is_absorbed(self) -> bool {
        matches!(
            self,
            TermKind::Intercept
                | TermKind::UnitEffect
                | TermKind::TimeEffect
                | TermKind::GroupUnitEffect
                | TermKind::GroupTimeEffect
                | TermKind::Trend
        )
    }
}

#[derive(Debug, Clone)]
pub struct Design<T> {
    pub names: Vec<String>,
    pub kinds: Vec<TermKind>,
    /// Distinct design rows.
    pub rows: DenseMatrix<T>,
    /// Distinct row used by each observation.
    pub row_of_obs: Vec<u32>,
    pub outcome: Vec<T>,
    pub weights: Option<Vec<T>>,
    /// Cluster index of each observation, in `0..n_clusters`.
    pub clusters: Vec<u32>,
    pub n_clusters: usize,
}

impl<T: Scalar> Design<T> {
    /// Design with one row per observation; every term is reported.
    pub fn from_dense(
        names: Vec<String>,
        x: DenseMatrix<T>,
        outcome: Vec<T>,
        weights: Option<Vec<T>>,
        clusters: Vec<u32>,
    ) -> Result<Self> {
        let n = x.rows();
        if names.len() != x.cols() || outcome.len() != n || clusters.len() != n {
            return Err(Error::DataValidation("design dimensions disagree".into()));
        }
        if weights.as_ref().is_some_and(|w| w.len() != n) {
            return Err(Error::DataValidation("weight length disagrees with the design".into()));
        }
        let n_clusters = clusters.iter().max().map_or(0, |m| *m as usize + 1);
        let kinds = vec![TermKind::Covariate; names.len()];
        Ok(Design { names, kinds, rows: x, row_of_obs: (0..n as u32).collect(), outcome, weights, clusters, n_clusters })
    }

    pub fn n_obs(&self) -> usize {
        self.row_of_obs.len()
    }

    pub fn n_columns(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Value of design column `j` for observation `i`.
    pub fn value(&self, i: usize, j: usize) -> T {
        self.rows.get(self.row_of_obs[i] as usize, j)
    }

    /// Full observation-level design matrix. Intended for small designs.
    pub fn expand(&self) -> DenseMatrix<T> {
        let k = self.n_columns();
        let mut data = Vec::with_capacity(self.n_obs() * k);
        for &r in &self.row_of_obs {
            data.extend_from_slice(self.rows.row(r as usize));
        }
        DenseMatrix::from_row_major(self.n_obs(), k, data)
    }
}

fn numeric<'a>(table: &'a Table, name: &str) -> Result<&'a [f64]> {
    match table.get(name) {
        None => Err(Error::DataValidation(format!("missing column `{name}`"))),
        Some(Column::Categorical { .. }) => Err(Error::DataValidation(format!("column `{name}` must be numeric"))),
        Some(Column::Numeric(v)) => Ok(v),
    }
}

fn column<'a>(table: &'a Table, name: &str) -> Result<&'a Column> {
    table.get(name).ok_or_else(|| Error::DataValidation(format!("missing column `{name}`")))
}

fn finite_on(values: &[f64], rows: &[usize], name: &str) -> Result<()> {
    let bad = rows.iter().filter(|&&i| !values[i].is_finite()).count();
    if bad > 0 {
        return Err(Error::DataValidation(format!(
            "column `{name}` has {bad} missing or non-finite values in the estimation sample"
        )));
    }
    Ok(())
}

fn reference_level(factor: &Factor, requested: &Option<String>, field: &'static str) -> Result<usize> {
    match requested {
        None => Ok(0),
        Some(label) => factor
            .position(label)
            .ok_or_else(|| Error::param(field, format!("level `{label}` does not occur in the sample"))),
    }
}

/// Builds the design for `spec`. Column order: intercept, unit effects,
/// time effects, group main effect and its unit and time interactions,
/// unit trends, covariates, treatment, leads, lags, treatment-by-group.
pub fn build_design<T: Scalar>(table: &Table, spec: &RegressionSpec) -> Result<Design<T>> {
    spec.validate()?;
    let n_all = table.n_rows();
    let rows: Vec<usize> = match &spec.subset {
        None => (0..n_all).collect(),
        Some(f) => {
            let col = column(table, &f.column)?;
            (0..n_all).filter(|&i| col.label(i) == f.level).collect()
        }
    };
    if rows.is_empty() {
        return Err(Error::DataValidation("estimation sample is empty".into()));
    }
    let n = rows.len();

    let y = numeric(table, &spec.outcome)?;
    finite_on(y, &rows, &spec.outcome)?;
    let treat = numeric(table, &spec.treatment)?;
    finite_on(treat, &rows, &spec.treatment)?;
    if rows.iter().any(|&i| treat[i] != 0.0 && treat[i] != 1.0) {
        return Err(Error::DataValidation(format!("treatment `{}` must be 0 or 1", spec.treatment)));
    }
    if rows.iter().all(|&i| treat[i] == 0.0) {
        return Err(Error::DataValidation(format!("treatment `{}` is never switched on", spec.treatment)));
    }
    let covs: Vec<&[f64]> = spec
        .covariates
        .iter()
        .map(|c| {
            let v = numeric(table, c)?;
            finite_on(v, &rows, c)?;
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let weights: Option<Vec<T>> = match &spec.weight {
        None => None,
        Some(w) => {
            let v = numeric(table, w)?;
            finite_on(v, &rows, w)?;
            if rows.iter().any(|&i| v[i] < 0.0) || rows.iter().all(|&i| v[i] == 0.0) {
                return Err(Error::DataValidation(format!("weights `{w}` must be nonnegative and not all zero")));
            }
            Some(rows.iter().map(|&i| T::lit(v[i])).collect())
        }
    };

    let unit = Factor::from_column(column(table, &spec.unit)?, &rows)?;
    let time = Factor::from_column(column(table, &spec.time)?, &rows)?;
    let cluster = Factor::from_column(column(table, &spec.cluster)?, &rows)?;
    if cluster.n_levels() < 2 {
        return Err(Error::DataValidation(format!(
            "need at least 2 clusters in `{}`, found {}",
            spec.cluster,
            cluster.n_levels()
        )));
    }
    let unit_ref = reference_level(&unit, &spec.reference_unit, "reference_unit")?;
    let time_ref = reference_level(&time, &spec.reference_time, "reference_time")?;

    let needs_time_values = spec.trend_order > 0 || spec.event_window.is_some();
    let time_values: Vec<f64> = if needs_time_values {
        let v = numeric(table, &spec.time)?;
        finite_on(v, &rows, &spec.time)?;
        rows.iter().map(|&i| v[i]).collect()
    } else {
        Vec::new()
    };
    let t_min = time_values.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = time_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    // Treatment start per unit, needed for event-time indicators.
    let mut start: Vec<Option<f64>> = vec![None; unit.n_levels()];
    if let Some(w) = &spec.event_window {
        for (r, &i) in rows.iter().enumerate() {
            if treat[i] == 1.0 {
                let s = &mut start[unit.codes[r] as usize];
                *s = Some(s.map_or(time_values[r], |v: f64| v.min(time_values[r])));
            }
        }
        for (r, &i) in rows.iter().enumerate() {
            if let Some(s) = start[unit.codes[r] as usize] {
                if time_values[r] >= s && treat[i] != 1.0 {
                    return Err(Error::DataValidation(format!(
                        "treatment switches off in unit {}; event windows need absorbing treatment",
                        unit.labels[unit.codes[r] as usize]
                    )));
                }
            }
        }
        if w.leads + w.lags + 1 > time.n_levels() {
            return Err(Error::DataValidation(format!(
                "{} leads and {} lags exceed the {} periods in the sample",
                w.leads,
                w.lags,
                time.n_levels()
            )));
        }
        for j in 1..=w.leads {
            if !start.iter().flatten().any(|&e| e - j as f64 >= t_min) {
                return Err(Error::DataValidation(format!("lead {j} has no pre-treatment period in the sample")));
            }
        }
        for k in 1..=w.lags {
            if !start.iter().flatten().any(|&e| e + k as f64 <= t_max) {
                return Err(Error::DataValidation(format!("lag {k} has no post-treatment period in the sample")));
            }
        }
    }

    let group_flag: Vec<bool> = match &spec.group {
        None => Vec::new(),
        Some(g) => {
            let col = column(table, &g.column)?;
            let flags: Vec<bool> = rows.iter().map(|&i| col.label(i) == g.level).collect();
            if flags.iter().all(|&f| f) || flags.iter().all(|&f| !f) {
                return Err(Error::DataValidation(format!(
                    "group column `{}` must contain level `{}` and at least one other level",
                    g.column, g.level
                )));
            }
            if !rows.iter().zip(&flags).any(|(&i, &f)| f && treat[i] == 1.0) {
                return Err(Error::DataValidation(format!("no treated rows in group `{}`", g.level)));
            }
            flags
        }
    };

    // Column catalogue.
    let mut names = vec!["intercept".to_string()];
    let mut kinds = vec![TermKind::Intercept];
    let non_ref = |f: &Factor, r: usize| (0..f.n_levels()).filter(move |&l| l != r).collect::<Vec<_>>();
    let unit_levels = if spec.unit_effects { non_ref(&unit, unit_ref) } else { Vec::new() };
    let time_levels = if spec.time_effects { non_ref(&time, time_ref) } else { Vec::new() };
    let trend_levels = if spec.trend_order > 0 { non_ref(&unit, unit_ref) } else { Vec::new() };
    for &l in &unit_levels {
        names.push(format!("{}[{}]", spec.unit, unit.labels[l]));
        kinds.push(TermKind::UnitEffect);
    }
    for &l in &time_levels {
        names.push(format!("{}[{}]", spec.time, time.labels[l]));
        kinds.push(TermKind::TimeEffect);
    }
    if let Some(g) = &spec.group {
        names.push(format!("{}[{}]", g.column, g.level));
        kinds.push(TermKind::GroupEffect);
        for &l in &unit_levels {
            names.push(format!("{}_x_{}[{}]", g.level, spec.unit, unit.labels[l]));
            kinds.push(TermKind::GroupUnitEffect);
        }
        for &l in &time_levels {
            names.push(format!("{}_x_{}[{}]", g.level, spec.time, time.labels[l]));
            kinds.push(TermKind::GroupTimeEffect);
        }
    }
    for order in 1..=spec.trend_order {
        for &l in &trend_levels {
            names.push(format!("trend{order}[{}]", unit.labels[l]));
            kinds.push(TermKind::Trend);
        }
    }
    for c in &spec.covariates {
        names.push(c.clone());
        kinds.push(TermKind::Covariate);
    }
    names.push(spec.treatment.clone());
    kinds.push(TermKind::Treatment);
    let window = spec.event_window.unwrap_or_default();
    for j in 1..=window.leads {
        names.push(lead_name(j));
        kinds.push(TermKind::Lead);
    }
    for k in 1..=window.lags {
        names.push(lag_name(k));
        kinds.push(TermKind::Lag);
    }
    if let Some(g) = &spec.group {
        names.push(interaction_name(&spec.treatment, &g.level));
        kinds.push(TermKind::Interaction);
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(Error::DataValidation(format!("duplicate design column `{dup}`")));
    }
    let k = names.len();

    // Slot of each unit and time level among the dummy columns.
    let mut unit_slot = vec![usize::MAX; unit.n_levels()];
    for (s, &l) in unit_levels.iter().enumerate() {
        unit_slot[l] = s;
    }
    let mut time_slot = vec![usize::MAX; time.n_levels()];
    for (s, &l) in time_levels.iter().enumerate() {
        time_slot[l] = s;
    }
    let mut trend_slot = vec![usize::MAX; unit.n_levels()];
    for (s, &l) in trend_levels.iter().enumerate() {
        trend_slot[l] = s;
    }
    let n_u = unit_levels.len();
    let n_t = time_levels.len();
    let n_tr = trend_levels.len();
    let has_group = spec.group.is_some();
    let off_time = 1 + n_u;
    let off_group = off_time + n_t;
    let off_trend = off_group + if has_group { 1 + n_u + n_t } else { 0 };
    let off_cov = off_trend + n_tr * spec.trend_order as usize;
    let off_treat = off_cov + covs.len();

    let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut data: Vec<T> = Vec::new();
    let mut row_of_obs = Vec::with_capacity(n);
    let mut key = Vec::with_capacity(4 + covs.len());
    for (r, &i) in rows.iter().enumerate() {
        let u = unit.codes[r] as usize;
        let t = time.codes[r] as usize;
        let g = has_group && group_flag[r];
        let d = treat[i] == 1.0;
        key.clear();
        key.extend_from_slice(&[u as u64, t as u64, g as u64, d as u64]);
        key.extend(covs.iter().map(|c| c[i].to_bits()));
        if let Some(&row) = index.get(&key) {
            row_of_obs.push(row);
            continue;
        }
        let row = index.len() as u32;
        index.insert(key.clone(), row);
        row_of_obs.push(row);

        let mut x = vec![T::zero(); k];
        x[0] = T::one();
        if unit_slot[u] != usize::MAX && spec.unit_effects {
            x[1 + unit_slot[u]] = T::one();
        }
        if time_slot[t] != usize::MAX && spec.time_effects {
            x[off_time + time_slot[t]] = T::one();
        }
        if g {
            x[off_group] = T::one();
            if spec.unit_effects && unit_slot[u] != usize::MAX {
                x[off_group + 1 + unit_slot[u]] = T::one();
            }
            if spec.time_effects && time_slot[t] != usize::MAX {
                x[off_group + 1 + n_u + time_slot[t]] = T::one();
            }
        }
        if spec.trend_order > 0 && trend_slot[u] != usize::MAX {
            let tau = time_values[r] - t_min;
            let mut power = 1.0;
            for order in 0..spec.trend_order as usize {
                power *= tau;
                x[off_trend + order * n_tr + trend_slot[u]] = T::lit(power);
            }
        }
        for (c, col) in covs.iter().enumerate() {
            x[off_cov + c] = T::lit(col[i]);
        }
        if d {
            x[off_treat] = T::one();
        }
        if let Some(e) = start[u] {
            let tv = time_values[r];
            for j in 1..=window.leads {
                if tv + j as f64 >= e {
                    x[off_treat + j] = T::one();
                }
            }
            for kk in 1..=window.lags {
                if tv - kk as f64 >= e {
                    x[off_treat + window.leads + kk] = T::one();
                }
            }
        }
        if g && d {
            x[k - 1] = T::one();
        }
        data.extend_from_slice(&x);
    }
    let distinct = index.len();
    Ok(Design {
        names,
        kinds,
        rows: DenseMatrix::from_row_major(distinct, k, data),
        row_of_obs,
        outcome: rows.iter().map(|&i| T::lit(y[i])).collect(),
        weights,
        n_clusters: cluster.n_levels(),
        clusters: cluster.codes,
    })
}
