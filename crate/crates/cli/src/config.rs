//! Run configuration. TOML in, fully resolved values echoed back out.

use std::path::{Path, PathBuf};

use labsearch::econometrics::{EventWindow, RegressionSpec};
use labsearch::model::{
    desk_configuration, leisure_scaled_to_majority, linspace, pipeline_configuration, Role, SolverConfig,
};
use labsearch::simulator::{
    staggered_treatment_years, CalibrationOutcome, CovariateSpec, HoursSpec, MarriageSpec, OutcomeNoise,
    PanelScenario, ShockKnob, SimConfig, TrendSpec,
};
use labsearch::{Distribution, Params};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Root-finding tolerance, applied to bracket width and residual.
    pub tolerance: Option<f64>,
    pub model: Option<Params>,
    pub productivity: Option<Distribution>,
    pub leisure: Option<Distribution>,
    /// Leisure uniform on `[0, leisure_multiple * v_S]` instead of `leisure`.
    pub leisure_multiple: Option<f64>,
    pub sweep: Option<SweepSection>,
    pub simulation: Option<SimulationSection>,
    pub panel: Option<PanelSection>,
    pub calibration: Option<CalibrationSection>,
    pub regression: Option<RegressionSpec>,
    pub event_study: Option<EventWindow>,
    pub placebo: Option<PlaceboSection>,
    pub data: Option<DataSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range(GridRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Values(v) => v.clone(),
            GridSpec::Range(r) => linspace(r.start, r.stop, r.points),
        }
    }

    /// Values sorted ascending with duplicates removed.
    pub fn normalized(&self) -> Vec<f64> {
        let mut v = self.values();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

fn d_grid() -> Option<GridSpec> {
    Some(GridSpec::Range(GridRange { start: 0.0, stop: 1.0, points: 21 }))
}
fn lambda_grid() -> Option<GridSpec> {
    Some(GridSpec::Range(GridRange { start: 0.2, stop: 2.0, points: 21 }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "d_grid")]
    pub d: Option<GridSpec>,
    #[serde(default = "lambda_grid")]
    pub lambda_g: Option<GridSpec>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { d: d_grid(), lambda_g: lambda_grid() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub n_agents: usize,
    pub horizon: f64,
    pub burn_in: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection { n_agents: 10_000, horizon: 200.0, burn_in: 50.0 }
    }
}

/// A treatment year, or `"never"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreatmentYear {
    Year(i32),
    Never(Never),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Never {
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelSection {
    pub states: usize,
    pub first_year: i32,
    pub years: usize,
    /// Share of never-treated states when `treatment_years` is absent.
    pub never_treated_share: f64,
    pub treatment_years: Option<Vec<TreatmentYear>>,
    pub couples_per_cell: usize,
    pub noise: OutcomeNoise,
    pub hours: HoursSpec,
    pub marriage: MarriageSpec,
    pub trends: TrendSpec,
    pub clamp_budget: f64,
    pub include_opposite_sex: bool,
    pub covariates: Vec<CovariateSpec>,
}

impl Default for PanelSection {
    fn default() -> Self {
        PanelSection {
            states: 51,
            first_year: 2008,
            years: 9,
            never_treated_share: 0.2,
            treatment_years: None,
            couples_per_cell: 1000,
            noise: OutcomeNoise::default(),
            hours: HoursSpec::default(),
            marriage: MarriageSpec::default(),
            trends: TrendSpec::default(),
            clamp_budget: 0.05,
            include_opposite_sex: false,
            covariates: Vec::new(),
        }
    }
}

fn default_target() -> f64 {
    0.024
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "default_target")]
    pub target_effect: f64,
    #[serde(default = "default_knob")]
    pub knob: ShockKnob,
    #[serde(default)]
    pub outcome: CalibrationOutcome,
    pub bounds: Option<(f64, f64)>,
}

fn default_knob() -> ShockKnob {
    ShockKnob::D
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            target_effect: default_target(),
            knob: default_knob(),
            outcome: CalibrationOutcome::default(),
            bounds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaceboSection {
    pub n_reps: usize,
    pub level: f64,
}

impl Default for PlaceboSection {
    fn default() -> Self {
        PlaceboSection { n_reps: 500, level: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// CSV path, relative to the config file.
    pub path: PathBuf,
}

/// Which built-in model defaults a command starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Defaults {
    Desk,
    Pipeline,
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string().trim().to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.into_inner().to_string().trim()))
    })
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse(&text)?;
    if let Some(data) = &mut cfg.data {
        if data.path.is_relative() {
            data.path = path.parent().unwrap_or(Path::new(".")).join(&data.path);
        }
        // Absolute, so the echoed config reruns from any directory.
        if let Ok(abs) = std::fs::canonicalize(&data.path) {
            data.path = abs;
        }
    }
    Ok(cfg)
}

fn field_error(section: &str, e: labsearch::Error) -> CliError {
    match e {
        labsearch::Error::InvalidParameter { field, reason } => {
            CliError::Config(format!("at `{section}.{field}`: {reason}"))
        }
        other if other.exit_code() == 1 => CliError::Config(format!("at `{section}`: {other}")),
        other => CliError::Run(other),
    }
}

impl RunConfig {
    pub fn solver(&self) -> SolverConfig<f64> {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.tolerance {
            cfg.rel_tol = t;
            cfg.residual_tol = t;
        }
        cfg
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Fills every model section the command needs, validating as it goes.
    /// Leisure given as a multiple is replaced by the explicit law.
    pub fn resolve(mut self, defaults: Defaults) -> Result<RunConfig, CliError> {
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0 && t <= 1e-2) {
                return Err(CliError::Config(format!("at `tolerance`: {t} must lie in (0, 0.01]")));
            }
        }
        if self.seed.is_some_and(|s| s > i64::MAX as u64) {
            return Err(CliError::Config("at `seed`: must fit in a signed 64-bit integer".into()));
        }
        let (base_params, base_g, base_q) = match defaults {
            Defaults::Desk => desk_configuration(),
            Defaults::Pipeline => pipeline_configuration(),
        };
        let explicit_model = self.model.is_some() || self.productivity.is_some();
        let params = self.model.unwrap_or(base_params);
        params.validate().map_err(|e| field_error("model", e))?;
        let g = self.productivity.unwrap_or(base_g);
        g.validate(Role::Productivity).map_err(|e| field_error("productivity", e))?;
        let q = match (self.leisure, self.leisure_multiple) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config("at `leisure_multiple`: give either `leisure` or `leisure_multiple`".into()))
            }
            (Some(q), None) => q,
            (None, Some(m)) => {
                if !(m.is_finite() && m > 0.0) {
                    return Err(CliError::Config(format!("at `leisure_multiple`: {m} must be positive")));
                }
                leisure_scaled_to_majority(&params, &g, m, &self.solver()).map_err(|e| field_error("leisure_multiple", e))?
            }
            (None, None) if explicit_model => {
                let multiple = if defaults == Defaults::Desk { 3.0 } else { 2.0 };
                leisure_scaled_to_majority(&params, &g, multiple, &self.solver()).map_err(|e| field_error("leisure", e))?
            }
            (None, None) => base_q,
        };
        q.validate(Role::Leisure).map_err(|e| field_error("leisure", e))?;
        self.model = Some(params);
        self.productivity = Some(g);
        self.leisure = Some(q);
        self.leisure_multiple = None;
        Ok(self)
    }

    pub fn params(&self) -> Params {
        self.model.expect("resolved")
    }

    pub fn productivity(&self) -> Distribution {
        self.productivity.expect("resolved")
    }

    pub fn leisure(&self) -> Distribution {
        self.leisure.expect("resolved")
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = self.simulation.clone().unwrap_or_default();
        let cfg = SimConfig { n_agents: s.n_agents, horizon: s.horizon, burn_in: s.burn_in, seed: self.seed() };
        cfg.validate().map_err(|e| field_error("simulation", e))?;
        Ok(cfg)
    }

    /// Scenario with the given post-treatment parameters.
    pub fn scenario(&self, post: Params, seed: u64) -> Result<PanelScenario, CliError> {
        let p = self.panel.clone().unwrap_or_default();
        let treatment_years = match &p.treatment_years {
            None => {
                if !(0.0..=1.0).contains(&p.never_treated_share) {
                    return Err(CliError::Config("at `panel.never_treated_share`: must lie in [0, 1]".into()));
                }
                staggered_treatment_years(p.states, p.first_year, p.years, p.never_treated_share)
            }
            Some(v) => v
                .iter()
                .map(|t| match t {
                    TreatmentYear::Year(y) => Some(*y),
                    TreatmentYear::Never(_) => None,
                })
                .collect(),
        };
        let sc = PanelScenario {
            states: p.states,
            first_year: p.first_year,
            years: p.years,
            treatment_years,
            pre: self.params(),
            post,
            productivity: self.productivity(),
            leisure: self.leisure(),
            couples_per_cell: p.couples_per_cell,
            noise: p.noise,
            hours: p.hours,
            marriage: p.marriage,
            trends: p.trends,
            clamp_budget: p.clamp_budget,
            include_opposite_sex: p.include_opposite_sex,
            covariates: p.covariates,
            seed,
        };
        sc.validate().map_err(|e| field_error("panel", e))?;
        Ok(sc)
    }

    pub fn regression(&self) -> Result<RegressionSpec, CliError> {
        let spec = self.regression.clone().unwrap_or_else(|| RegressionSpec::did("both_working"));
        spec.validate().map_err(|e| field_error("regression", e))?;
        Ok(spec)
    }

    pub fn placebo(&self) -> Result<PlaceboSection, CliError> {
        let p = self.placebo.clone().unwrap_or_default();
        if p.n_reps < 100 {
            return Err(CliError::Config("at `placebo.n_reps`: need at least 100 replications".into()));
        }
        if !(p.level > 0.0 && p.level <= 1.0) {
            return Err(CliError::Config("at `placebo.level`: must lie in (0, 1]".into()));
        }
        Ok(p)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved configs serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use labsearch::simulator::CovariateLaw;

    #[test]
    fn unknown_key_reports_path() {
        let err = parse("[model]\nlambda_g = 1.0\nbogus = 2\n").unwrap_err();
        assert!(err.to_string().contains("model"), "{err}");
        let err = parse("[panel]\nstates = \"many\"\n").unwrap_err();
        assert!(err.to_string().contains("panel.states"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "seed = 4\nleisure_multiple = 2.5\n[sweep]\nd = [0.5, 0.0, 1.0]\n[panel]\nstates = 3\nyears = 3\ntreatment_years = [2009, \"never\", 2010]\n[regression]\noutcome = \"both_working\"\nevent_window = { leads = 1, lags = 1 }\n";
        let cfg = parse(text).unwrap().resolve(Defaults::Desk).unwrap();
        let again = parse(&cfg.to_toml()).unwrap().resolve(Defaults::Desk).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.sweep.as_ref().unwrap().d.as_ref().unwrap().normalized(), vec![0.0, 0.5, 1.0]);
        let sc = cfg.scenario(cfg.params(), 1).unwrap();
        assert_eq!(sc.treatment_years, vec![Some(2009), None, Some(2010)]);
    }

    #[test]
    fn covariate_laws_parse_and_round_trip() {
        let text = "[panel]\ncovariates = [{ name = \"age\", law = \"normal\", mean = 40.0, sd = 10.0 }, { name = \"college\", law = \"bernoulli\", p = 0.4 }]\n";
        let cfg = parse(text).unwrap().resolve(Defaults::Pipeline).unwrap();
        let again = parse(&cfg.to_toml()).unwrap().resolve(Defaults::Pipeline).unwrap();
        assert_eq!(cfg, again);
        let covs = &cfg.panel.as_ref().unwrap().covariates;
        assert_eq!(covs[1].law, CovariateLaw::Bernoulli { p: 0.4 });

        let bad = "[panel]\ncovariates = [{ name = \"age\", law = \"normal\", mean = 40.0, sd = 10.0, skew = 1.0 }]\n";
        let err = parse(bad).unwrap_err();
        assert!(err.to_string().contains("panel.covariates"), "{err}");
    }

    #[test]
    fn invalid_values_name_the_field() {
        let text = "[model]\nlambda_g = 1.0\nlambda_s = 1.0\neta = -0.1\nrho = 0.05\nb = 0.4\nalpha = 0.5\nd = 0.2\np = 0.3\n";
        let err = parse(text).unwrap().resolve(Defaults::Desk).unwrap_err();
        assert!(err.to_string().contains("model.eta"), "{err}");
    }
}
