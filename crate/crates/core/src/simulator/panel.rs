//! Synthetic state-by-year panels of couples under a staggered policy shock.
//!
//! Every state-year cell draws its couples from the equilibrium of the regime
//! in force there (pre- or post-treatment parameters). Partners are two
//! independent workers of the same type: a same-sex couple consists of two
//! minority workers, an opposite-sex couple of two majority workers.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, RNG_SCHEME};
use crate::econometrics::table::{Column, Table};
use crate::error::{Error, Result};
use crate::model::{solve_equilibrium, DistributionSpec, Equilibrium, ModelParams, SolverConfig, WorkerType};

pub const COUPLE_MODEL: &str =
    "partners are independent draws of the same worker type; P(both work) = e^2 with e = l (1 - u)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleGroup {
    SameSex,
    OppositeSex,
}

impl CoupleGroup {
    pub fn label(self) -> &'static str {
        match self {
            CoupleGroup::SameSex => "same_sex",
            CoupleGroup::OppositeSex => "opposite_sex",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "same_sex" => Some(CoupleGroup::SameSex),
            "opposite_sex" => Some(CoupleGroup::OppositeSex),
            _ => None,
        }
    }

    pub fn worker(self) -> WorkerType {
        match self {
            CoupleGroup::SameSex => WorkerType::Minority,
            CoupleGroup::OppositeSex => WorkerType::Majority,
        }
    }
}

/// How couple outcomes are drawn from cell probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeNoise {
    /// Partners' employment are Bernoulli draws.
    #[default]
    Bernoulli,
    /// Each couple records its expected outcome; no sampling noise.
    Expected,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendSpec {
    /// Standard deviation of state-specific linear slopes on the employment probability.
    pub linear_sd: f64,
    pub quadratic_sd: f64,
    /// Standard deviation of common year shocks.
    pub year_shock_sd: f64,
}

impl TrendSpec {
    pub fn is_off(&self) -> bool {
        self.linear_sd == 0.0 && self.quadratic_sd == 0.0 && self.year_shock_sd == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoursSpec {
    /// Weekly hours of an employed partner.
    pub mean: f64,
    pub sd: f64,
}

impl Default for HoursSpec {
    fn default() -> Self {
        HoursSpec { mean: 38.0, sd: 8.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarriageSpec {
    pub same_sex_pre: f64,
    pub same_sex_post: f64,
    pub opposite_sex: f64,
}

impl Default for MarriageSpec {
    fn default() -> Self {
        MarriageSpec { same_sex_pre: 0.1, same_sex_post: 0.4, opposite_sex: 0.85 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovariateLaw {
    Normal { mean: f64, sd: f64 },
    Bernoulli { p: f64 },
}

// Unknown keys are rejected by the flattened law; serde cannot combine
// `deny_unknown_fields` with `flatten` on this struct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    #[serde(flatten)]
    pub law: CovariateLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelScenario {
    pub states: usize,
    pub first_year: i32,
    pub years: usize,
    /// Treatment year per state; `None` for never-treated states.
    pub treatment_years: Vec<Option<i32>>,
    pub pre: ModelParams<f64>,
    pub post: ModelParams<f64>,
    pub productivity: DistributionSpec<f64>,
    pub leisure: DistributionSpec<f64>,
    pub couples_per_cell: usize,
    #[serde(default)]
    pub noise: OutcomeNoise,
    #[serde(default)]
    pub hours: HoursSpec,
    #[serde(default)]
    pub marriage: MarriageSpec,
    #[serde(default)]
    pub trends: TrendSpec,
    /// Largest tolerated share of clamped cell probabilities.
    #[serde(default = "default_clamp_budget")]
    pub clamp_budget: f64,
    #[serde(default)]
    pub include_opposite_sex: bool,
    #[serde(default)]
    pub covariates: Vec<CovariateSpec>,
    pub seed: u64,
}

fn default_clamp_budget() -> f64 {
    0.05
}

/// Treatment years for `states` states over `years` years starting at
/// `first_year`. The first `round(never_share * states)` states are never
/// treated; the rest cycle through cohorts `first_year + 1 ..= last year`.
pub fn staggered_treatment_years(states: usize, first_year: i32, years: usize, never_share: f64) -> Vec<Option<i32>> {
    let never = ((never_share.clamp(0.0, 1.0)) * states as f64).round() as usize;
    let cohorts = years.saturating_sub(1).max(1);
    (0..states)
        .map(|s| {
            if s < never {
                None
            } else {
                let offset = if years > 1 { 1 + (s - never) % cohorts } else { 0 };
                Some(first_year + offset as i32)
            }
        })
        .collect()
}

impl PanelScenario {
    pub fn last_year(&self) -> i32 {
        self.first_year + self.years as i32 - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.states == 0 || self.years == 0 {
            return Err(Error::param("states", "need at least one state and one year"));
        }
        if self.treatment_years.len() != self.states {
            return Err(Error::param("treatment_years", "need one entry per state"));
        }
        for ty in self.treatment_years.iter().flatten() {
            if *ty < self.first_year || *ty > self.last_year() {
                return Err(Error::param("treatment_years", format!("{ty} outside the panel years")));
            }
        }
        if self.couples_per_cell == 0 {
            return Err(Error::param("couples_per_cell", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.clamp_budget) {
            return Err(Error::param("clamp_budget", "must lie in [0, 1]"));
        }
        let m = &self.marriage;
        for rate in [m.same_sex_pre, m.same_sex_post, m.opposite_sex] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::param("marriage", "rates must lie in [0, 1]"));
            }
        }
        if !(self.hours.mean.is_finite() && self.hours.sd >= 0.0) {
            return Err(Error::param("hours", "need finite mean and nonnegative sd"));
        }
        let t = &self.trends;
        if [t.linear_sd, t.quadratic_sd, t.year_shock_sd].iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::param("trends", "standard deviations must be finite and nonnegative"));
        }
        for c in &self.covariates {
            let ok = match c.law {
                CovariateLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
                CovariateLaw::Bernoulli { p } => (0.0..=1.0).contains(&p),
            };
            if !ok || c.name.is_empty() || RESERVED.contains(&c.name.as_str()) {
                return Err(Error::param("covariates", format!("bad covariate `{}`", c.name)));
            }
        }
        self.pre.validate()?;
        self.post.validate()?;
        Ok(())
    }

    pub fn is_treated(&self, state: usize, year: i32) -> bool {
        self.treatment_years[state].is_some_and(|ty| year >= ty)
    }

    pub fn groups(&self) -> Vec<CoupleGroup> {
        if self.include_opposite_sex {
            vec![CoupleGroup::SameSex, CoupleGroup::OppositeSex]
        } else {
            vec![CoupleGroup::SameSex]
        }
    }
}

const RESERVED: [&str; 8] =
    ["household_id", "state_id", "year", "group", "ssm", "both_working", "hours_total", "married"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupEffect {
    pub group: CoupleGroup,
    /// Per-partner employment probability before and after treatment.
    pub employment_pre: f64,
    pub employment_post: f64,
    /// Change in the probability that both partners work.
    pub both_working_effect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelMeta {
    pub couple_model: String,
    pub rng: String,
    pub seed: u64,
    pub effects: Vec<GroupEffect>,
    pub clamped_fraction: f64,
    pub pre_equilibrium: Equilibrium<f64>,
    pub post_equilibrium: Equilibrium<f64>,
}

/// Long-format couple records, stored by column.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub household_id: Vec<u64>,
    pub state_id: Vec<u32>,
    pub year: Vec<i32>,
    pub group: Vec<CoupleGroup>,
    pub ssm: Vec<u8>,
    pub both_working: Vec<f64>,
    pub hours_total: Vec<f64>,
    pub married: Vec<f64>,
    pub covariates: Vec<(String, Vec<f64>)>,
    pub meta: Option<PanelMeta>,
}

impl PanelDataset {
    pub fn len(&self) -> usize {
        self.household_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.household_id.is_empty()
    }

    fn with_capacity(n: usize, covariates: &[CovariateSpec]) -> Self {
        PanelDataset {
            household_id: Vec::with_capacity(n),
            state_id: Vec::with_capacity(n),
            year: Vec::with_capacity(n),
            group: Vec::with_capacity(n),
            ssm: Vec::with_capacity(n),
            both_working: Vec::with_capacity(n),
            hours_total: Vec::with_capacity(n),
            married: Vec::with_capacity(n),
            covariates: covariates.iter().map(|c| (c.name.clone(), Vec::with_capacity(n))).collect(),
            meta: None,
        }
    }

    /// Cluster label of each row (the state).
    pub fn cluster_labels(&self) -> &[u32] {
        &self.state_id
    }

    pub fn header(&self) -> Vec<String> {
        RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(self.covariates.iter().map(|(n, _)| n.clone()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let mut record: Vec<String> = Vec::with_capacity(8 + self.covariates.len());
        for i in 0..self.len() {
            record.clear();
            record.push(self.household_id[i].to_string());
            record.push(self.state_id[i].to_string());
            record.push(self.year[i].to_string());
            record.push(self.group[i].label().to_string());
            record.push(self.ssm[i].to_string());
            record.push(self.both_working[i].to_string());
            record.push(self.hours_total[i].to_string());
            record.push(self.married[i].to_string());
            for (_, col) in &self.covariates {
                record.push(col[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a panel written by [`write_csv`](Self::write_csv), checking the
    /// fixed columns and their value domains.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if header.len() < RESERVED.len() || header[..RESERVED.len()] != RESERVED {
            return Err(Error::DataValidation(format!(
                "panel header must start with {RESERVED:?}, found {header:?}"
            )));
        }
        let covs: Vec<CovariateSpec> = header[RESERVED.len()..]
            .iter()
            .map(|n| CovariateSpec { name: n.clone(), law: CovariateLaw::Bernoulli { p: 0.0 } })
            .collect();
        let mut panel = PanelDataset::with_capacity(0, &covs);
        let bad = |line: usize, what: &str| Error::DataValidation(format!("row {line}: bad {what}"));
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = line + 2;
            let num = |i: usize| rec.get(i).and_then(|s| s.parse::<f64>().ok()).filter(|v| v.is_finite());
            panel.household_id.push(rec[0].parse().map_err(|_| bad(line, "household_id"))?);
            panel.state_id.push(rec[1].parse().map_err(|_| bad(line, "state_id"))?);
            panel.year.push(rec[2].parse().map_err(|_| bad(line, "year"))?);
            panel.group.push(CoupleGroup::parse(&rec[3]).ok_or_else(|| bad(line, "group"))?);
            let ssm: u8 = rec[4].parse().map_err(|_| bad(line, "ssm"))?;
            if ssm > 1 {
                return Err(bad(line, "ssm"));
            }
            panel.ssm.push(ssm);
            panel.both_working.push(num(5).ok_or_else(|| bad(line, "both_working"))?);
            panel.hours_total.push(num(6).ok_or_else(|| bad(line, "hours_total"))?);
            panel.married.push(num(7).ok_or_else(|| bad(line, "married"))?);
            for (j, (name, col)) in panel.covariates.iter_mut().enumerate() {
                col.push(num(RESERVED.len() + j).ok_or_else(|| bad(line, name))?);
            }
        }
        Ok(panel)
    }

    /// Column table for the estimators. `group` becomes a categorical column.
    pub fn to_table(&self) -> Table {
        let num = |v: Vec<f64>| Column::Numeric(v);
        let mut t = Table::new();
        t.push("household_id", num(self.household_id.iter().map(|&v| v as f64).collect()));
        t.push("state_id", num(self.state_id.iter().map(|&v| v as f64).collect()));
        t.push("year", num(self.year.iter().map(|&v| v as f64).collect()));
        t.push("group", Column::categorical_from(self.group.iter().map(|g| g.label())));
        t.push("ssm", num(self.ssm.iter().map(|&v| v as f64).collect()));
        t.push("both_working", num(self.both_working.clone()));
        t.push("hours_total", num(self.hours_total.clone()));
        t.push("married", num(self.married.clone()));
        for (name, col) in &self.covariates {
            t.push(name, num(col.clone()));
        }
        t
    }
}

struct Regime {
    employment: [f64; 2],
}

fn group_index(g: CoupleGroup) -> usize {
    match g {
        CoupleGroup::SameSex => 0,
        CoupleGroup::OppositeSex => 1,
    }
}

/// Generates the panel described by `scenario`. Deterministic given the
/// scenario, including its seed.
pub fn generate_panel(scenario: &PanelScenario) -> Result<PanelDataset> {
    scenario.validate()?;
    let cfg = SolverConfig::default();
    let pre_eq = solve_equilibrium(&scenario.pre, &scenario.productivity, &scenario.leisure, &cfg)?;
    let post_eq = solve_equilibrium(&scenario.post, &scenario.productivity, &scenario.leisure, &cfg)?;
    let regime = |eq: &Equilibrium<f64>| Regime {
        employment: [eq.minority.employment_share, eq.majority.employment_share],
    };
    let regimes = [regime(&pre_eq), regime(&post_eq)];
    let groups = scenario.groups();

    // State trends and year shocks come from a stream no cell uses.
    let mut shock_rng = stream_rng(scenario.seed, u64::MAX);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, sd: f64| {
        if sd > 0.0 {
            Normal::new(0.0, sd).expect("validated sd").sample(rng)
        } else {
            0.0
        }
    };
    let t = &scenario.trends;
    let slopes: Vec<(f64, f64)> = (0..scenario.states)
        .map(|_| (draw(&mut shock_rng, t.linear_sd), draw(&mut shock_rng, t.quadratic_sd)))
        .collect();
    let year_shocks: Vec<f64> = (0..scenario.years).map(|_| draw(&mut shock_rng, t.year_shock_sd)).collect();

    let n = scenario.states * scenario.years * groups.len() * scenario.couples_per_cell;
    let mut panel = PanelDataset::with_capacity(n, &scenario.covariates);
    let hours_law = (scenario.hours.sd > 0.0)
        .then(|| Normal::new(scenario.hours.mean, scenario.hours.sd).expect("validated sd"));
    let draw_hours = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 {
        match &hours_law {
            Some(law) => law.sample(rng).round().clamp(1.0, 99.0),
            None => scenario.hours.mean,
        }
    };

    let mut cells = 0usize;
    let mut clamped = 0usize;
    let mut household = 0u64;
    for s in 0..scenario.states {
        for ti in 0..scenario.years {
            let year = scenario.first_year + ti as i32;
            let treated = scenario.is_treated(s, year);
            let regime = &regimes[treated as usize];
            let tf = ti as f64;
            let shift = slopes[s].0 * tf + slopes[s].1 * tf * tf + year_shocks[ti];
            for &g in &groups {
                let latent = regime.employment[group_index(g)] + shift;
                let e = latent.clamp(0.0, 1.0);
                cells += 1;
                if e != latent {
                    clamped += 1;
                }
                let marriage_rate = match (g, treated) {
                    (CoupleGroup::SameSex, false) => scenario.marriage.same_sex_pre,
                    (CoupleGroup::SameSex, true) => scenario.marriage.same_sex_post,
                    (CoupleGroup::OppositeSex, _) => scenario.marriage.opposite_sex,
                };
                let stream = ((s * scenario.years + ti) * 2 + group_index(g)) as u64;
                let mut rng = stream_rng(scenario.seed, stream);
                for _ in 0..scenario.couples_per_cell {
                    household += 1;
                    panel.household_id.push(household);
                    panel.state_id.push(s as u32 + 1);
                    panel.year.push(year);
                    panel.group.push(g);
                    panel.ssm.push(treated as u8);
                    match scenario.noise {
                        OutcomeNoise::Bernoulli => {
                            let first = rng.gen::<f64>() < e;
                            let second = rng.gen::<f64>() < e;
                            let mut hours = 0.0;
                            if first {
                                hours += draw_hours(&mut rng);
                            }
                            if second {
                                hours += draw_hours(&mut rng);
                            }
                            panel.both_working.push((first && second) as u8 as f64);
                            panel.hours_total.push(hours);
                            panel.married.push((rng.gen::<f64>() < marriage_rate) as u8 as f64);
                            for (spec, (_, col)) in scenario.covariates.iter().zip(panel.covariates.iter_mut()) {
                                col.push(match spec.law {
                                    CovariateLaw::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal),
                                    CovariateLaw::Bernoulli { p } => (rng.gen::<f64>() < p) as u8 as f64,
                                });
                            }
                        }
                        OutcomeNoise::Expected => {
                            panel.both_working.push(e * e);
                            panel.hours_total.push(2.0 * e * scenario.hours.mean);
                            panel.married.push(marriage_rate);
                            for (spec, (_, col)) in scenario.covariates.iter().zip(panel.covariates.iter_mut()) {
                                col.push(match spec.law {
                                    CovariateLaw::Normal { mean, .. } => mean,
                                    CovariateLaw::Bernoulli { p } => p,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    let clamped_fraction = clamped as f64 / cells as f64;
    if clamped_fraction > scenario.clamp_budget {
        return Err(Error::ClampBudget { fraction: clamped_fraction, budget: scenario.clamp_budget });
    }
    let effects = groups
        .iter()
        .map(|&g| {
            let (pre, post) = (regimes[0].employment[group_index(g)], regimes[1].employment[group_index(g)]);
            GroupEffect {
                group: g,
                employment_pre: pre,
                employment_post: post,
                both_working_effect: post * post - pre * pre,
            }
        })
        .collect();
    panel.meta = Some(PanelMeta {
        couple_model: COUPLE_MODEL.to_string(),
        rng: RNG_SCHEME.to_string(),
        seed: scenario.seed,
        effects,
        clamped_fraction,
        pre_equilibrium: pre_eq,
        post_equilibrium: post_eq,
    });
    Ok(panel)
}
