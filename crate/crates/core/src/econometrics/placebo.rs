//! Monte Carlo replication and size checks under a null treatment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::design::RegressionSpec;
use super::estimate::{critical_value, fit, RegressionResult};
use super::table::Table;
use crate::error::{Error, Result};
use crate::simulator::panel::{generate_panel, PanelMeta, PanelScenario};
use crate::simulator::rng::replication_seed;

/// Runs `f` on `n_reps` panels drawn from `scenario`, replication `r` using
/// seed `replication_seed(seed, r)`. Results are in replication order.
pub fn replicate<R, F>(scenario: &PanelScenario, n_reps: usize, seed: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&Table, &PanelMeta) -> Result<R> + Sync,
{
    (0..n_reps)
        .into_par_iter()
        .map(|r| {
            let mut sc = scenario.clone();
            sc.seed = replication_seed(seed, r as u64);
            let panel = generate_panel(&sc)?;
            let meta = panel.meta.clone().expect("generated panels carry metadata");
            f(&panel.to_table(), &meta)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaceboConfig {
    pub n_reps: usize,
    /// Nominal two-sided test level.
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceboReport {
    pub n_reps: usize,
    pub level: f64,
    pub critical_value: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
    /// 95% Wilson interval for the rejection rate.
    pub rate_interval: (f64, f64),
    pub mean_estimate: f64,
    pub sd_estimate: f64,
    pub mean_std_error: f64,
}

pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Fraction of null replications whose focus coefficient is rejected at
/// `level` with cluster-robust standard errors. The scenario must carry no
/// treatment effect.
pub fn placebo_suite(scenario: &PanelScenario, spec: &RegressionSpec, cfg: &PlaceboConfig) -> Result<PlaceboReport> {
    if cfg.n_reps < 100 {
        return Err(Error::param("n_reps", "placebo suites need at least 100 replications"));
    }
    let crit = critical_value(cfg.level)?;
    let estimates: Vec<(f64, f64, f64)> = replicate(scenario, cfg.n_reps, cfg.seed, |table, meta| {
        if let Some(e) = meta.effects.iter().find(|e| e.both_working_effect.abs() > 1e-12) {
            return Err(Error::param(
                "scenario",
                format!("placebo needs a null scenario; group {} has effect {:e}", e.group.label(), e.both_working_effect),
            ));
        }
        let r: RegressionResult<f64> = fit(table, spec)?;
        let c = r.focus_coefficient();
        Ok((c.estimate, c.std_error, c.t_stat))
    })?;
    let n = estimates.len() as f64;
    let rejections = estimates.iter().filter(|(_, _, t)| t.abs() >= crit).count();
    let mean = estimates.iter().map(|e| e.0).sum::<f64>() / n;
    let sd = (estimates.iter().map(|e| (e.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    Ok(PlaceboReport {
        n_reps: cfg.n_reps,
        level: cfg.level,
        critical_value: crit,
        rejections,
        rejection_rate: rejections as f64 / n,
        rate_interval: wilson_interval(rejections, cfg.n_reps, critical_value(0.05)?),
        mean_estimate: mean,
        sd_estimate: sd,
        mean_std_error: estimates.iter().map(|e| e.1).sum::<f64>() / n,
    })
}
