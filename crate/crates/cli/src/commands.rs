//! One function per subcommand. Each resolves its config, computes, and
//! writes into the output directory.

use std::fmt::Write as _;

use labsearch::econometrics::{
    estimate_ddd, estimate_did, estimate_event_study, placebo_suite, PlaceboConfig, PlaceboReport,
    RegressionResult, RegressionSpec, Table,
};
use labsearch::model::{
    comparative_statics_sweep, mean_accepted_wage, solve_equilibrium, Metric, SweepParameter, SweepResult,
    WorkerOutcome, WorkerType,
};
use labsearch::simulator::{calibrate_shock, generate_panel, simulate_steady_state, Calibration, Estimate};
use labsearch::{Equilibrium, Params};
use serde::Serialize;

use crate::config::{Defaults, RunConfig};
use crate::output::OutputDir;
use crate::CliError;

fn run<T>(r: labsearch::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Run)
}

fn stage<T>(name: &'static str, r: labsearch::Result<T>) -> Result<T, CliError> {
    r.map_err(|source| CliError::Stage { stage: name, source })
}

#[derive(Serialize)]
struct SolveReport {
    params: Params,
    productivity: labsearch::Distribution,
    leisure: labsearch::Distribution,
    equilibrium: Equilibrium,
    mean_wage_minority: Option<f64>,
    mean_wage_majority: Option<f64>,
}

fn worker_row(out: &mut String, o: &WorkerOutcome<f64>, wage: Option<f64>) {
    let wage = wage.map_or("-".to_string(), |w| format!("{w:.10}"));
    let _ = writeln!(
        out,
        "{:<8} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14.10} {:>14}",
        o.worker.label(),
        o.reservation_value,
        o.unemployment_rate,
        o.participation_rate,
        o.employment_share,
        o.acceptance_prejudiced,
        o.acceptance_unprejudiced,
        wage
    );
}

pub fn solve(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let cfg = cfg.resolve(Defaults::Desk)?;
    let solver = cfg.solver();
    let eq = run(solve_equilibrium(&cfg.params(), &cfg.productivity(), &cfg.leisure(), &solver))?;
    let g = cfg.productivity();
    let wage = |w| mean_accepted_wage(w, &eq, &g, &solver.quad).ok();
    let report = SolveReport {
        params: cfg.params(),
        productivity: g,
        leisure: cfg.leisure(),
        mean_wage_minority: wage(WorkerType::Minority),
        mean_wage_majority: wage(WorkerType::Majority),
        equilibrium: eq,
    };
    let mut table = format!(
        "{:<8} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14} {:>14}\n",
        "worker", "reservation", "unemployment", "participation", "employment", "accept_P", "accept_N", "mean_wage"
    );
    worker_row(&mut table, &eq.minority, report.mean_wage_minority);
    worker_row(&mut table, &eq.majority, report.mean_wage_majority);
    match eq.segregation_share {
        Some(s) => writeln!(table, "minority share employed at unprejudiced firms: {s:.10}"),
        None => writeln!(table, "minority share employed at unprejudiced firms: undefined (no employment)"),
    }
    .expect("string write");
    print!("{table}");
    out.write_json("equilibrium.json", &report)?;
    out.write_text("equilibrium.txt", &table)?;
    Ok(cfg)
}

fn sweep_csv(result: &SweepResult<f64>) -> String {
    let mut s = String::from(
        "value,reservation_value,unemployment,participation,employment,segregation,mean_wage,error\n",
    );
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    for p in &result.points {
        let eq = p.equilibrium.as_ref();
        let _ = writeln!(
            s,
            "{:e},{},{},{},{},{},{},{}",
            p.value,
            opt(eq.map(|e| e.minority.reservation_value)),
            opt(eq.map(|e| e.minority.unemployment_rate)),
            opt(eq.map(|e| e.minority.participation_rate)),
            opt(eq.map(|e| e.minority.employment_share)),
            opt(eq.and_then(|e| e.segregation_share)),
            opt(p.mean_wage),
            p.error.as_deref().unwrap_or("").replace(',', ";")
        );
    }
    s
}

fn sweeps(cfg: &RunConfig, normalize: bool) -> Result<Vec<SweepResult<f64>>, CliError> {
    let section = cfg.sweep.clone().unwrap_or_default();
    let mut results = Vec::new();
    for (param, grid) in [(SweepParameter::D, &section.d), (SweepParameter::LambdaG, &section.lambda_g)] {
        let Some(grid) = grid else { continue };
        let values = if normalize { grid.normalized() } else { grid.values() };
        let r = comparative_statics_sweep(&cfg.params(), &cfg.productivity(), &cfg.leisure(), param, &values, &cfg.solver())
            .map_err(|e| match e {
                labsearch::Error::InvalidGrid(m) => CliError::Config(format!("at `sweep.{}`: {m}", param.name())),
                other => CliError::Run(other),
            })?;
        results.push(r);
    }
    if results.is_empty() {
        return Err(CliError::Config("at `sweep`: no grid given".into()));
    }
    Ok(results)
}

pub fn sweep(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let cfg = cfg.resolve(Defaults::Desk)?;
    let results = sweeps(&cfg, false)?;
    for r in &results {
        out.write_text(&format!("sweep_{}.csv", r.parameter.name()), &sweep_csv(r))?;
        println!("{}: {} points, {} failed", r.parameter.name(), r.points.len(), r.failures);
    }
    out.write_json("sweep.json", &results)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct Claim {
    name: &'static str,
    parameter: SweepParameter,
    metrics: Vec<Metric>,
    holds: bool,
    violations: usize,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    claims: Vec<Claim>,
    segregation_at_zero_disutility: Option<f64>,
    one_minus_p: f64,
    sweeps: &'a [SweepResult<f64>],
}

pub fn verify(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let cfg = cfg.resolve(Defaults::Desk)?;
    let results = sweeps(&cfg, true)?;
    let mut claims = Vec::new();
    let mut seg_at_zero = None;
    for r in &results {
        let groups: &[(&'static str, &[Metric])] = match r.parameter {
            SweepParameter::D => &[
                ("disutility_lowers_wage_employment_participation", &[Metric::MeanWage, Metric::Unemployment, Metric::Participation]),
                ("disutility_raises_segregation", &[Metric::Segregation]),
            ],
            SweepParameter::LambdaG => &[(
                "arrival_rate_raises_wage_employment_participation",
                &[Metric::MeanWage, Metric::Unemployment, Metric::Participation],
            )],
        };
        for (name, metrics) in groups {
            let verdicts: Vec<_> = metrics.iter().filter_map(|m| r.verdict(*m)).collect();
            claims.push(Claim {
                name,
                parameter: r.parameter,
                metrics: metrics.to_vec(),
                holds: r.failures == 0 && verdicts.iter().all(|v| v.holds != Some(false)),
                violations: verdicts.iter().map(|v| v.violations).sum(),
            });
        }
        if r.parameter == SweepParameter::D && r.grid.first() == Some(&0.0) {
            seg_at_zero = r.points[0].metric(Metric::Segregation);
        }
    }
    for c in &claims {
        println!("{}: {} ({} violations)", c.name, if c.holds { "PASS" } else { "FAIL" }, c.violations);
    }
    let mut grid_text = String::new();
    for r in &results {
        let _ = writeln!(grid_text, "# {}", r.parameter.name());
        grid_text.push_str(&sweep_csv(r));
        out.write_text(&format!("verify_{}.csv", r.parameter.name()), &sweep_csv(r))?;
    }
    print!("{grid_text}");
    out.write_json(
        "verify.json",
        &VerifyReport {
            claims,
            segregation_at_zero_disutility: seg_at_zero,
            one_minus_p: 1.0 - cfg.params().p,
            sweeps: &results,
        },
    )?;
    let failed: usize = results.iter().map(|r| r.failures).sum();
    if failed > 0 {
        return Err(CliError::Unsolved(failed));
    }
    Ok(cfg)
}

#[derive(Serialize)]
struct Comparison {
    worker: &'static str,
    metric: &'static str,
    analytic: f64,
    simulated: Option<Estimate>,
    z: Option<f64>,
}

pub fn simulate(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let cfg = cfg.resolve(Defaults::Desk)?;
    let sim = cfg.sim_config()?;
    let eq = run(solve_equilibrium(&cfg.params(), &cfg.productivity(), &cfg.leisure(), &cfg.solver()))?;
    let stats = run(simulate_steady_state(&cfg.params(), &cfg.productivity(), &cfg.leisure(), &eq, &sim))?;
    let mut rows = Vec::new();
    for w in WorkerType::ALL {
        let (o, s) = (eq.worker(w), stats.worker(w));
        let mut push = |metric, analytic: f64, est: Option<Estimate>| {
            rows.push(Comparison { worker: w.label(), metric, analytic, z: est.map(|e| e.z_distance(analytic)), simulated: est });
        };
        push("unemployment", o.unemployment_rate, s.unemployment);
        push("participation", o.participation_rate, Some(s.participation));
        if w == WorkerType::Minority {
            if let Some(seg) = eq.segregation_share {
                push("segregation", seg, s.segregation);
            }
        }
    }
    let mut csv = String::from("worker,metric,analytic,simulated,std_error,z\n");
    for r in &rows {
        let (est, se) = r.simulated.map_or((String::new(), String::new()), |e| (format!("{:e}", e.estimate), format!("{:e}", e.std_error)));
        let _ = writeln!(csv, "{},{},{:e},{est},{se},{}", r.worker, r.metric, r.analytic, r.z.map_or(String::new(), |z| format!("{z:e}")));
    }
    for r in &rows {
        println!(
            "{} {:<14} analytic {:.6}  simulated {}  z {}",
            r.worker,
            r.metric,
            r.analytic,
            r.simulated.map_or("-".into(), |e| format!("{:.6} ({:.6})", e.estimate, e.std_error)),
            r.z.map_or("-".into(), |z| format!("{z:.2}"))
        );
    }
    out.write_text("comparison.csv", &csv)?;
    out.write_json("simulation.json", &serde_json::json!({ "equilibrium": eq, "stats": stats, "comparison": rows }))?;
    Ok(cfg)
}

fn calibrated(cfg: &RunConfig) -> Result<Option<Calibration<f64>>, CliError> {
    let Some(c) = &cfg.calibration else { return Ok(None) };
    let r = calibrate_shock(&cfg.params(), &cfg.productivity(), &cfg.leisure(), c.target_effect, c.outcome, c.knob, c.bounds, &cfg.solver());
    match r {
        Ok(c) => Ok(Some(c)),
        Err(e) if e.exit_code() == 1 => Err(CliError::Config(format!("at `calibration`: {e}"))),
        Err(e) => Err(CliError::Stage { stage: "calibrate", source: e }),
    }
}

pub fn gen_panel(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let cfg = cfg.resolve(Defaults::Pipeline)?;
    let calibration = calibrated(&cfg)?;
    let post = calibration.as_ref().map_or(cfg.params(), |c| c.post);
    let scenario = cfg.scenario(post, cfg.seed())?;
    let panel = stage("generate", generate_panel(&scenario))?;
    out.write_with("panel.csv", |buf| panel.write_csv(buf))?;
    out.write_json("panel_meta.json", &serde_json::json!({ "scenario": scenario, "meta": panel.meta }))?;
    if let Some(c) = &calibration {
        out.write_json("calibration.json", c)?;
    }
    println!("{} rows written", panel.len());
    Ok(cfg)
}

fn estimate_any(table: &Table, spec: &RegressionSpec) -> labsearch::Result<RegressionResult<f64>> {
    if spec.group.is_some() {
        estimate_ddd(table, spec)
    } else if spec.event_window.is_some() {
        estimate_event_study(table, spec)
    } else {
        estimate_did(table, spec)
    }
}

fn write_result(out: &mut OutputDir, stem: &str, r: &RegressionResult<f64>) -> Result<(), CliError> {
    out.write_json(&format!("{stem}.json"), r)?;
    out.write_with(&format!("{stem}_coefficients.csv"), |buf| r.write_csv(buf))?;
    let c = r.focus_coefficient();
    println!("{stem}: {} = {:.6} (se {:.6}, t {:.3}), n = {}, clusters = {}", c.name, c.estimate, c.std_error, c.t_stat, r.n_obs, r.n_clusters);
    Ok(())
}

pub fn estimate(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let data = cfg.data.clone().ok_or_else(|| CliError::Config("at `data.path`: estimate needs a CSV".into()))?;
    let spec = cfg.regression()?;
    let table = run(Table::read_csv_path(&data.path))?;
    let r = run(estimate_any(&table, &spec))?;
    write_result(out, "estimate", &r)?;
    Ok(cfg)
}

fn null_placebo(cfg: &RunConfig, spec: &RegressionSpec, seed: u64) -> Result<PlaceboReport, CliError> {
    let p = cfg.placebo()?;
    let scenario = cfg.scenario(cfg.params(), seed)?;
    let report = placebo_suite(&scenario, spec, &PlaceboConfig { n_reps: p.n_reps, level: p.level, seed });
    report.map_err(|e| CliError::Stage { stage: "placebo", source: e })
}

fn print_placebo(r: &PlaceboReport) {
    println!(
        "placebo: {} of {} rejected at level {} (rate {:.4}, 95% CI {:.4}-{:.4})",
        r.rejections, r.n_reps, r.level, r.rejection_rate, r.rate_interval.0, r.rate_interval.1
    );
}

pub fn placebo(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let mut cfg = cfg.resolve(Defaults::Pipeline)?;
    cfg.placebo = Some(cfg.placebo()?);
    let report = null_placebo(&cfg, &cfg.regression()?, cfg.seed())?;
    print_placebo(&report);
    out.write_json("placebo.json", &report)?;
    Ok(cfg)
}

#[derive(Serialize)]
struct PipelineSummary {
    target_effect: f64,
    analytic_effect: f64,
    estimate: f64,
    std_error: f64,
    t_stat: f64,
    ci95: (f64, f64),
    /// Whether the analytic effect lies inside the 95% interval.
    covers_analytic: bool,
    leads: Vec<(String, f64, f64)>,
    placebo_rejection_rate: Option<f64>,
}

pub fn pipeline(cfg: RunConfig, out: &mut OutputDir) -> Result<RunConfig, CliError> {
    let mut cfg = cfg.resolve(Defaults::Pipeline)?;
    cfg.calibration.get_or_insert_with(Default::default);
    let calibration = calibrated(&cfg)?.expect("calibration section set");
    out.write_json("calibration.json", &calibration)?;

    let scenario = cfg.scenario(calibration.post, cfg.seed())?;
    let panel = stage("generate", generate_panel(&scenario))?;
    out.write_with("panel.csv", |buf| panel.write_csv(buf))?;
    out.write_json("panel_meta.json", &serde_json::json!({ "scenario": scenario, "meta": panel.meta }))?;
    let table = panel.to_table();

    let mut spec = cfg.regression()?;
    spec.event_window = None;
    spec.group = None;
    let did = stage("estimate_did", estimate_did(&table, &spec))?;
    write_result(out, "did", &did)?;

    let mut leads = Vec::new();
    if let Some(window) = cfg.event_study {
        let es_spec = RegressionSpec { event_window: Some(window), ..spec.clone() };
        let es = stage("estimate_event_study", estimate_event_study(&table, &es_spec))?;
        write_result(out, "event_study", &es)?;
        leads = es.terms_with_prefix("lead_").map(|c| (c.name.clone(), c.estimate, c.std_error)).collect();
    }

    let mut placebo_rate = None;
    if cfg.placebo.is_some() {
        let report = null_placebo(&cfg, &spec, cfg.seed().wrapping_add(1))?;
        print_placebo(&report);
        placebo_rate = Some(report.rejection_rate);
        out.write_json("placebo.json", &report)?;
    }

    let c = did.focus_coefficient();
    let z = labsearch::econometrics::critical_value(0.05).expect("valid level");
    let ci = (c.estimate - z * c.std_error, c.estimate + z * c.std_error);
    let summary = PipelineSummary {
        target_effect: calibration.target_effect,
        analytic_effect: calibration.achieved_effect,
        estimate: c.estimate,
        std_error: c.std_error,
        t_stat: c.t_stat,
        ci95: ci,
        covers_analytic: ci.0 <= calibration.achieved_effect && calibration.achieved_effect <= ci.1,
        leads,
        placebo_rejection_rate: placebo_rate,
    };
    println!(
        "analytic effect {:.6}; estimate {:.6} (95% CI {:.6} to {:.6})",
        summary.analytic_effect, summary.estimate, ci.0, ci.1
    );
    out.write_json("summary.json", &summary)?;
    Ok(cfg)
}
