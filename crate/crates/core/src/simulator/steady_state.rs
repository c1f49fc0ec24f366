//! Event-driven simulation of individual worker histories.
//!
//! Each participating agent alternates between unemployment, left at rate λ_J
//! through meetings, and employment, ended at rate η. Meetings draw a firm type
//! and a productivity; the match forms iff productivity clears the
//! equilibrium acceptance threshold. Waiting times are drawn exactly from
//! exponential clocks, so there is no discretization error.

use rand::Rng;
use rand_distr::{Distribution as _, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{stream_rng, RNG_SCHEME};
use crate::error::{Error, Result};
use crate::model::{acceptance_threshold, wage, DistributionSpec, Equilibrium, FirmType, ModelParams, WorkerType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Agents of each worker type.
    pub n_agents: usize,
    pub horizon: f64,
    pub burn_in: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::param("n_agents", "must be at least 1"));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0) {
            return Err(Error::param("burn_in", "must be finite and nonnegative"));
        }
        if !(self.horizon.is_finite() && self.horizon > self.burn_in) {
            return Err(Error::param("horizon", "must be finite and exceed burn_in"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Employed { wage: f64, firm: FirmType, productivity: f64 },
    Unemployed,
    NonParticipant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub worker: WorkerType,
    pub leisure_value: f64,
    pub status: Status,
    /// Post-burn-in time spent employed, unemployed, out of the labor force.
    pub time_employed: f64,
    pub time_unemployed: f64,
    pub time_out: f64,
}

/// Point estimate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    /// `|estimate - truth|` in standard errors. Infinite when the standard
    /// error is zero and the estimate is off.
    pub fn z_distance(&self, truth: f64) -> f64 {
        let gap = (self.estimate - truth).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }
}

/// Ratio estimator `Σa / Σb` over independent units with a delta-method
/// standard error.
fn ratio(pairs: &[(f64, f64)]) -> Option<Estimate> {
    let n = pairs.len();
    let den: f64 = pairs.iter().map(|p| p.1).sum();
    if n == 0 || den <= 0.0 {
        return None;
    }
    let num: f64 = pairs.iter().map(|p| p.0).sum();
    let r = num / den;
    let ss: f64 = pairs.iter().map(|&(a, b)| (a - r * b).powi(2)).sum();
    let correction = if n > 1 { n as f64 / (n as f64 - 1.0) } else { 1.0 };
    Some(Estimate { estimate: r, std_error: (ss * correction).sqrt() / den, n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerSimStats {
    pub worker: WorkerType,
    pub agents: usize,
    pub participants: usize,
    pub participation: Estimate,
    pub unemployment: Option<Estimate>,
    /// Share of employed time spent at unprejudiced firms.
    pub segregation: Option<Estimate>,
    /// Time-weighted mean wage over employed spells.
    pub mean_wage: Option<Estimate>,
    pub mean_wage_prejudiced: Option<Estimate>,
    pub mean_wage_unprejudiced: Option<Estimate>,
    pub min_wage: Option<f64>,
    /// Hires per unit of unemployed time.
    pub job_finding_rate: Option<Estimate>,
    /// Separations per unit of employed time.
    pub separation_rate: Option<Estimate>,
    pub agent_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    pub minority: WorkerSimStats,
    pub majority: WorkerSimStats,
    pub total_agent_time: f64,
    pub config: SimConfig,
    pub rng: String,
}

impl SimStats {
    pub fn worker(&self, worker: WorkerType) -> &WorkerSimStats {
        match worker {
            WorkerType::Minority => &self.minority,
            WorkerType::Majority => &self.majority,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    participates: bool,
    unemployed: f64,
    employed: f64,
    employed_unprejudiced: f64,
    employed_prejudiced: f64,
    wage_time: f64,
    wage_time_unprejudiced: f64,
    wage_time_prejudiced: f64,
    hires: f64,
    separations: f64,
    min_wage: f64,
}

struct Clocks {
    meeting: Option<Exp<f64>>,
    destruction: Exp<f64>,
}

fn overlap(start: f64, end: f64, from: f64) -> f64 {
    (end - start.max(from)).max(0.0)
}

#[allow(clippy::too_many_arguments)]
fn run_agent(
    worker: WorkerType,
    stream: u64,
    params: &ModelParams<f64>,
    productivity: &DistributionSpec<f64>,
    leisure: &DistributionSpec<f64>,
    eq: &Equilibrium<f64>,
    clocks: &Clocks,
    cfg: &SimConfig,
) -> (AgentState, Tally) {
    let mut rng = stream_rng(cfg.seed, stream);
    let z = leisure.sample(&mut rng);
    let v = eq.reservation_value(worker);
    let mut tally = Tally { min_wage: f64::INFINITY, ..Tally::default() };
    let mut state = AgentState {
        worker,
        leisure_value: z,
        status: Status::Unemployed,
        time_employed: 0.0,
        time_unemployed: 0.0,
        time_out: 0.0,
    };
    if z >= v {
        state.status = Status::NonParticipant;
        state.time_out = cfg.horizon - cfg.burn_in;
        return (state, tally);
    }
    tally.participates = true;
    let mut t = 0.0;
    while t < cfg.horizon {
        match state.status {
            Status::Unemployed => {
                let wait = match &clocks.meeting {
                    Some(clock) => clock.sample(&mut rng),
                    None => f64::INFINITY,
                };
                let end = (t + wait).min(cfg.horizon);
                let spell = overlap(t, end, cfg.burn_in);
                tally.unemployed += spell;
                state.time_unemployed += spell;
                if t + wait >= cfg.horizon {
                    break;
                }
                t += wait;
                let firm = if rng.gen::<f64>() < params.p {
                    FirmType::Prejudiced
                } else {
                    FirmType::Unprejudiced
                };
                let x = productivity.sample(&mut rng);
                if x >= acceptance_threshold(worker, firm, eq) {
                    let w = wage(x, worker, firm, eq).expect("match cleared its threshold");
                    state.status = Status::Employed { wage: w, firm, productivity: x };
                    if t >= cfg.burn_in {
                        tally.hires += 1.0;
                    }
                }
            }
            Status::Employed { wage: w, firm, .. } => {
                let wait = clocks.destruction.sample(&mut rng);
                let end = (t + wait).min(cfg.horizon);
                let spell = overlap(t, end, cfg.burn_in);
                tally.employed += spell;
                state.time_employed += spell;
                tally.wage_time += w * spell;
                match firm {
                    FirmType::Prejudiced => {
                        tally.employed_prejudiced += spell;
                        tally.wage_time_prejudiced += w * spell;
                    }
                    FirmType::Unprejudiced => {
                        tally.employed_unprejudiced += spell;
                        tally.wage_time_unprejudiced += w * spell;
                    }
                }
                if spell > 0.0 {
                    tally.min_wage = tally.min_wage.min(w);
                }
                if t + wait >= cfg.horizon {
                    break;
                }
                t += wait;
                state.status = Status::Unemployed;
                if t >= cfg.burn_in {
                    tally.separations += 1.0;
                }
            }
            Status::NonParticipant => unreachable!("non-participants are not simulated"),
        }
    }
    (state, tally)
}

fn summarize(worker: WorkerType, tallies: &[Tally], cfg: &SimConfig) -> WorkerSimStats {
    let agents = tallies.len();
    let window = cfg.horizon - cfg.burn_in;
    let part: Vec<&Tally> = tallies.iter().filter(|t| t.participates).collect();
    let participants = part.len();
    let l = participants as f64 / agents as f64;
    let participation = Estimate {
        estimate: l,
        std_error: (l * (1.0 - l) / agents as f64).sqrt(),
        n: agents,
    };
    let collect = |f: &dyn Fn(&Tally) -> (f64, f64)| -> Vec<(f64, f64)> {
        part.iter().map(|t| f(t)).collect()
    };
    let unemployment = ratio(&collect(&|t| (t.unemployed, window)));
    let segregation = ratio(&collect(&|t| (t.employed_unprejudiced, t.employed)));
    let mean_wage = ratio(&collect(&|t| (t.wage_time, t.employed)));
    let mean_wage_prejudiced = ratio(&collect(&|t| (t.wage_time_prejudiced, t.employed_prejudiced)));
    let mean_wage_unprejudiced =
        ratio(&collect(&|t| (t.wage_time_unprejudiced, t.employed_unprejudiced)));
    let job_finding_rate = ratio(&collect(&|t| (t.hires, t.unemployed)));
    let separation_rate = ratio(&collect(&|t| (t.separations, t.employed)));
    let min_wage = part.iter().map(|t| t.min_wage).fold(f64::INFINITY, f64::min);
    WorkerSimStats {
        worker,
        agents,
        participants,
        participation,
        unemployment,
        segregation,
        mean_wage,
        mean_wage_prejudiced,
        mean_wage_unprejudiced,
        min_wage: min_wage.is_finite().then_some(min_wage),
        job_finding_rate,
        separation_rate,
        agent_time: window * agents as f64,
    }
}

/// Simulates `n_agents` independent workers of each type and returns
/// time-averaged statistics over `[burn_in, horizon]`. Acceptance thresholds
/// and wages come from `eq`, which must be the equilibrium of `params`.
pub fn simulate_steady_state(
    params: &ModelParams<f64>,
    productivity: &DistributionSpec<f64>,
    leisure: &DistributionSpec<f64>,
    eq: &Equilibrium<f64>,
    cfg: &SimConfig,
) -> Result<SimStats> {
    cfg.validate()?;
    params.validate()?;
    if eq.params != *params {
        return Err(Error::ContractViolation(
            "equilibrium was solved for different parameters".into(),
        ));
    }
    let destruction = Exp::new(params.eta).map_err(|e| Error::param("eta", e.to_string()))?;
    let mut per_worker = Vec::with_capacity(2);
    for (offset, worker) in WorkerType::ALL.into_iter().enumerate() {
        let lambda = params.arrival_rate(worker);
        let clocks = Clocks {
            meeting: (lambda > 0.0).then(|| Exp::new(lambda).expect("positive rate")),
            destruction,
        };
        let base = (offset * cfg.n_agents) as u64;
        let tallies: Vec<Tally> = (0..cfg.n_agents)
            .into_par_iter()
            .map(|i| {
                run_agent(worker, base + i as u64, params, productivity, leisure, eq, &clocks, cfg).1
            })
            .collect();
        per_worker.push(summarize(worker, &tallies, cfg));
    }
    let majority = per_worker.pop().expect("two worker types");
    let minority = per_worker.pop().expect("two worker types");
    Ok(SimStats {
        total_agent_time: minority.agent_time + majority.agent_time,
        minority,
        majority,
        config: *cfg,
        rng: RNG_SCHEME.to_string(),
    })
}

/// Runs a single agent and returns its final state; exposed for inspection
/// and tests of the per-agent invariants.
pub fn simulate_agent(
    worker: WorkerType,
    agent: u64,
    params: &ModelParams<f64>,
    productivity: &DistributionSpec<f64>,
    leisure: &DistributionSpec<f64>,
    eq: &Equilibrium<f64>,
    cfg: &SimConfig,
) -> Result<AgentState> {
    cfg.validate()?;
    let lambda = params.arrival_rate(worker);
    let clocks = Clocks {
        meeting: (lambda > 0.0).then(|| Exp::new(lambda).expect("positive rate")),
        destruction: Exp::new(params.eta).map_err(|e| Error::param("eta", e.to_string()))?,
    };
    Ok(run_agent(worker, agent, params, productivity, leisure, eq, &clocks, cfg).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{solve_equilibrium, SolverConfig};

    fn setup(params: ModelParams<f64>) -> (ModelParams<f64>, DistributionSpec<f64>, DistributionSpec<f64>, Equilibrium<f64>) {
        let g = DistributionSpec::Exponential { rate: 1.0 };
        let q = DistributionSpec::Uniform { lower: 0.0, upper: 3.0 };
        let eq = solve_equilibrium(&params, &g, &q, &SolverConfig::default()).unwrap();
        (params, g, q, eq)
    }

    #[test]
    fn no_meetings_means_full_unemployment() {
        let params = ModelParams { lambda_g: 0.0, lambda_s: 0.0, ..ModelParams::baseline() };
        let (params, g, q, eq) = setup(params);
        let cfg = SimConfig { n_agents: 4000, horizon: 20.0, burn_in: 5.0, seed: 3 };
        let stats = simulate_steady_state(&params, &g, &q, &eq, &cfg).unwrap();
        for w in WorkerType::ALL {
            let s = stats.worker(w);
            assert_eq!(s.unemployment.unwrap().estimate, 1.0);
            assert!(s.participation.z_distance(q.cdf(params.b)) < 3.0);
            assert!(s.mean_wage.is_none());
        }
    }

    #[test]
    fn fair_economy_segregation_is_firm_share() {
        let (params, g, q, eq) = setup(ModelParams::baseline().with_d(0.0));
        let cfg = SimConfig { n_agents: 5000, horizon: 120.0, burn_in: 40.0, seed: 11 };
        let stats = simulate_steady_state(&params, &g, &q, &eq, &cfg).unwrap();
        assert!(stats.minority.segregation.unwrap().z_distance(0.7) < 3.0);
    }

    #[test]
    fn flow_balance_and_wage_floor() {
        let (params, g, q, eq) = setup(ModelParams::baseline());
        let cfg = SimConfig { n_agents: 5000, horizon: 150.0, burn_in: 50.0, seed: 5 };
        let stats = simulate_steady_state(&params, &g, &q, &eq, &cfg).unwrap();
        for w in WorkerType::ALL {
            let o = eq.worker(w);
            let s = stats.worker(w);
            let finding = params.arrival_rate(w)
                * (params.p * o.acceptance_prejudiced + (1.0 - params.p) * o.acceptance_unprejudiced);
            assert!(s.job_finding_rate.unwrap().z_distance(finding) < 3.0);
            assert!(s.separation_rate.unwrap().z_distance(params.eta) < 3.0);
            let floor = s.min_wage.unwrap();
            assert!(floor >= o.reservation_value - 1e-12);
            assert!(floor - o.reservation_value < 0.01);
        }
    }

    #[test]
    fn agent_invariants() {
        let (params, g, q, eq) = setup(ModelParams::baseline());
        let cfg = SimConfig { n_agents: 1, horizon: 30.0, burn_in: 0.0, seed: 9 };
        for i in 0..200 {
            let a = simulate_agent(WorkerType::Minority, i, &params, &g, &q, &eq, &cfg).unwrap();
            let v = eq.minority.reservation_value;
            assert_eq!(matches!(a.status, Status::NonParticipant), a.leisure_value >= v);
            if let Status::Employed { wage: w, firm, productivity } = a.status {
                let expected = crate::model::wage(productivity, WorkerType::Minority, firm, &eq).unwrap();
                assert_eq!(w, expected);
            }
            let total = a.time_employed + a.time_unemployed + a.time_out;
            assert!((total - 30.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_config_and_mismatched_equilibrium() {
        let (params, g, q, eq) = setup(ModelParams::baseline());
        let bad = SimConfig { n_agents: 10, horizon: 5.0, burn_in: 5.0, seed: 0 };
        assert!(simulate_steady_state(&params, &g, &q, &eq, &bad).is_err());
        let ok = SimConfig { n_agents: 10, horizon: 10.0, burn_in: 5.0, seed: 0 };
        assert!(matches!(
            simulate_steady_state(&params.with_d(0.5), &g, &q, &eq, &ok),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn deterministic_for_seed() {
        let (params, g, q, eq) = setup(ModelParams::baseline());
        let cfg = SimConfig { n_agents: 300, horizon: 40.0, burn_in: 10.0, seed: 21 };
        let a = simulate_steady_state(&params, &g, &q, &eq, &cfg).unwrap();
        let b = simulate_steady_state(&params, &g, &q, &eq, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
