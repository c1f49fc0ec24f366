//! `labsearch` command-line driver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use output::OutputDir;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error {0}")]
    Config(String),
    #[error("{0}")]
    Run(labsearch::Error),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: labsearch::Error },
    #[error("{0} grid points failed to solve")]
    Unsolved(usize),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Run(e) | CliError::Stage { source: e, .. } => e.exit_code() as u8,
            CliError::Unsolved(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "labsearch", version, about = "Search model of labor-market discrimination, simulator and DiD estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Worker threads for replication and sweep parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the root-finding tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Solve the steady-state equilibrium.
    Solve,
    /// Comparative statics over the configured grids.
    Sweep,
    /// Check the predicted comparative-statics directions.
    Verify,
    /// Event-driven simulation compared with the analytic equilibrium.
    Simulate,
    /// Generate a synthetic state-year panel.
    GenPanel,
    /// Fit a regression to a CSV panel.
    Estimate,
    /// Calibrate, generate and estimate end to end.
    Pipeline,
    /// Rejection rate under a null treatment.
    Placebo,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::GenPanel => "gen-panel",
            Command::Estimate => "estimate",
            Command::Pipeline => "pipeline",
            Command::Placebo => "placebo",
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    cfg.seed = Some(cfg.seed());
    if cli.tolerance.is_some() {
        cfg.tolerance = cli.tolerance;
    }
    // Nothing is written until a command has validated its config.
    let mut out = OutputDir::new(&cli.out);
    let resolved = match cli.command {
        Command::Solve => commands::solve(cfg, &mut out)?,
        Command::Sweep => commands::sweep(cfg, &mut out)?,
        Command::Verify => commands::verify(cfg, &mut out)?,
        Command::Simulate => commands::simulate(cfg, &mut out)?,
        Command::GenPanel => commands::gen_panel(cfg, &mut out)?,
        Command::Estimate => commands::estimate(cfg, &mut out)?,
        Command::Pipeline => commands::pipeline(cfg, &mut out)?,
        Command::Placebo => commands::placebo(cfg, &mut out)?,
    };
    out.finish(cli.command.name(), &resolved)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
