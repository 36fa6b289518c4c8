//! The `detmcvi` command line: instance generation, solving, evaluation and
//! export.
//!
//! Exit codes: [`EXIT_CONVERGED`] when a solve met its stopping criterion or
//! any other command succeeded, [`EXIT_BUDGET`] when a solve ran out of time,
//! nodes or iterations, and [`EXIT_USAGE`] for bad arguments or input files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{solve_aostar, solve_qmdp_tree, AoStarConfig, QmdpConfig};
use crate::domains::{ctp, maze, CtpParams, Instance, ObserveMode, SortInstance};
use crate::error::{Error, Result};
use crate::eval::{downsample, run_trials, summarize, write_summary_csv, write_trials_csv, TrialConfig};
use crate::fsc::{to_dot, to_dot_labelled, Fsc};
use crate::solver::{solve, SolveStatus, SolverConfig, SuccessCheck};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable bounding the number of cached controller values.
pub const CACHE_SIZE_VAR: &str = "DETMCVI_CACHE_SIZE";

#[derive(Debug, Parser)]
#[command(name = "detmcvi", version, about = "Finite-state controllers for deterministic POMDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a benchmark instance file.
    Gen(GenArgs),
    /// Plan a policy for an instance.
    Solve(SolveArgs),
    /// Simulate a policy on an instance.
    Eval(EvalArgs),
    /// Print a policy as Graphviz DOT or JSON.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Ctp,
    Maze,
    Sort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observe {
    AtNode,
    OnTraverse,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    pub domain: Domain,
    /// CTP node count, maze side length or number of items to sort.
    #[arg(short, long, default_value_t = 5)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CTP: exact number of uncertain edges.
    #[arg(long)]
    pub stochastic_edges: Option<usize>,
    /// CTP: fraction of non-backbone edges made uncertain.
    #[arg(long, default_value_t = 0.5)]
    pub stochastic_fraction: f64,
    /// CTP: nearest neighbours joined to each node.
    #[arg(long, default_value_t = 4)]
    pub edge_degree: usize,
    /// CTP: when edge statuses are observed.
    #[arg(long, value_enum, default_value_t = Observe::AtNode)]
    pub observe: Observe,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    Detmcvi,
    Aostar,
    QmdpTree,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Solver::Detmcvi)]
    pub solver: Solver,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub max_depth: usize,
    /// Largest planning belief support.
    #[arg(long, default_value_t = 10_000)]
    pub max_support: usize,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    #[arg(long)]
    pub node_budget: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds between trace samples and success checks.
    #[arg(long, default_value_t = 5.0)]
    pub eval_interval: f64,
    /// Stop once this many check trials all reach the goal.
    #[arg(long)]
    pub stop_on_success: Option<usize>,
    /// Horizon of the success check; defaults to the domain horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Policy JSON output.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Bounds trace CSV output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Run manifest JSON output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    pub policy: PathBuf,
    pub instance: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Defaults to the domain horizon.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Per-trial CSV output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary CSV output.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Planning time to record in the summary.
    #[arg(long)]
    pub plan_time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    pub policy: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Dot)]
    pub format: Format,
    /// Instance used for readable action and observation labels.
    #[arg(long)]
    pub instance: Option<PathBuf>,
}

/// Everything needed to repeat a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub domain: String,
    pub instance: PathBuf,
    pub solver: Solver,
    pub config: SolverConfig,
    pub policy: PathBuf,
    pub trace: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cache_limit_from_env() -> Result<Option<usize>> {
    match std::env::var(CACHE_SIZE_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidConfig(format!("{CACHE_SIZE_VAR}={v} is not a count"))),
        Err(_) => Ok(None),
    }
}

/// Run one command, writing human-readable output to `out`. Returns the
/// process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Gen(a) => gen(&a, out),
        Command::Solve(a) => solve_cmd(&a, out),
        Command::Eval(a) => eval_cmd(&a, out),
        Command::Export(a) => export(&a, out),
    }
}

pub fn gen(args: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = match args.domain {
        Domain::Ctp => {
            let params = CtpParams {
                edge_degree: args.edge_degree,
                stochastic_fraction: args.stochastic_fraction,
                stochastic_count: args.stochastic_edges,
                observe_mode: match args.observe {
                    Observe::AtNode => ObserveMode::AtNode,
                    Observe::OnTraverse => ObserveMode::OnTraverse,
                },
                ..CtpParams::default()
            };
            Instance::Ctp(ctp::generate(args.n, params, args.seed)?)
        }
        Domain::Maze => Instance::Maze(maze::generate(args.n, args.seed)?),
        Domain::Sort => Instance::Sort(SortInstance::new(args.n)?),
    };
    instance.save(&args.out)?;
    writeln!(out, "wrote {} instance to {}", instance.domain(), args.out.display())?;
    Ok(EXIT_CONVERGED)
}

pub fn solve_cmd(args: &SolveArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = Instance::load(&args.instance)?;
    let model = instance.model()?;
    let horizon = args.horizon.unwrap_or_else(|| instance.default_horizon());
    let config = SolverConfig {
        epsilon: args.epsilon,
        max_depth: args.max_depth,
        max_belief_support: args.max_support,
        time_budget: args.timeout,
        node_budget: args.node_budget,
        iteration_budget: args.iterations,
        seed: args.seed,
        eval_interval: args.eval_interval,
        success_check: args.stop_on_success.map(|trials| SuccessCheck {
            trials,
            horizon,
            seed: args.seed,
        }),
        cache_limit: cache_limit_from_env()?,
        ..SolverConfig::default()
    };
    if !(config.epsilon > 0.0) || config.max_depth == 0 || config.max_belief_support == 0 {
        return Err(Error::InvalidConfig(
            "epsilon, max depth and max support must be positive".into(),
        ));
    }

    let start = Instant::now();
    let (policy, status, upper, lower) = match args.solver {
        Solver::Detmcvi => {
            let r = solve(model.as_ref(), &config);
            if let Some(path) = &args.trace {
                let mut w = create(path)?;
                r.trace.write_csv(&mut w)?;
                w.flush()?;
            }
            (r.fsc, r.status, r.upper, r.lower)
        }
        Solver::Aostar => {
            let b0 = downsample(model.as_ref(), config.max_belief_support, config.seed);
            let r = solve_aostar(
                model.as_ref(),
                &b0,
                &AoStarConfig {
                    max_depth: config.max_depth,
                    time_budget: config.time_budget,
                    node_budget: config.node_budget,
                },
            );
            (r.policy.into_fsc(), r.status, r.value, r.value)
        }
        Solver::QmdpTree => {
            let b0 = downsample(model.as_ref(), config.max_belief_support, config.seed);
            let tree = solve_qmdp_tree(
                model.as_ref(),
                &b0,
                &QmdpConfig {
                    max_depth: config.max_depth,
                },
            );
            (tree.into_fsc(), SolveStatus::Converged, f64::NAN, f64::NAN)
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    std::fs::write(&args.out, policy.to_json() + "\n")?;
    if let Some(path) = &args.manifest {
        let manifest = RunManifest {
            domain: instance.domain().to_string(),
            instance: args.instance.clone(),
            solver: args.solver,
            config,
            policy: args.out.clone(),
            trace: args.trace.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    }
    writeln!(
        out,
        "status {:?}  upper {upper:.6}  lower {lower:.6}  policy size {}  t_plan {elapsed:.3}s",
        status,
        policy.len()
    )?;
    Ok(if status.finished() { EXIT_CONVERGED } else { EXIT_BUDGET })
}

pub fn eval_cmd(args: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let instance = Instance::load(&args.instance)?;
    let model = instance.model()?;
    let policy = Fsc::from_json(&std::fs::read_to_string(&args.policy)?)?;
    policy.validate(Some(model.action_count()))?;
    if args.trials == 0 {
        return Err(Error::InvalidConfig("at least one trial is required".into()));
    }
    let horizon = args.horizon.unwrap_or_else(|| instance.default_horizon());
    let eval = run_trials(
        &policy,
        model.as_ref(),
        TrialConfig {
            trials: args.trials,
            horizon,
            seed: args.seed,
            jobs: args.jobs,
        },
    );
    let summary = summarize(&eval.trials, policy.len(), args.plan_time);
    if let Some(path) = &args.out {
        let mut w = create(path)?;
        write_trials_csv(&eval.trials, &mut w)?;
        w.flush()?;
    }
    if let Some(path) = &args.summary {
        let mut w = create(path)?;
        write_summary_csv(&summary, &mut w)?;
        w.flush()?;
    }
    write_summary_csv(&summary, &mut *out)?;
    Ok(EXIT_CONVERGED)
}

pub fn export(args: &ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let policy = Fsc::from_json(&std::fs::read_to_string(&args.policy)?)?;
    match args.format {
        Format::Json => writeln!(out, "{}", policy.to_json())?,
        Format::Dot => match &args.instance {
            Some(path) => {
                let model = Instance::load(path)?.model()?;
                policy.validate(Some(model.action_count()))?;
                write!(out, "{}", to_dot_labelled(&policy, model.as_ref()))?
            }
            None => write!(out, "{}", to_dot(&policy))?,
        },
    }
    Ok(EXIT_CONVERGED)
}
