//! DetMCVI: belief-tree search that grows a finite-state controller.
//!
//! Each iteration descends the belief tree along the beliefs whose bounds
//! are furthest apart, then walks the path back up. Every belief on the way
//! back gets a backup: the best action against the current controller is
//! turned into a new controller node whose edges point to the best existing
//! nodes for each successor belief. The upper bound of a belief is the value
//! of the best controller node on it and the lower bound comes from the
//! full-observability shortest-path relaxation, tightened by Bellman backups.

mod tree;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{upper_bound_uniform, ShortestPaths};
use crate::error::Result;
use crate::eval::{downsample, run_trials, TrialConfig};
use crate::fsc::{Evaluator, Fsc, RolloutParams};
use crate::model::{Belief, DetPomdp};

use tree::BeliefTree;

/// Solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target gap between the root bounds.
    pub epsilon: f64,
    /// Belief tree depth limit; also the rollout and shortest-path depth.
    pub max_depth: usize,
    /// Largest planning belief support `N`.
    pub max_belief_support: usize,
    /// Wall-clock budget in seconds.
    pub time_budget: Option<f64>,
    /// Limit on belief tree nodes.
    pub node_budget: Option<usize>,
    /// Limit on search iterations.
    pub iteration_budget: Option<usize>,
    /// Fallback rollouts averaged off-controller.
    pub fallback_rollouts: usize,
    /// Uniform rollouts per state when estimating the truncation penalty.
    pub bound_rollouts: usize,
    pub seed: u64,
    /// Seconds between bounds trace samples and success checks.
    pub eval_interval: f64,
    /// Stop as soon as the current controller reaches the goal in every
    /// trial of this check.
    #[serde(default)]
    pub success_check: Option<SuccessCheck>,
    /// Bound on cached controller values; `None` keeps them all.
    #[serde(default)]
    pub cache_limit: Option<usize>,
}

/// Periodic simulation of the current controller from the true initial
/// belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessCheck {
    pub trials: usize,
    pub horizon: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 0.01,
            max_depth: 100,
            max_belief_support: 10_000,
            time_budget: None,
            node_budget: None,
            iteration_budget: None,
            fallback_rollouts: 16,
            bound_rollouts: 16,
            seed: 0,
            eval_interval: 5.0,
            success_check: None,
            cache_limit: None,
        }
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    /// Root bounds are within epsilon.
    Converged,
    /// Every reachable belief is resolved or depth-limited.
    RootClosed,
    TimeBudget,
    NodeBudget,
    IterationBudget,
    /// Every trial of the success check reached the goal.
    TrialsSucceeded,
    /// The observer asked to stop.
    Stopped,
}

impl SolveStatus {
    /// True when the search met a stopping criterion rather than a budget.
    pub fn finished(self) -> bool {
        matches!(
            self,
            SolveStatus::Converged | SolveStatus::RootClosed | SolveStatus::TrialsSucceeded
        )
    }
}

/// One sample of the root bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub t_seconds: f64,
    pub upper: f64,
    pub lower: f64,
    pub fsc_nodes: usize,
}

/// Root bounds over time, with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundsTrace {
    pub points: Vec<TracePoint>,
}

impl BoundsTrace {
    pub fn push(&mut self, point: TracePoint) {
        match self.points.last_mut() {
            Some(last) if point.t_seconds <= last.t_seconds => *last = point,
            _ => self.points.push(point),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Progress report handed to a solve observer after every iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationReport {
    pub iteration: usize,
    pub upper: f64,
    pub lower: f64,
    pub fsc_nodes: usize,
    pub tree_nodes: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub tree_nodes: usize,
    pub backups: usize,
    /// Controller nodes created, including unreachable ones.
    pub fsc_nodes_created: usize,
    /// Expansions of already closed tree nodes; always zero.
    pub closed_expansions: usize,
    pub alpha_cache_entries: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// The controller restricted to nodes reachable from its start.
    pub fsc: Fsc,
    pub upper: f64,
    pub lower: f64,
    pub status: SolveStatus,
    pub trace: BoundsTrace,
    pub stats: SolveStats,
    pub elapsed: Duration,
    /// Support size of the belief the solver planned for.
    pub planning_support: usize,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.status.finished()
    }

    pub fn policy_size(&self) -> usize {
        self.fsc.len()
    }
}

fn all_trials_succeed(
    model: &dyn DetPomdp,
    fsc: &Fsc,
    b0: &Belief,
    ev: &mut Evaluator,
    check: SuccessCheck,
) -> bool {
    let Some((start, _)) = ev.best_node(fsc, b0) else {
        return false;
    };
    let mut candidate = fsc.clone();
    candidate.start = start;
    let eval = run_trials(
        &candidate,
        model,
        TrialConfig {
            trials: check.trials,
            horizon: check.horizon,
            seed: check.seed,
            jobs: 1,
        },
    );
    eval.summary.trials > 0 && eval.summary.success_rate_percent >= 100.0
}

/// Solve from the model's initial belief, downsampled to at most
/// `max_belief_support` states.
pub fn solve(model: &dyn DetPomdp, config: &SolverConfig) -> SolveResult {
    let b0 = downsample(model, config.max_belief_support, config.seed);
    solve_from(model, b0, config, &mut |_| true)
}

/// Solve for an explicit planning belief. `observer` sees every iteration
/// and may return `false` to stop.
pub fn solve_from(
    model: &dyn DetPomdp,
    b0: Belief,
    config: &SolverConfig,
    observer: &mut dyn FnMut(&IterationReport) -> bool,
) -> SolveResult {
    assert!(config.epsilon > 0.0, "epsilon must be positive");
    assert!(config.max_depth >= 1, "max depth must be at least 1");
    let start = Instant::now();
    let planning_support = b0.support_len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let c_bar = upper_bound_uniform(model, &b0, config.max_depth, config.bound_rollouts.max(1), &mut rng);
    let params = RolloutParams {
        depth_bound: config.max_depth,
        tail_penalty: c_bar,
        fallback_rollouts: config.fallback_rollouts.max(1),
        seed: config.seed,
        cache_limit: config.cache_limit,
    };
    let mut ev = Evaluator::new(model, params);
    let root_upper = ev.fallback_belief(&b0);
    let paths = ShortestPaths::new(config.max_depth);
    let mut tree = BeliefTree::new(
        model,
        b0.clone(),
        root_upper,
        paths,
        10.0 * c_bar,
        config.epsilon,
        config.max_depth,
    );
    let mut fsc = Fsc::new();
    let mut trace = BoundsTrace::default();
    let mut stats = SolveStats::default();
    let interval = Duration::from_secs_f64(config.eval_interval.max(0.0));
    let mut next_sample = Duration::ZERO;

    let status = loop {
        let root = tree.root();
        if root.terminal || (root.upper - root.lower <= config.epsilon && !fsc.is_empty()) {
            break SolveStatus::Converged;
        }
        if root.closed && !fsc.is_empty() {
            break SolveStatus::RootClosed;
        }
        if config.iteration_budget.is_some_and(|n| stats.iterations >= n) {
            break SolveStatus::IterationBudget;
        }
        if config.node_budget.is_some_and(|n| tree.nodes.len() >= n) {
            break SolveStatus::NodeBudget;
        }
        if config
            .time_budget
            .is_some_and(|t| start.elapsed().as_secs_f64() >= t)
        {
            break SolveStatus::TimeBudget;
        }

        let path = tree.traverse(&fsc, &mut ev);
        for &k in path.iter().rev() {
            if tree.backup(k, &mut fsc, &mut ev) {
                stats.fsc_nodes_created += 1;
            }
            stats.backups += 1;
            tree.update_closed(k);
        }
        stats.iterations += 1;

        let report = IterationReport {
            iteration: stats.iterations,
            upper: tree.root().upper,
            lower: tree.root().lower,
            fsc_nodes: fsc.len(),
            tree_nodes: tree.nodes.len(),
            elapsed: start.elapsed(),
        };
        if report.elapsed >= next_sample {
            trace.push(TracePoint {
                t_seconds: report.elapsed.as_secs_f64(),
                upper: report.upper,
                lower: report.lower,
                fsc_nodes: report.fsc_nodes,
            });
            next_sample = report.elapsed + interval;
            if let Some(check) = config.success_check {
                if all_trials_succeed(model, &fsc, &b0, &mut ev, check) {
                    break SolveStatus::TrialsSucceeded;
                }
            }
        }
        if !observer(&report) {
            break SolveStatus::Stopped;
        }
    };

    if let Some((v, _)) = ev.best_node(&fsc, &b0) {
        fsc.start = v;
    }
    let root = tree.root();
    let (upper, lower) = (root.upper, root.lower);
    let elapsed = start.elapsed();
    trace.push(TracePoint {
        t_seconds: elapsed.as_secs_f64(),
        upper,
        lower,
        fsc_nodes: fsc.len(),
    });
    stats.tree_nodes = tree.nodes.len();
    stats.closed_expansions = tree.closed_expansions;
    stats.alpha_cache_entries = ev.cache().len();
    SolveResult {
        fsc: fsc.pruned(),
        upper,
        lower,
        status,
        trace,
        stats,
        elapsed,
        planning_support,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tabular::TabularModel;
    use crate::model::{ActionId, StateRef};

    /// s0 -> s1 -> s2 (goal) under action 0, unit costs; action 1 stays put.
    fn line() -> TabularModel {
        TabularModel::new(
            vec![vec![1, 0], vec![2, 1], vec![2, 2]],
            vec![vec![0, 0], vec![0, 0], vec![1, 1]],
            vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![false, false, true],
            vec![(0, 0.5), (1, 0.5)],
        )
        .unwrap()
    }

    /// Two hidden starts; action 0 senses which one, after which action 0
    /// finishes from state 2 and action 1 from state 3. Guessing blindly is
    /// expensive.
    fn sensing() -> TabularModel {
        TabularModel::new(
            vec![vec![2, 4], vec![3, 1], vec![4, 2], vec![3, 4], vec![4, 4]],
            vec![vec![0, 0], vec![0, 0], vec![1, 0], vec![2, 0], vec![0, 0]],
            vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 5.0], vec![5.0, 1.0], vec![0.0, 0.0]],
            vec![false, false, false, false, true],
            vec![(0, 0.5), (1, 0.5)],
        )
        .unwrap()
    }

    fn exact() -> SolverConfig {
        SolverConfig {
            epsilon: 1e-9,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn line_converges_to_expected_distance() {
        let r = solve(&line(), &exact());
        assert!(r.converged());
        // half the mass needs two steps, half one step
        assert!((r.upper - 1.5).abs() < 1e-9);
        assert!(r.lower <= r.upper);
        // one node per remaining distance; neither is reused for the other
        assert_eq!(r.policy_size(), 2);
        assert!(r.fsc.nodes.iter().all(|n| n.action == ActionId(0)));
    }

    #[test]
    fn sensing_instance_needs_a_branching_controller() {
        let r = solve(&sensing(), &exact());
        assert!(r.converged());
        assert!((r.upper - 2.0).abs() < 1e-9, "upper {}", r.upper);
        assert_eq!(r.policy_size(), 3);
        assert_eq!(r.stats.closed_expansions, 0);
    }

    #[test]
    fn terminal_root_converges_without_a_controller() {
        let m = line();
        let r = solve_from(&m, Belief::singleton(StateRef(2)), &exact(), &mut |_| true);
        assert!(r.converged());
        assert_eq!(r.upper, 0.0);
        assert_eq!(r.lower, 0.0);
        assert!(r.fsc.is_empty());
    }

    #[test]
    fn budgets_and_observer_stop_the_search() {
        let m = sensing();
        let b0 = m.initial_belief().unwrap();
        let config = SolverConfig {
            iteration_budget: Some(0),
            ..exact()
        };
        assert_eq!(solve_from(&m, b0.clone(), &config, &mut |_| true).status, SolveStatus::IterationBudget);
        let config = SolverConfig {
            node_budget: Some(1),
            ..exact()
        };
        assert_eq!(solve_from(&m, b0.clone(), &config, &mut |_| true).status, SolveStatus::NodeBudget);
        let config = SolverConfig {
            time_budget: Some(0.0),
            ..exact()
        };
        assert_eq!(solve_from(&m, b0.clone(), &config, &mut |_| true).status, SolveStatus::TimeBudget);
        let r = solve_from(&m, b0, &exact(), &mut |_| false);
        assert_eq!(r.status, SolveStatus::Stopped);
        assert_eq!(r.stats.iterations, 1);
    }

    #[test]
    fn success_check_stops_once_every_trial_succeeds() {
        let m = sensing();
        let config = SolverConfig {
            eval_interval: 0.0,
            success_check: Some(SuccessCheck {
                trials: 50,
                horizon: 10,
                seed: 1,
            }),
            ..exact()
        };
        let r = solve(&m, &config);
        assert!(r.status.finished());
        let eval = crate::eval::run_trials(
            &r.fsc,
            &m,
            TrialConfig {
                trials: 200,
                horizon: 10,
                seed: 2,
                jobs: 1,
            },
        );
        assert_eq!(eval.summary.success_rate_percent, 100.0);
    }

    #[test]
    fn trace_times_increase_and_bounds_tighten() {
        let r = solve(
            &sensing(),
            &SolverConfig {
                eval_interval: 0.0,
                ..exact()
            },
        );
        let pts = &r.trace.points;
        assert!(!pts.is_empty());
        for w in pts.windows(2) {
            assert!(w[0].t_seconds < w[1].t_seconds);
            assert!(w[1].upper <= w[0].upper + 1e-12);
            assert!(w[1].lower >= w[0].lower - 1e-12);
        }
        let mut csv = Vec::new();
        r.trace.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t_seconds,upper,lower,fsc_nodes\n"));
        assert_eq!(text.lines().count(), pts.len() + 1);
    }

    #[test]
    fn identical_seeds_give_identical_controllers() {
        let m = sensing();
        let a = solve(&m, &exact());
        let b = solve(&m, &exact());
        assert_eq!(a.fsc.to_json(), b.fsc.to_json());
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
    }
}
