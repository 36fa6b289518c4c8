mod common;

use detmcvi::baselines::{solve_aostar, solve_qmdp_tree, AoStarConfig, QmdpConfig};
use detmcvi::domains::{ctp, random_tabular, CtpModel, CtpParams, RandomTabularParams};
use detmcvi::domains::ctp::{CtpEdge, CtpInstance, CtpNode, ObserveMode};
use detmcvi::eval::{run_trials, TrialConfig};
use detmcvi::fsc::{Evaluator, Fsc, RolloutParams, TrialOutcome};
use detmcvi::model::{Belief, DetPomdp};
use detmcvi::solver::{solve, SolverConfig};

fn exact_value(model: &dyn DetPomdp, policy: &Fsc, b0: &Belief) -> f64 {
    let mut ev = Evaluator::new(model, RolloutParams { depth_bound: 1000, ..RolloutParams::default() });
    ev.alpha_belief(policy, policy.start, b0)
}

/// Start 0, goal 3. The route 0-1-2-3 costs 3 but its last edge is blocked
/// with probability 0.4, which is only seen on reaching node 2; the certain
/// route 0-4-3 costs 5. QMDP values the first route as if the status were
/// known one step earlier (4.6) and commits to it, for a true cost of 5.4.
fn information_instance() -> CtpModel {
    CtpModel::new(CtpInstance {
        nodes: (0..5).map(|id| CtpNode { id, x: 0.0, y: 0.0 }).collect(),
        edges: vec![
            CtpEdge { u: 0, v: 1, cost: 1.0, block_prob: 0.0 },
            CtpEdge { u: 1, v: 2, cost: 1.0, block_prob: 0.0 },
            CtpEdge { u: 2, v: 3, cost: 1.0, block_prob: 0.4 },
            CtpEdge { u: 0, v: 4, cost: 2.5, block_prob: 0.0 },
            CtpEdge { u: 4, v: 3, cost: 2.5, block_prob: 0.0 },
        ],
        start: 0,
        goal: 3,
        observe_mode: ObserveMode::AtNode,
    })
    .unwrap()
}

#[test]
fn qmdp_trees_are_never_better_than_optimal() {
    for seed in 0..25 {
        let m = random_tabular(RandomTabularParams::default(), seed);
        let b0 = m.initial_belief().unwrap();
        let v_star = common::belief_mdp_value(&m, &b0).value;
        let tree = solve_qmdp_tree(&m, &b0, &QmdpConfig::default());
        assert!(tree.is_policy_tree());
        let v = exact_value(&m, &tree, &b0);
        assert!(v >= v_star - 1e-9, "seed {seed}: qmdp {v} < optimum {v_star}");
    }
}

#[test]
fn qmdp_matches_the_optimum_without_uncertainty() {
    let m = CtpModel::new(ctp::generate(10, CtpParams::default().with_stochastic_edges(0), 1).unwrap()).unwrap();
    let b0 = m.initial_belief().unwrap();
    assert_eq!(b0.support_len(), 1);
    let tree = solve_qmdp_tree(&m, &b0, &QmdpConfig::default());
    let v = exact_value(&m, &tree, &b0);
    let v_star = common::belief_mdp_value(&m, &b0).value;
    assert!((v - v_star).abs() < 1e-9);
}

#[test]
fn aostar_and_detmcvi_agree_on_small_ctp() {
    for seed in 0..5 {
        let m = CtpModel::new(ctp::generate(5, CtpParams::default().with_stochastic_edges(2), seed).unwrap()).unwrap();
        let b0 = m.initial_belief().unwrap();
        let config = SolverConfig::default();
        let d = solve(&m, &config);
        let a = solve_aostar(&m, &b0, &AoStarConfig::default());
        assert!(d.converged() && a.converged());
        assert!((d.upper - a.value).abs() <= config.epsilon + 1e-9, "seed {seed}: {} vs {}", d.upper, a.value);
    }
}

#[test]
fn information_gathering_separates_qmdp_from_the_optimum() {
    let m = information_instance();
    let b0 = m.initial_belief().unwrap();
    let v_star = common::belief_mdp_value(&m, &b0).value;
    let ao = solve_aostar(&m, &b0, &AoStarConfig::default());
    assert!((ao.value - v_star).abs() < 1e-9);
    assert!((v_star - 5.0).abs() < 1e-9);
    let tree = solve_qmdp_tree(&m, &b0, &QmdpConfig::default());
    let v = exact_value(&m, &tree, &b0);
    assert!((v - 5.4).abs() < 1e-9, "qmdp tree value {v}");
    let d = solve(&m, &SolverConfig { epsilon: 1e-9, ..SolverConfig::default() });
    assert!((d.upper - v_star).abs() < 1e-6);
}

#[test]
fn regret_and_competitive_ratio_contracts() {
    let m = CtpModel::new(ctp::generate(12, CtpParams::default().with_stochastic_edges(6), 2).unwrap()).unwrap();
    let r = solve(&m, &SolverConfig::default());
    let eval = run_trials(&r.fsc, &m, TrialConfig { trials: 2000, horizon: 24, seed: 4, jobs: 1 });
    assert_eq!(eval.summary.success_rate_percent, 100.0);
    for t in &eval.trials {
        assert_eq!(t.outcome, TrialOutcome::Success);
        assert!(t.regret.unwrap() >= -1e-9);
        assert!(t.competitive_ratio.unwrap() >= 1.0 - 1e-9);
    }
    // regret is the cost above the start state's oracle distance
    let starts: Vec<_> = (0..eval.trials.len()).map(|i| detmcvi::eval::trial_start(&m, 4, i)).collect();
    let oracle = common::dijkstra_all(&m, starts.iter().copied(), 100_000).unwrap();
    for (t, s) in eval.trials.iter().zip(&starts) {
        assert!((t.regret.unwrap() - (t.cost - oracle[s])).abs() < 1e-9);
    }
}

#[test]
fn parallel_and_sequential_evaluation_agree() {
    let m = CtpModel::new(ctp::generate(12, CtpParams::default().with_stochastic_edges(6), 3).unwrap()).unwrap();
    let r = solve(&m, &SolverConfig::default());
    let cfg = |jobs| TrialConfig { trials: 500, horizon: 24, seed: 9, jobs };
    let a = run_trials(&r.fsc, &m, cfg(1));
    let b = run_trials(&r.fsc, &m, cfg(3));
    assert_eq!(a.trials, b.trials);
    assert_eq!(a.summary, b.summary);
}
