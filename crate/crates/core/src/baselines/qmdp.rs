//! Recursive QMDP trees.
//!
//! At every belief the action minimizing `sum_s b(s) [c(s, a) + dist(f_T(s, a), G)]`
//! is taken, as if the state became fully observable after one step. The tree
//! then branches on the observations that action can produce and recurses
//! until the belief is terminal or the depth limit is reached. On a singleton
//! belief the rule reduces to following a shortest path.

use crate::bounds::ShortestPaths;
use crate::fsc::{Fsc, FscNode, PolicyTree};
use crate::model::{belief_is_terminal, belief_successors, ActionId, Belief, DetPomdp, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QmdpConfig {
    pub max_depth: usize,
}

impl Default for QmdpConfig {
    fn default() -> Self {
        QmdpConfig { max_depth: 100 }
    }
}

fn q_value(model: &dyn DetPomdp, paths: &mut ShortestPaths, b: &Belief, a: ActionId) -> f64 {
    b.iter()
        .map(|(s, p)| p * (model.cost(s, a) + paths.dist(model, model.transition(s, a))))
        .sum()
}

/// QMDP action for `b`; ties go to the lowest action index.
pub fn qmdp_action(model: &dyn DetPomdp, paths: &mut ShortestPaths, b: &Belief) -> ActionId {
    let mut best = (f64::INFINITY, ActionId(0));
    for a in 0..model.action_count() {
        let q = q_value(model, paths, b, ActionId(a));
        if q < best.0 {
            best = (q, ActionId(a));
        }
    }
    best.1
}

/// Build the QMDP tree for `b0`. Terminal beliefs get no node, so a terminal
/// `b0` yields an empty tree.
pub fn solve_qmdp_tree(model: &dyn DetPomdp, b0: &Belief, config: &QmdpConfig) -> PolicyTree {
    let mut paths = ShortestPaths::new(config.max_depth.max(1));
    let mut fsc = Fsc::new();
    let mut stack: Vec<(Belief, usize, Option<(usize, Observation)>)> = vec![(b0.clone(), 0, None)];
    while let Some((b, depth, from)) = stack.pop() {
        if depth >= config.max_depth || belief_is_terminal(model, &b) {
            continue;
        }
        let a = qmdp_action(model, &mut paths, &b);
        let v = fsc.push(FscNode::new(a));
        if let Some((parent, obs)) = from {
            fsc.nodes[parent].edges.insert(obs, v);
        }
        let successors: Vec<_> = belief_successors(model, &b, a).into_iter().collect();
        for (obs, succ) in successors.into_iter().rev() {
            stack.push((succ.belief, depth + 1, Some((v, obs))));
        }
    }
    PolicyTree::new(fsc).expect("recursion builds a tree")
}
