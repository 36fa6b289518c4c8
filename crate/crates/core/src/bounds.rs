//! Admissible lower bounds from the full-observability relaxation, and the
//! uniform-policy upper bound used for truncation penalties.
//!
//! Under full observability a DetPOMDP collapses into a deterministic
//! shortest-path problem per state. Distances are computed by bounded-depth
//! Bellman-Ford over the states reachable from the query state, so the full
//! state space is never enumerated.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rustc_hash::FxHashMap;

use crate::model::{ActionId, Belief, DetPomdp, StateRef};

/// Memoized bounded-depth shortest path costs to the goal set.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    depth: usize,
    cache: FxHashMap<StateRef, f64>,
}

impl ShortestPaths {
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1, "depth bound must be at least 1");
        ShortestPaths {
            depth,
            cache: FxHashMap::default(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }

    /// Cheapest cost of an action sequence of at most `depth` steps from `s`
    /// to any goal state; `+inf` if none exists.
    pub fn dist(&mut self, model: &dyn DetPomdp, s: StateRef) -> f64 {
        if model.is_goal(s) {
            return 0.0;
        }
        if let Some(&d) = self.cache.get(&s) {
            return d;
        }

        let actions = model.action_count();
        let mut index: FxHashMap<StateRef, usize> = FxHashMap::default();
        let mut states = vec![s];
        let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
        index.insert(s, 0);

        let mut frontier = vec![0usize];
        let mut closed = false;
        for _ in 0..self.depth {
            let mut next_frontier = Vec::new();
            for &x in &frontier {
                let xs = states[x];
                if model.is_goal(xs) {
                    continue;
                }
                let mut out = Vec::with_capacity(actions);
                for a in 0..actions {
                    let a = ActionId(a);
                    let y = model.transition(xs, a);
                    let yi = *index.entry(y).or_insert_with(|| {
                        states.push(y);
                        edges.push(Vec::new());
                        next_frontier.push(states.len() - 1);
                        states.len() - 1
                    });
                    out.push((yi, model.cost(xs, a)));
                }
                edges[x] = out;
            }
            if next_frontier.is_empty() {
                closed = true;
                break;
            }
            frontier = next_frontier;
        }

        let goal: Vec<bool> = states.iter().map(|&x| model.is_goal(x)).collect();
        let mut dist: Vec<f64> = goal
            .iter()
            .map(|&g| if g { 0.0 } else { f64::INFINITY })
            .collect();
        let mut next = dist.clone();
        for _ in 0..self.depth {
            let mut changed = false;
            for x in 0..states.len() {
                if goal[x] {
                    continue;
                }
                let best = edges[x]
                    .iter()
                    .map(|&(y, c)| c + dist[y])
                    .fold(dist[x], f64::min);
                if best < next[x] {
                    next[x] = best;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            dist.copy_from_slice(&next);
        }

        if closed {
            for (x, &st) in states.iter().enumerate() {
                if !goal[x] {
                    self.cache.insert(st, dist[x]);
                }
            }
        } else {
            self.cache.insert(s, dist[0]);
        }
        dist[0]
    }
}

/// `sum_s b(s) dist(s, G)` with infinite distances replaced by `clamp`.
pub fn lower_bound(
    model: &dyn DetPomdp,
    b: &Belief,
    paths: &mut ShortestPaths,
    clamp: f64,
) -> f64 {
    b.iter()
        .map(|(s, p)| p * paths.dist(model, s).min(clamp))
        .sum()
}

/// Largest states sampled by [`upper_bound_uniform`].
const UPPER_BOUND_SAMPLE: usize = 1000;

/// Estimate `C̄`, an upper bound on the cost of the uniform random policy:
/// the maximum over (sampled) supported states of the mean cost of
/// `k_rollouts` uniform rollouts. A rollout that hits the depth bound is
/// charged a further `depth * max_step_cost`.
pub fn upper_bound_uniform(
    model: &dyn DetPomdp,
    b: &Belief,
    depth: usize,
    k_rollouts: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    assert!(k_rollouts >= 1);
    let states: Vec<StateRef> = if b.support_len() <= UPPER_BOUND_SAMPLE {
        b.states().collect()
    } else {
        b.entries()
            .choose_multiple_weighted(&mut *rng, UPPER_BOUND_SAMPLE, |e| e.1)
            .expect("belief weights are valid")
            .map(|e| e.0)
            .collect()
    };
    let truncation = depth as f64 * model.max_step_cost();
    let actions = model.action_count();
    let mut worst: f64 = 0.0;
    for s0 in states {
        let mut total = 0.0;
        for _ in 0..k_rollouts {
            let mut s = s0;
            let mut cost = 0.0;
            let mut steps = 0;
            while !model.is_goal(s) && steps < depth {
                let a = ActionId(rng.gen_range(0..actions));
                cost += model.cost(s, a);
                s = model.transition(s, a);
                steps += 1;
            }
            if !model.is_goal(s) {
                cost += truncation;
            }
            total += cost;
        }
        worst = worst.max(total / k_rollouts as f64);
    }
    worst
}
