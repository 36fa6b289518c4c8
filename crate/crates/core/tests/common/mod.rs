//! Independent oracles shared by the integration and acceptance tests.
//!
//! Nothing here calls into the solver, bounds or evaluation code; only the
//! model interface is used.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};

use detmcvi::model::{ActionId, Belief, DetPomdp, Observation, StateRef};

/// Belief key: for every current state, the bitmask of initial-support
/// indices that are now in that state. Keys are canonical because the map is
/// ordered and masks are exact.
type Key = Vec<(StateRef, u64)>;

/// Exact optimal value of the Belief-MDP rooted at `b0`, computed by value
/// iteration over unnormalized belief values.
///
/// A history is identified by where each initial state has moved and which
/// initial states are still consistent with the observations. Working with
/// unnormalized values `U = mass * V` turns the Bellman equation into
/// `U(k) = min_a [ sum_i b0(i) c(s_i, a) + sum_o U(k_o) ]`, with no division.
pub struct BeliefMdpOracle {
    pub value: f64,
    pub belief_count: usize,
}

pub fn belief_mdp_value(model: &dyn DetPomdp, b0: &Belief) -> BeliefMdpOracle {
    let init: Vec<(StateRef, f64)> = b0.iter().collect();
    assert!(init.len() <= 64, "oracle supports at most 64 initial states");
    let mass = |mask: u64| -> f64 {
        (0..init.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| init[i].1)
            .sum()
    };
    let root: Key = {
        let mut m: BTreeMap<StateRef, u64> = BTreeMap::new();
        for (i, &(s, _)) in init.iter().enumerate() {
            *m.entry(s).or_default() |= 1 << i;
        }
        m.into_iter().collect()
    };

    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut keys: Vec<Key> = Vec::new();
    // per belief: per action: (immediate unnormalized cost, child indices)
    let mut edges: Vec<Vec<(f64, Vec<usize>)>> = Vec::new();
    let mut terminal: Vec<bool> = Vec::new();
    index.insert(root.clone(), 0);
    keys.push(root);
    let mut queue = VecDeque::from([0usize]);
    while let Some(k) = queue.pop_front() {
        let key = keys[k].clone();
        let is_terminal = key.iter().all(|&(s, _)| model.is_goal(s));
        terminal.push(is_terminal);
        let mut per_action = Vec::new();
        if !is_terminal {
            for a in 0..model.action_count() {
                let a = ActionId(a);
                let mut cost = 0.0;
                let mut buckets: BTreeMap<Observation, BTreeMap<StateRef, u64>> = BTreeMap::new();
                for &(s, mask) in &key {
                    cost += mass(mask) * model.cost(s, a);
                    let next = model.transition(s, a);
                    let o = model.observe(next, a);
                    *buckets.entry(o).or_default().entry(next).or_default() |= mask;
                }
                let mut children = Vec::new();
                for (_, m) in buckets {
                    let child: Key = m.into_iter().collect();
                    let id = match index.get(&child) {
                        Some(&id) => id,
                        None => {
                            let id = keys.len();
                            index.insert(child.clone(), id);
                            keys.push(child);
                            queue.push_back(id);
                            assert!(id < 2_000_000, "belief MDP too large for the oracle");
                            id
                        }
                    };
                    children.push(id);
                }
                per_action.push((cost, children));
            }
        }
        edges.push(per_action);
    }

    let n = keys.len();
    let mut u = vec![0.0f64; n];
    for _sweep in 0..1_000_000 {
        let mut change: f64 = 0.0;
        for k in (0..n).rev() {
            if terminal[k] {
                continue;
            }
            let best = edges[k]
                .iter()
                .map(|(c, ch)| c + ch.iter().map(|&j| u[j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            change = change.max((best - u[k]).abs());
            u[k] = best;
        }
        if change <= 1e-13 * (1.0 + u[0].abs()) {
            break;
        }
    }
    BeliefMdpOracle {
        value: u[0] / mass(u64::MAX >> (64 - init.len())),
        belief_count: n,
    }
}

#[derive(PartialEq)]
struct Item(f64, StateRef);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Full-observability shortest path costs to the goal set for every state
/// reachable from `sources`, by Dijkstra on the reversed explicit graph.
/// Returns `None` if more than `limit` states are reachable.
pub fn dijkstra_all(
    model: &dyn DetPomdp,
    sources: impl IntoIterator<Item = StateRef>,
    limit: usize,
) -> Option<HashMap<StateRef, f64>> {
    let mut seen: HashSet<StateRef> = HashSet::new();
    let mut order = Vec::new();
    let mut stack: Vec<StateRef> = Vec::new();
    for s in sources {
        if seen.insert(s) {
            stack.push(s);
        }
    }
    let mut reverse: HashMap<StateRef, Vec<(StateRef, f64)>> = HashMap::new();
    while let Some(s) = stack.pop() {
        order.push(s);
        if seen.len() > limit {
            return None;
        }
        if model.is_goal(s) {
            continue;
        }
        for a in 0..model.action_count() {
            let a = ActionId(a);
            let t = model.transition(s, a);
            reverse.entry(t).or_default().push((s, model.cost(s, a)));
            if seen.insert(t) {
                stack.push(t);
            }
        }
    }
    let mut dist: HashMap<StateRef, f64> = order.iter().map(|&s| (s, f64::INFINITY)).collect();
    let mut heap = BinaryHeap::new();
    for &s in &order {
        if model.is_goal(s) {
            dist.insert(s, 0.0);
            heap.push(Item(0.0, s));
        }
    }
    while let Some(Item(d, s)) = heap.pop() {
        if d > dist[&s] {
            continue;
        }
        if let Some(preds) = reverse.get(&s) {
            for &(p, c) in preds {
                let nd = d + c;
                if nd < dist[&p] {
                    dist.insert(p, nd);
                    heap.push(Item(nd, p));
                }
            }
        }
    }
    Some(dist)
}

/// Fewest steps needed to reach a goal from `s`, by breadth-first search.
pub fn min_steps(model: &dyn DetPomdp, s: StateRef, limit: usize) -> Option<usize> {
    let mut seen = HashSet::from([s]);
    let mut frontier = vec![s];
    for depth in 0..=limit {
        if frontier.iter().any(|&x| model.is_goal(x)) {
            return Some(depth);
        }
        let mut next = Vec::new();
        for &x in &frontier {
            for a in 0..model.action_count() {
                let t = model.transition(x, ActionId(a));
                if seen.insert(t) {
                    next.push(t);
                }
            }
        }
        frontier = next;
    }
    None
}
