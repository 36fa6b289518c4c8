//! Controller evaluation by deterministic rollouts.
//!
//! Under deterministic dynamics a single rollout of a controller from a
//! state gives its exact cost, so values are computed once and cached per
//! `(node, state)`. Every intermediate `(node, state)` pair visited by a
//! rollout is cached with its suffix cost.
//!
//! When the controller has no edge for an observation, the rollout switches
//! to uniformly random action selection. The random choices are drawn from a
//! stream keyed by the rollout salt and the observations seen since leaving
//! the controller, so the fallback is itself a fixed (history-dependent)
//! policy: its value is reproducible and depends only on the state where the
//! controller was left. The reported fallback value is the mean of
//! `fallback_rollouts` such streams, truncated at `depth_bound` steps with
//! `tail_penalty` added.

use rustc_hash::FxHashMap;

use crate::fsc::Fsc;
use crate::model::{step_unchecked, ActionId, Belief, DetPomdp, StateRef};

/// Rollout settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutParams {
    /// Maximum controller steps and maximum fallback steps per rollout.
    pub depth_bound: usize,
    /// Cost added when a rollout is cut off before reaching a goal.
    pub tail_penalty: f64,
    /// Number of fallback streams averaged off-controller.
    pub fallback_rollouts: usize,
    /// Salt for the fallback streams.
    pub seed: u64,
    /// Maximum number of cached `(node, state)` values. The controller
    /// value cache is emptied when an insertion would exceed it.
    pub cache_limit: Option<usize>,
}

impl Default for RolloutParams {
    fn default() -> Self {
        RolloutParams {
            depth_bound: 100,
            tail_penalty: 0.0,
            fallback_rollouts: 16,
            seed: 0,
            cache_limit: None,
        }
    }
}

/// Result of evaluating a controller node from one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOutcome {
    pub value: f64,
    /// A goal was reached while following the controller.
    pub reached_goal: bool,
    /// No missing edge was met; `value` is then the exact controller cost.
    pub stayed_on_fsc: bool,
    /// Controller steps taken.
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CachedAlpha {
    pub value: f64,
    pub exact: bool,
    pub steps: usize,
}

/// Memoized per-`(node, state)` controller values plus per-state fallback
/// values.
#[derive(Debug, Clone, Default)]
pub struct AlphaCache {
    entries: FxHashMap<(usize, StateRef), CachedAlpha>,
    fallback: FxHashMap<StateRef, f64>,
}

impl AlphaCache {
    pub fn get(&self, v: usize, s: StateRef) -> Option<CachedAlpha> {
        self.entries.get(&(v, s)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, StateRef), CachedAlpha)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    /// Drop every entry that involved a fallback rollout.
    pub fn retain_exact(&mut self) {
        self.entries.retain(|_, e| e.exact);
    }

    pub fn clear(&mut self) {
        self.entries.clear();
        self.fallback.clear();
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Evaluates controller nodes on states and beliefs for one model.
///
/// The cache assumes the controller passed in only ever grows by appending
/// nodes; evaluate a different controller with a fresh evaluator.
pub struct Evaluator<'m> {
    model: &'m dyn DetPomdp,
    params: RolloutParams,
    cache: AlphaCache,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m dyn DetPomdp, params: RolloutParams) -> Self {
        assert!(params.depth_bound >= 1, "depth bound must be at least 1");
        Evaluator {
            model,
            params,
            cache: AlphaCache::default(),
        }
    }

    pub fn model(&self) -> &'m dyn DetPomdp {
        self.model
    }

    pub fn params(&self) -> RolloutParams {
        self.params
    }

    pub fn cache(&self) -> &AlphaCache {
        &self.cache
    }

    pub fn cache_mut(&mut self) -> &mut AlphaCache {
        &mut self.cache
    }

    /// Cost of executing `fsc` from node `v` in state `s`.
    pub fn alpha(&mut self, fsc: &Fsc, v: usize, s: StateRef) -> RolloutOutcome {
        let model = self.model;
        let mut trail: Vec<(usize, StateRef, f64)> = Vec::new();
        let (mut node, mut state) = (v, s);
        let mut truncated = false;
        let (tail, exact, tail_steps) = loop {
            if model.is_goal(state) {
                break (0.0, true, 0);
            }
            if let Some(hit) = self.cache.get(node, state) {
                break (hit.value, hit.exact, hit.steps);
            }
            if trail.len() >= self.params.depth_bound {
                truncated = true;
                break (self.params.tail_penalty, false, 0);
            }
            let a = fsc.action(node);
            let st = step_unchecked(model, state, a);
            trail.push((node, state, st.cost));
            match fsc.next(node, st.observation) {
                Some(next) => {
                    node = next;
                    state = st.next;
                }
                None => {
                    let w = if model.is_goal(st.next) {
                        0.0
                    } else {
                        self.fallback_value(st.next)
                    };
                    break (w, model.is_goal(st.next), 0);
                }
            }
        };

        if let Some(limit) = self.params.cache_limit {
            if self.cache.entries.len() + trail.len() > limit {
                self.cache.entries.clear();
            }
        }
        let mut value = tail;
        let mut steps = tail_steps;
        for &(n, st, c) in trail.iter().rev() {
            value += c;
            steps += 1;
            if !truncated {
                self.cache.entries.insert((n, st), CachedAlpha { value, exact, steps });
            }
        }
        RolloutOutcome {
            value,
            reached_goal: exact && !truncated,
            stayed_on_fsc: exact || truncated,
            steps,
        }
    }

    pub fn alpha_value(&mut self, fsc: &Fsc, v: usize, s: StateRef) -> f64 {
        if self.model.is_goal(s) {
            return 0.0;
        }
        match self.cache.get(v, s) {
            Some(hit) => hit.value,
            None => self.alpha(fsc, v, s).value,
        }
    }

    /// `sum_s b(s) alpha(v, s)`.
    pub fn alpha_belief(&mut self, fsc: &Fsc, v: usize, b: &Belief) -> f64 {
        b.iter().map(|(s, p)| p * self.alpha_value(fsc, v, s)).sum()
    }

    /// Node minimizing the belief value, lowest index on ties. `None` for an
    /// empty controller.
    pub fn best_node(&mut self, fsc: &Fsc, b: &Belief) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for v in 0..fsc.len() {
            let value = self.alpha_belief(fsc, v, b);
            if best.is_none_or(|(_, bv)| value < bv) {
                best = Some((v, value));
            }
        }
        best
    }

    /// Mean cost of the random fallback from `s`.
    pub fn fallback_value(&mut self, s: StateRef) -> f64 {
        if self.model.is_goal(s) {
            return 0.0;
        }
        if let Some(&w) = self.cache.fallback.get(&s) {
            return w;
        }
        let model = self.model;
        let actions = model.action_count() as u64;
        let k = self.params.fallback_rollouts.max(1);
        let mut total = 0.0;
        for j in 0..k {
            let mut h = mix64(self.params.seed ^ mix64(j as u64));
            let mut state = s;
            let mut cost = 0.0;
            let mut steps = 0;
            while !model.is_goal(state) && steps < self.params.depth_bound {
                let a = ActionId(((h >> 11) % actions) as usize);
                let st = step_unchecked(model, state, a);
                cost += st.cost;
                h = mix64(h ^ st.observation.0);
                state = st.next;
                steps += 1;
            }
            if !model.is_goal(state) {
                cost += self.params.tail_penalty;
            }
            total += cost;
        }
        let w = total / k as f64;
        self.cache.fallback.insert(s, w);
        w
    }

    /// `sum_s b(s) W(s)` for the fallback value `W`.
    pub fn fallback_belief(&mut self, b: &Belief) -> f64 {
        b.iter().map(|(s, p)| p * self.fallback_value(s)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tabular::TabularModel;
    use crate::fsc::FscNode;
    use crate::model::Observation;

    /// s0 -> s1 -> s2 (goal) under action 0 with unit costs; action 1 stays.
    /// Observation after action 0 is 0 except on entering the goal (1).
    fn line() -> TabularModel {
        TabularModel::new(
            vec![vec![1, 0], vec![2, 1], vec![2, 2]],
            vec![vec![0, 0], vec![0, 0], vec![1, 1]],
            vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]],
            vec![false, false, true],
            vec![(0, 1.0)],
        )
        .unwrap()
    }

    fn chain() -> Fsc {
        let mut fsc = Fsc::new();
        let tail = fsc.push(FscNode::new(ActionId(0)));
        let mut head = FscNode::new(ActionId(0));
        head.edges.insert(Observation(0), tail);
        fsc.start = fsc.push(head);
        fsc
    }

    fn params(seed: u64) -> RolloutParams {
        RolloutParams {
            depth_bound: 50,
            tail_penalty: 100.0,
            fallback_rollouts: 16,
            seed,
            cache_limit: None,
        }
    }

    #[test]
    fn cache_limit_bounds_entries_without_changing_values() {
        let m = line();
        let fsc = chain();
        let mut small = Evaluator::new(
            &m,
            RolloutParams {
                cache_limit: Some(2),
                ..params(4)
            },
        );
        let mut full = Evaluator::new(&m, params(4));
        for s in [0, 1, 0, 2, 1] {
            let a = small.alpha(&fsc, fsc.start, StateRef(s)).value;
            let b = full.alpha(&fsc, fsc.start, StateRef(s)).value;
            assert_eq!(a.to_bits(), b.to_bits());
            assert!(small.cache().len() <= 2);
        }
    }

    #[test]
    fn goal_state_costs_nothing() {
        let m = line();
        let mut ev = Evaluator::new(&m, params(1));
        let out = ev.alpha(&chain(), 0, StateRef(2));
        assert_eq!(out.value, 0.0);
        assert!(out.reached_goal);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn chain_controller_is_exact() {
        let m = line();
        let fsc = chain();
        let mut a = Evaluator::new(&m, params(1));
        let mut b = Evaluator::new(&m, params(999));
        let oa = a.alpha(&fsc, 1, StateRef(0));
        let ob = b.alpha(&fsc, 1, StateRef(0));
        assert_eq!(oa.value, 2.0);
        assert!(oa.stayed_on_fsc && oa.reached_goal);
        assert_eq!(oa.steps, 2);
        assert_eq!(oa.value.to_bits(), ob.value.to_bits());
        // the suffix of the rollout is cached as well
        let hit = a.cache().get(0, StateRef(1)).unwrap();
        assert_eq!(hit.value, 1.0);
        assert!(hit.exact);
    }

    #[test]
    fn empty_controller_falls_back() {
        let m = line();
        let fsc = Fsc::new();
        let mut ev = Evaluator::new(&m, params(5));
        let w = ev.fallback_value(StateRef(0));
        assert!(w >= 2.0);
        assert!(ev.best_node(&fsc, &Belief::singleton(StateRef(0))).is_none());
    }

    #[test]
    fn missing_edge_uses_fallback() {
        let m = line();
        let mut fsc = Fsc::new();
        fsc.push(FscNode::new(ActionId(1)));
        let mut ev = Evaluator::new(&m, params(5));
        let out = ev.alpha(&fsc, 0, StateRef(0));
        assert!(!out.stayed_on_fsc);
        assert_eq!(out.value, 1.0 + ev.fallback_value(StateRef(0)));
        assert!(!ev.cache().get(0, StateRef(0)).unwrap().exact);
    }

    #[test]
    fn cyclic_controller_is_truncated() {
        let m = line();
        let mut fsc = Fsc::new();
        let mut n = FscNode::new(ActionId(1));
        n.edges.insert(Observation(0), 0);
        fsc.push(n);
        let mut ev = Evaluator::new(&m, params(5));
        let out = ev.alpha(&fsc, 0, StateRef(0));
        assert_eq!(out.value, 50.0 + 100.0);
        assert!(!out.reached_goal);
        assert!(ev.cache().is_empty());
    }

    #[test]
    fn belief_value_and_best_node() {
        let m = line();
        let fsc = chain();
        let mut ev = Evaluator::new(&m, params(1));
        let b = Belief::uniform([StateRef(0), StateRef(1)]).unwrap();
        assert_eq!(ev.alpha_belief(&fsc, 1, &b), 1.5);
        assert_eq!(ev.best_node(&fsc, &Belief::singleton(StateRef(1))), Some((0, 1.0)));
        let mut twins = Fsc::new();
        twins.push(FscNode::new(ActionId(0)));
        twins.push(FscNode::new(ActionId(0)));
        let got = ev_fresh(&m).best_node(&twins, &Belief::singleton(StateRef(1)));
        assert_eq!(got.map(|g| g.0), Some(0));
    }

    fn ev_fresh(m: &TabularModel) -> Evaluator<'_> {
        Evaluator::new(m, params(1))
    }
}
