//! Deterministic POMDP model interface, states, beliefs and the
//! deterministic belief update.
//!
//! A DetPOMDP has deterministic transition and observation functions, so all
//! uncertainty sits in the initial belief. Every action applied to a belief
//! routes each supported state to exactly one successor and one observation;
//! the successor beliefs are the routed masses grouped by observation.

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Opaque 64-bit state handle. Domains encode structured states into it.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct StateRef(pub u64);

/// Dense action index in `0..action_count`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ActionId(pub usize);

/// Canonical observation token. Domains pick an exact integer encoding so
/// that equal observations compare equal across states.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Observation(pub u64);

impl fmt::Display for StateRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Generative deterministic model.
///
/// Implementations must satisfy:
/// - `transition` and `observe` are pure;
/// - `cost(s, a) == 0` exactly when `is_goal(s)`;
/// - goal states are absorbing (`transition(g, a) == g`).
pub trait DetPomdp: Send + Sync {
    fn action_count(&self) -> usize;

    /// Successor state `f_T(s, a)`.
    fn transition(&self, s: StateRef, a: ActionId) -> StateRef;

    /// Observation `f_Z(s', a)` received after entering `next` via `a`.
    fn observe(&self, next: StateRef, a: ActionId) -> Observation;

    fn cost(&self, s: StateRef, a: ActionId) -> f64;

    fn is_goal(&self, s: StateRef) -> bool;

    /// Upper bound on any single-step cost.
    fn max_step_cost(&self) -> f64;

    /// Exact initial belief, if the support is small enough to enumerate.
    fn initial_belief(&self) -> Option<Belief>;

    /// Draw one state from the true initial distribution.
    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef;

    fn action_label(&self, a: ActionId) -> String {
        a.to_string()
    }

    fn observation_label(&self, o: Observation) -> String {
        o.to_string()
    }
}

/// Outcome of a single deterministic step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub next: StateRef,
    pub observation: Observation,
    pub cost: f64,
}

/// Apply `a` in `s`, checking the action index.
pub fn step(model: &dyn DetPomdp, s: StateRef, a: ActionId) -> Result<Step> {
    if a.0 >= model.action_count() {
        return Err(Error::InvalidAction {
            action: a,
            action_count: model.action_count(),
        });
    }
    Ok(step_unchecked(model, s, a))
}

#[inline]
pub(crate) fn step_unchecked(model: &dyn DetPomdp, s: StateRef, a: ActionId) -> Step {
    let next = model.transition(s, a);
    Step {
        next,
        observation: model.observe(next, a),
        cost: model.cost(s, a),
    }
}

/// Sparse probability distribution with finite support, sorted by state.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    entries: Vec<(StateRef, f64)>,
}

impl Belief {
    /// Absolute tolerance on total mass.
    pub const TOLERANCE: f64 = 1e-9;

    pub fn singleton(s: StateRef) -> Self {
        Belief {
            entries: vec![(s, 1.0)],
        }
    }

    /// Build a belief from unnormalized weights. Duplicate states are merged,
    /// zero weights dropped and the result renormalized.
    pub fn from_weights<I>(weights: I) -> Result<Self>
    where
        I: IntoIterator<Item = (StateRef, f64)>,
    {
        let mut entries: Vec<(StateRef, f64)> = weights.into_iter().collect();
        if let Some(&(s, w)) = entries.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidBelief(format!("weight {w} for state {s}")));
        }
        entries.sort_unstable_by_key(|&(s, _)| s);
        entries.dedup_by(|later, kept| {
            if later.0 == kept.0 {
                kept.1 += later.1;
                true
            } else {
                false
            }
        });
        entries.retain(|&(_, w)| w > 0.0);
        let total: f64 = entries.iter().map(|&(_, w)| w).sum();
        if entries.is_empty() || total <= 0.0 {
            return Err(Error::InvalidBelief("empty support".into()));
        }
        for entry in &mut entries {
            entry.1 /= total;
        }
        Ok(Belief { entries })
    }

    pub fn uniform<I: IntoIterator<Item = StateRef>>(states: I) -> Result<Self> {
        Self::from_weights(states.into_iter().map(|s| (s, 1.0)))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(StateRef, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateRef, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn states(&self) -> impl Iterator<Item = StateRef> + '_ {
        self.entries.iter().map(|&(s, _)| s)
    }

    pub fn prob(&self, s: StateRef) -> f64 {
        self.entries
            .binary_search_by_key(&s, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn contains(&self, s: StateRef) -> bool {
        self.prob(s) > 0.0
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    /// Verify the belief invariants.
    pub fn check(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::InvalidBelief("empty support".into()));
        }
        if self.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidBelief("entries not strictly sorted".into()));
        }
        if self.entries.iter().any(|&(_, p)| !(p > 0.0 && p <= 1.0 + Self::TOLERANCE)) {
            return Err(Error::InvalidBelief("probability outside (0, 1]".into()));
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::InvalidBelief(format!("total mass {mass}")));
        }
        Ok(())
    }
}

/// One observation bucket of a belief update.
#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    /// `Pr(o | b, a)`.
    pub prob: f64,
    pub belief: Belief,
}

/// Deterministic Bayes update: route every supported state through `a` and
/// group the successors by observation. Only observations with positive
/// probability appear.
pub fn belief_successors(
    model: &dyn DetPomdp,
    b: &Belief,
    a: ActionId,
) -> BTreeMap<Observation, Successor> {
    let mut routed: BTreeMap<Observation, Vec<(StateRef, f64)>> = BTreeMap::new();
    for (s, p) in b.iter() {
        let next = model.transition(s, a);
        let o = model.observe(next, a);
        routed.entry(o).or_default().push((next, p));
    }
    routed
        .into_iter()
        .map(|(o, mass)| {
            let prob = mass.iter().map(|&(_, p)| p).sum();
            let belief = Belief::from_weights(mass).expect("routed mass is positive");
            (o, Successor { prob, belief })
        })
        .collect()
}

/// True iff every supported state is a goal state.
pub fn belief_is_terminal(model: &dyn DetPomdp, b: &Belief) -> bool {
    b.states().all(|s| model.is_goal(s))
}

/// Expected immediate cost `sum_s b(s) c(s, a)`.
pub fn expected_cost(model: &dyn DetPomdp, b: &Belief, a: ActionId) -> f64 {
    b.iter().map(|(s, p)| p * model.cost(s, a)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tabular::TabularModel;

    /// Three states plus a goal; action 0 maps s0,s1 to observation 1 and s2
    /// to observation 2.
    fn routing_model() -> TabularModel {
        TabularModel::new(
            vec![vec![1], vec![2], vec![3], vec![3]],
            vec![vec![1], vec![1], vec![1], vec![2]],
            vec![vec![1.0], vec![1.0], vec![1.0], vec![0.0]],
            vec![false, false, false, true],
            vec![(0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn belief_normalizes_and_merges() {
        let b = Belief::from_weights([(StateRef(3), 1.0), (StateRef(1), 2.0), (StateRef(3), 1.0)])
            .unwrap();
        assert_eq!(b.support_len(), 2);
        assert!((b.prob(StateRef(1)) - 0.5).abs() < 1e-15);
        assert!((b.prob(StateRef(3)) - 0.5).abs() < 1e-15);
        b.check().unwrap();
    }

    #[test]
    fn belief_rejects_bad_weights() {
        assert!(Belief::from_weights([(StateRef(0), -1.0)]).is_err());
        assert!(Belief::from_weights([(StateRef(0), 0.0)]).is_err());
        assert!(Belief::from_weights(Vec::new()).is_err());
        assert!(Belief::from_weights([(StateRef(0), f64::NAN)]).is_err());
    }

    #[test]
    fn singleton_update() {
        let m = routing_model();
        let out = belief_successors(&m, &Belief::singleton(StateRef(0)), ActionId(0));
        assert_eq!(out.len(), 1);
        let succ = &out[&Observation(1)];
        assert_eq!(succ.prob, 1.0);
        assert_eq!(succ.belief, Belief::singleton(StateRef(1)));
    }

    #[test]
    fn three_state_bayes_update() {
        // s0 -> s1 (o1), s1 -> s2 (o1), s2 -> s3 (o2)
        let m = routing_model();
        let b = Belief::from_weights([
            (StateRef(0), 0.5),
            (StateRef(1), 0.3),
            (StateRef(2), 0.2),
        ])
        .unwrap();
        let out = belief_successors(&m, &b, ActionId(0));
        assert_eq!(out.len(), 2);
        let o1 = &out[&Observation(1)];
        assert!((o1.prob - 0.8).abs() < 1e-12);
        assert!((o1.belief.prob(StateRef(1)) - 0.625).abs() < 1e-12);
        assert!((o1.belief.prob(StateRef(2)) - 0.375).abs() < 1e-12);
        let o2 = &out[&Observation(2)];
        assert!((o2.prob - 0.2).abs() < 1e-12);
        assert_eq!(o2.belief, Belief::singleton(StateRef(3)));
    }

    #[test]
    fn goal_beliefs_are_absorbing() {
        let m = routing_model();
        let b = Belief::singleton(StateRef(3));
        assert!(belief_is_terminal(&m, &b));
        let out = belief_successors(&m, &b, ActionId(0));
        assert_eq!(out.len(), 1);
        assert_eq!(out.values().next().unwrap().belief, b);
    }

    #[test]
    fn tiny_non_goal_mass_is_not_terminal() {
        let m = routing_model();
        let b = Belief::from_weights([(StateRef(3), 1.0 - 1e-6), (StateRef(0), 1e-6)]).unwrap();
        assert!(!belief_is_terminal(&m, &b));
    }

    #[test]
    fn step_rejects_bad_action() {
        let m = routing_model();
        assert!(matches!(
            step(&m, StateRef(0), ActionId(1)),
            Err(Error::InvalidAction { .. })
        ));
        let st = step(&m, StateRef(3), ActionId(0)).unwrap();
        assert_eq!(st.next, StateRef(3));
        assert_eq!(st.cost, 0.0);
    }
}
