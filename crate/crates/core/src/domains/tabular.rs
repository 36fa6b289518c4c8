//! Explicit table-driven DetPOMDPs, mostly used for small exactly-solvable
//! instances.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionId, Belief, DetPomdp, Observation, StateRef};

/// A DetPOMDP given by explicit `|S| x |A|` tables.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularModel {
    transitions: Vec<Vec<usize>>,
    observations: Vec<Vec<u64>>,
    costs: Vec<Vec<f64>>,
    goals: Vec<bool>,
    initial: Vec<(usize, f64)>,
    #[serde(skip)]
    initial_cache: Option<Belief>,
}

impl TabularModel {
    /// `observations[s'][a]` is the token seen after entering `s'` via `a`.
    pub fn new(
        transitions: Vec<Vec<usize>>,
        observations: Vec<Vec<u64>>,
        costs: Vec<Vec<f64>>,
        goals: Vec<bool>,
        initial: Vec<(usize, f64)>,
    ) -> Result<Self> {
        let n = transitions.len();
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if n == 0 {
            return bad("no states".into());
        }
        let actions = transitions[0].len();
        if actions == 0 {
            return bad("no actions".into());
        }
        if observations.len() != n || costs.len() != n || goals.len() != n {
            return bad("table sizes disagree".into());
        }
        for s in 0..n {
            if transitions[s].len() != actions
                || observations[s].len() != actions
                || costs[s].len() != actions
            {
                return bad(format!("row {s} has the wrong width"));
            }
            for a in 0..actions {
                let t = transitions[s][a];
                if t >= n {
                    return bad(format!("transition ({s},{a}) -> {t} out of range"));
                }
                let c = costs[s][a];
                if goals[s] {
                    if c != 0.0 || t != s {
                        return bad(format!("goal state {s} must be absorbing with zero cost"));
                    }
                } else if !(c > 0.0 && c.is_finite()) {
                    return bad(format!("non-goal cost ({s},{a}) = {c} must be positive"));
                }
            }
        }
        if initial.iter().any(|&(s, _)| s >= n) {
            return bad("initial state out of range".into());
        }
        let initial_cache = Some(Belief::from_weights(
            initial.iter().map(|&(s, p)| (StateRef(s as u64), p)),
        )?);
        Ok(TabularModel {
            transitions,
            observations,
            costs,
            goals,
            initial,
            initial_cache,
        })
    }

    pub fn state_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateRef> {
        (0..self.state_count() as u64).map(StateRef)
    }

    pub fn with_initial(mut self, initial: Vec<(usize, f64)>) -> Result<Self> {
        self.initial_cache = Some(Belief::from_weights(
            initial.iter().map(|&(s, p)| (StateRef(s as u64), p)),
        )?);
        self.initial = initial;
        Ok(self)
    }

    fn initial(&self) -> Belief {
        match &self.initial_cache {
            Some(b) => b.clone(),
            None => Belief::from_weights(
                self.initial.iter().map(|&(s, p)| (StateRef(s as u64), p)),
            )
            .expect("validated at construction"),
        }
    }
}

impl DetPomdp for TabularModel {
    fn action_count(&self) -> usize {
        self.transitions[0].len()
    }

    fn transition(&self, s: StateRef, a: ActionId) -> StateRef {
        StateRef(self.transitions[s.0 as usize][a.0] as u64)
    }

    fn observe(&self, next: StateRef, a: ActionId) -> Observation {
        Observation(self.observations[next.0 as usize][a.0])
    }

    fn cost(&self, s: StateRef, a: ActionId) -> f64 {
        self.costs[s.0 as usize][a.0]
    }

    fn is_goal(&self, s: StateRef) -> bool {
        self.goals[s.0 as usize]
    }

    fn max_step_cost(&self) -> f64 {
        self.costs.iter().flatten().copied().fold(0.0, f64::max)
    }

    fn initial_belief(&self) -> Option<Belief> {
        Some(self.initial())
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef {
        let b = self.initial();
        let mut u: f64 = rng.gen();
        for (s, p) in b.iter() {
            if u < p {
                return s;
            }
            u -= p;
        }
        b.entries().last().expect("non-empty").0
    }
}

/// Size parameters for random tabular instances.
#[derive(Debug, Clone, Copy)]
pub struct RandomTabularParams {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_observations: usize,
}

impl Default for RandomTabularParams {
    fn default() -> Self {
        RandomTabularParams {
            max_states: 8,
            max_actions: 3,
            max_observations: 3,
        }
    }
}

/// Random small DetPOMDP in which a goal is reachable from every state.
///
/// Random transitions only lead to non-goal states. Each non-goal state is
/// then attached to the already-connected set through one randomly chosen
/// action, so every state has a path to a goal but only specific actions
/// approach it.
pub fn random_tabular(params: RandomTabularParams, seed: u64) -> TabularModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=params.max_states.max(3));
    let actions = rng.gen_range(2..=params.max_actions.max(2));
    let obs_count = rng.gen_range(2..=params.max_observations.max(2)) as u64;
    let goal_count = if n > 4 { rng.gen_range(1..=2) } else { 1 };
    let goals: Vec<bool> = (0..n).map(|s| s >= n - goal_count).collect();

    let non_goal = n - goal_count;
    let mut transitions = vec![vec![0usize; actions]; n];
    let mut costs = vec![vec![0.0; actions]; n];
    let cost_levels = [1.0, 1.5, 2.0, 2.5, 3.0];
    for s in 0..n {
        for a in 0..actions {
            if goals[s] {
                transitions[s][a] = s;
            } else {
                transitions[s][a] = rng.gen_range(0..non_goal);
                costs[s][a] = *cost_levels.choose(&mut rng).unwrap();
            }
        }
    }

    let mut connected: Vec<usize> = (n - goal_count..n).collect();
    let mut order: Vec<usize> = (0..n - goal_count).collect();
    order.shuffle(&mut rng);
    for s in order {
        let a = rng.gen_range(0..actions);
        transitions[s][a] = *connected.choose(&mut rng).unwrap();
        connected.push(s);
    }

    let observations = (0..n)
        .map(|_| (0..actions).map(|_| rng.gen_range(0..obs_count)).collect())
        .collect();

    let support = rng.gen_range(2..=non_goal);
    let mut candidates: Vec<usize> = (0..non_goal).collect();
    candidates.shuffle(&mut rng);
    let initial = candidates[..support]
        .iter()
        .map(|&s| (s, rng.gen_range(0.1..1.0)))
        .collect();

    TabularModel::new(transitions, observations, costs, goals, initial)
        .expect("generator respects the model invariants")
}
