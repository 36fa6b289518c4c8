use serde::{Deserialize, Serialize};

use crate::fsc::Fsc;
use crate::model::{step_unchecked, ActionId, DetPomdp, StateRef};

/// How a simulated trial ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Success,
    HorizonReached,
    PolicyUndefined,
}

impl TrialOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Success => "success",
            TrialOutcome::HorizonReached => "horizon_reached",
            TrialOutcome::PolicyUndefined => "policy_undefined",
        }
    }
}

/// Record of one simulated execution.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// Visited states, starting with `s0`.
    pub states: Vec<StateRef>,
    pub actions: Vec<ActionId>,
    pub cost: f64,
    pub outcome: TrialOutcome,
}

impl Trial {
    pub fn steps(&self) -> usize {
        self.actions.len()
    }
}

/// Execute `policy` from `s0` for at most `horizon` steps.
///
/// The trial succeeds when a goal state is occupied at some step `t < horizon`.
/// Needing an action from a missing controller edge ends the trial as
/// [`TrialOutcome::PolicyUndefined`]; an empty controller is undefined
/// everywhere except at goal states.
pub fn simulate(policy: &Fsc, model: &dyn DetPomdp, s0: StateRef, horizon: usize) -> Trial {
    assert!(horizon >= 1, "horizon must be at least 1");
    let mut trial = Trial {
        states: vec![s0],
        actions: Vec::new(),
        cost: 0.0,
        outcome: TrialOutcome::HorizonReached,
    };
    let mut s = s0;
    let mut node = policy.start_node();
    for _ in 0..horizon {
        if model.is_goal(s) {
            trial.outcome = TrialOutcome::Success;
            return trial;
        }
        let Some(v) = node else {
            trial.outcome = TrialOutcome::PolicyUndefined;
            return trial;
        };
        let a = policy.action(v);
        let st = step_unchecked(model, s, a);
        trial.actions.push(a);
        trial.states.push(st.next);
        trial.cost += st.cost;
        s = st.next;
        node = policy.next(v, st.observation);
    }
    trial
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::tabular::TabularModel;
    use crate::fsc::FscNode;
    use crate::model::Observation;

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

    fn forward_chain() -> Fsc {
        let mut fsc = Fsc::new();
        let tail = fsc.push(FscNode::new(ActionId(0)));
        let mut head = FscNode::new(ActionId(0));
        head.edges.insert(Observation(0), tail);
        fsc.start = fsc.push(head);
        fsc
    }

    #[test]
    fn goal_start_succeeds_for_free() {
        let t = simulate(&Fsc::new(), &line(), StateRef(2), 1);
        assert_eq!(t.outcome, TrialOutcome::Success);
        assert_eq!(t.cost, 0.0);
        assert_eq!(t.steps(), 0);
    }

    #[test]
    fn empty_policy_is_undefined() {
        let t = simulate(&Fsc::new(), &line(), StateRef(0), 5);
        assert_eq!(t.outcome, TrialOutcome::PolicyUndefined);
    }

    #[test]
    fn chain_reaches_goal() {
        let t = simulate(&forward_chain(), &line(), StateRef(0), 5);
        assert_eq!(t.outcome, TrialOutcome::Success);
        assert_eq!(t.cost, 2.0);
        assert_eq!(t.states, vec![StateRef(0), StateRef(1), StateRef(2)]);
    }

    #[test]
    fn goal_must_be_reached_before_horizon() {
        // two steps are needed; a horizon of 2 only allows goal at t = 2
        let t = simulate(&forward_chain(), &line(), StateRef(0), 2);
        assert_eq!(t.outcome, TrialOutcome::HorizonReached);
        let t = simulate(&forward_chain(), &line(), StateRef(0), 3);
        assert_eq!(t.outcome, TrialOutcome::Success);
    }

    #[test]
    fn missing_branch_is_undefined() {
        let mut fsc = Fsc::new();
        fsc.push(FscNode::new(ActionId(1)));
        let t = simulate(&fsc, &line(), StateRef(0), 10);
        assert_eq!(t.outcome, TrialOutcome::PolicyUndefined);
        assert_eq!(t.steps(), 1);
    }
}
