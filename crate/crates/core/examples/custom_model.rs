//! Implement [`DetPomdp`] for your own problem.
//!
//! A robot stands in front of one of three doors but does not know which
//! door hides the exit. Walking through the wrong door costs a detour back;
//! a cheap peek reveals whether the door in front is the right one. States
//! are implicit and packed into a `u64`; nothing is enumerated.

use rand::{Rng, RngCore};

use detmcvi::eval::{run_trials, TrialConfig};
use detmcvi::fsc::to_dot_labelled;
use detmcvi::model::{ActionId, Belief, DetPomdp, Observation, StateRef};
use detmcvi::solver::{solve, SolverConfig};

const DOORS: u64 = 3;
const OUTSIDE: u64 = 100;

/// State: `door_in_front + DOORS * exit_door`, or `OUTSIDE` once through.
struct Doors;

impl Doors {
    fn split(s: StateRef) -> (u64, u64) {
        (s.0 % DOORS, s.0 / DOORS)
    }
}

impl DetPomdp for Doors {
    /// 0: peek, 1: next door, 2: walk through.
    fn action_count(&self) -> usize {
        3
    }

    fn transition(&self, s: StateRef, a: ActionId) -> StateRef {
        if s.0 == OUTSIDE {
            return s;
        }
        let (front, exit) = Self::split(s);
        match a.0 {
            1 => StateRef((front + 1) % DOORS + DOORS * exit),
            2 if front == exit => StateRef(OUTSIDE),
            _ => s,
        }
    }

    fn observe(&self, next: StateRef, a: ActionId) -> Observation {
        if next.0 == OUTSIDE {
            return Observation(2);
        }
        let (front, exit) = Self::split(next);
        Observation(u64::from(a.0 == 0 && front == exit))
    }

    fn cost(&self, s: StateRef, a: ActionId) -> f64 {
        if s.0 == OUTSIDE {
            return 0.0;
        }
        [0.5, 1.0, 4.0][a.0]
    }

    fn is_goal(&self, s: StateRef) -> bool {
        s.0 == OUTSIDE
    }

    fn max_step_cost(&self) -> f64 {
        4.0
    }

    fn initial_belief(&self) -> Option<Belief> {
        Some(Belief::uniform((0..DOORS).map(|exit| StateRef(DOORS * exit))).expect("non-empty"))
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef {
        StateRef(DOORS * rng.gen_range(0..DOORS))
    }

    fn action_label(&self, a: ActionId) -> String {
        ["peek", "next", "walk"][a.0].to_string()
    }

    fn observation_label(&self, o: Observation) -> String {
        ["closed", "exit", "outside"][o.0 as usize].to_string()
    }
}

fn main() {
    let model = Doors;
    let result = solve(
        &model,
        &SolverConfig {
            epsilon: 1e-6,
            ..SolverConfig::default()
        },
    );
    println!(
        "{:?}: expected cost {:.4} with {} controller nodes",
        result.status,
        result.upper,
        result.policy_size()
    );
    print!("{}", to_dot_labelled(&result.fsc, &model));

    let eval = run_trials(
        &result.fsc,
        &model,
        TrialConfig {
            trials: 1000,
            horizon: 20,
            seed: 0,
            jobs: 1,
        },
    );
    println!("success {:.1}%", eval.summary.success_rate_percent);
}
