//! Sort: `n` labelled items lie in an unknown order. The agent can inspect a
//! position to read its label, or swap two positions blindly. The goal is the
//! sorted order.
//!
//! A state packs the permutation into 4-bit nibbles: position `i` holds label
//! `(s >> 4i) & 0xF`, with labels `1..=n`. Actions `0..n` are `inspect(i)`
//! and the remaining ones are `swap(i, j)` for `i < j` in lexicographic
//! order. Inspecting yields the label as the observation; swapping yields 0.

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionId, Belief, DetPomdp, Observation, StateRef};

pub const MAX_ITEMS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortInstance {
    pub n: usize,
}

impl SortInstance {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_ITEMS).contains(&n) {
            return Err(Error::InvalidInstance(format!(
                "sort needs between 2 and {MAX_ITEMS} items, got {n}"
            )));
        }
        Ok(SortInstance { n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortAction {
    Inspect(usize),
    Swap(usize, usize),
}

#[derive(Debug, Clone)]
pub struct SortModel {
    n: usize,
    actions: Vec<SortAction>,
    identity: u64,
}

impl SortModel {
    pub fn new(instance: SortInstance) -> Result<Self> {
        let n = SortInstance::new(instance.n)?.n;
        let mut actions: Vec<SortAction> = (0..n).map(SortAction::Inspect).collect();
        for i in 0..n {
            for j in i + 1..n {
                actions.push(SortAction::Swap(i, j));
            }
        }
        Ok(SortModel {
            n,
            actions,
            identity: Self::pack(&(1..=n as u8).collect::<Vec<_>>()),
        })
    }

    pub fn items(&self) -> usize {
        self.n
    }

    pub fn action(&self, a: ActionId) -> SortAction {
        self.actions[a.0]
    }

    pub fn action_id(&self, action: SortAction) -> Option<ActionId> {
        self.actions.iter().position(|&x| x == action).map(ActionId)
    }

    pub fn pack(labels: &[u8]) -> u64 {
        labels
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &l)| acc | (l as u64) << (4 * i))
    }

    pub fn unpack(&self, s: StateRef) -> Vec<u8> {
        (0..self.n).map(|i| label(s.0, i)).collect()
    }

    pub fn state(labels: &[u8]) -> StateRef {
        StateRef(Self::pack(labels))
    }

    fn permutations(&self) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut perm: Vec<u8> = (1..=self.n as u8).collect();
        heap_permutations(self.n, &mut perm, &mut out);
        out
    }
}

fn label(s: u64, i: usize) -> u8 {
    ((s >> (4 * i)) & 0xF) as u8
}

fn heap_permutations(k: usize, perm: &mut [u8], out: &mut Vec<Vec<u8>>) {
    if k <= 1 {
        out.push(perm.to_vec());
        return;
    }
    heap_permutations(k - 1, perm, out);
    for i in 0..k - 1 {
        if k % 2 == 0 {
            perm.swap(i, k - 1);
        } else {
            perm.swap(0, k - 1);
        }
        heap_permutations(k - 1, perm, out);
    }
}

impl DetPomdp for SortModel {
    fn action_count(&self) -> usize {
        self.actions.len()
    }

    fn transition(&self, s: StateRef, a: ActionId) -> StateRef {
        if s.0 == self.identity {
            return s;
        }
        match self.actions[a.0] {
            SortAction::Inspect(_) => s,
            SortAction::Swap(i, j) => {
                let (li, lj) = (label(s.0, i) as u64, label(s.0, j) as u64);
                let cleared = s.0 & !(0xF << (4 * i)) & !(0xF << (4 * j));
                StateRef(cleared | lj << (4 * i) | li << (4 * j))
            }
        }
    }

    fn observe(&self, next: StateRef, a: ActionId) -> Observation {
        match self.actions[a.0] {
            SortAction::Inspect(i) => Observation(label(next.0, i) as u64),
            SortAction::Swap(..) => Observation(0),
        }
    }

    fn cost(&self, s: StateRef, _a: ActionId) -> f64 {
        if s.0 == self.identity {
            0.0
        } else {
            1.0
        }
    }

    fn is_goal(&self, s: StateRef) -> bool {
        s.0 == self.identity
    }

    fn max_step_cost(&self) -> f64 {
        1.0
    }

    fn initial_belief(&self) -> Option<Belief> {
        let states = self
            .permutations()
            .into_iter()
            .map(|p| Self::state(&p))
            .filter(|s| s.0 != self.identity);
        Some(Belief::uniform(states).expect("n >= 2 gives a non-identity permutation"))
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef {
        let mut perm: Vec<u8> = (1..=self.n as u8).collect();
        loop {
            perm.shuffle(rng);
            let s = Self::state(&perm);
            if s.0 != self.identity {
                return s;
            }
        }
    }

    fn action_label(&self, a: ActionId) -> String {
        match self.actions.get(a.0) {
            Some(SortAction::Inspect(i)) => format!("inspect({i})"),
            Some(SortAction::Swap(i, j)) => format!("swap({i},{j})"),
            None => a.to_string(),
        }
    }

    fn observation_label(&self, o: Observation) -> String {
        if o.0 == 0 {
            "-".into()
        } else {
            format!("item {}", o.0)
        }
    }
}
