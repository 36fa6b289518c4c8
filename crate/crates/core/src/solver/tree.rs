//! Belief tree with incrementally maintained action tables.
//!
//! Controller nodes are only ever appended and their values never change,
//! so every per-branch minimum over controller nodes is kept together with
//! the number of nodes already scanned and only new nodes are evaluated on
//! later visits.

use crate::bounds::{lower_bound, ShortestPaths};
use crate::fsc::{Evaluator, Fsc};
use crate::model::{
    belief_is_terminal, belief_successors, expected_cost, ActionId, Belief, DetPomdp, Observation,
};

/// Weighted excess uncertainties at or below this are treated as zero.
pub(crate) const EXCESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Branch {
    pub obs: Observation,
    pub prob: f64,
    pub belief: usize,
    pub heuristic: f64,
    pub terminal: bool,
    best_value: f64,
    pub best_node: Option<usize>,
    pub child: Option<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct ActionEntry {
    pub cost: f64,
    pub branches: Vec<Branch>,
    scanned: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct TreeNode {
    pub belief: usize,
    pub depth: usize,
    /// `V̄(b)`: the controller value once the controller is non-empty. The
    /// root also keeps its initial fallback value as a candidate.
    pub upper: f64,
    /// `V^F(b)`, the minimum over scanned controller nodes.
    pub fsc_value: f64,
    pub lower: f64,
    pub closed: bool,
    pub terminal: bool,
    pub actions: Option<Vec<ActionEntry>>,
    upper_scanned: usize,
    /// Controller node attaining `upper`, if any.
    pub entry: Option<usize>,
}

pub(crate) struct BeliefTree<'m> {
    pub model: &'m dyn DetPomdp,
    pub beliefs: Vec<Belief>,
    pub nodes: Vec<TreeNode>,
    pub paths: ShortestPaths,
    pub clamp: f64,
    pub epsilon: f64,
    pub max_depth: usize,
    pub closed_expansions: usize,
}

impl<'m> BeliefTree<'m> {
    pub fn new(
        model: &'m dyn DetPomdp,
        b0: Belief,
        upper: f64,
        paths: ShortestPaths,
        clamp: f64,
        epsilon: f64,
        max_depth: usize,
    ) -> Self {
        let mut tree = BeliefTree {
            model,
            beliefs: vec![b0],
            nodes: Vec::new(),
            paths,
            clamp,
            epsilon,
            max_depth,
            closed_expansions: 0,
        };
        let terminal = belief_is_terminal(model, &tree.beliefs[0]);
        let lower = if terminal {
            0.0
        } else {
            lower_bound(model, &tree.beliefs[0], &mut tree.paths, clamp)
        };
        tree.nodes.push(TreeNode {
            belief: 0,
            depth: 0,
            upper: if terminal { 0.0 } else { upper },
            fsc_value: f64::INFINITY,
            lower,
            closed: terminal,
            terminal,
            actions: None,
            upper_scanned: 0,
            entry: None,
        });
        tree
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    fn gap(&self, k: usize) -> f64 {
        let n = &self.nodes[k];
        n.upper - n.lower - self.epsilon
    }

    /// Build the action table of node `k` if it does not exist yet.
    fn expand(&mut self, k: usize) {
        if self.nodes[k].actions.is_some() {
            return;
        }
        if self.nodes[k].closed {
            self.closed_expansions += 1;
        }
        let model = self.model;
        let mut table = Vec::with_capacity(model.action_count());
        for a in 0..model.action_count() {
            let a = ActionId(a);
            let b = &self.beliefs[self.nodes[k].belief];
            let cost = expected_cost(model, b, a);
            let successors = belief_successors(model, b, a);
            let mut branches = Vec::with_capacity(successors.len());
            for (obs, succ) in successors {
                let terminal = belief_is_terminal(model, &succ.belief);
                let heuristic = if terminal {
                    0.0
                } else {
                    lower_bound(model, &succ.belief, &mut self.paths, self.clamp)
                };
                self.beliefs.push(succ.belief);
                branches.push(Branch {
                    obs,
                    prob: succ.prob,
                    belief: self.beliefs.len() - 1,
                    heuristic,
                    terminal,
                    best_value: f64::INFINITY,
                    best_node: None,
                    child: None,
                });
            }
            table.push(ActionEntry {
                cost,
                branches,
                scanned: 0,
            });
        }
        self.nodes[k].actions = Some(table);
    }

    /// Scan controller nodes added since the last visit of node `k`, for its
    /// own value and for every branch of its action table.
    fn refresh(&mut self, k: usize, fsc: &Fsc, ev: &mut Evaluator) {
        let len = fsc.len();
        let node = &mut self.nodes[k];
        if !node.terminal {
            let b = &self.beliefs[node.belief];
            for v in node.upper_scanned..len {
                let value = ev.alpha_belief(fsc, v, b);
                if value < node.fsc_value {
                    node.fsc_value = value;
                    node.entry = Some(v);
                }
            }
            if k == 0 {
                node.upper = node.upper.min(node.fsc_value);
            } else if node.fsc_value.is_finite() {
                node.upper = node.fsc_value;
            }
        }
        node.upper_scanned = len;
        let Some(table) = node.actions.as_mut() else {
            return;
        };
        for entry in table.iter_mut() {
            for br in entry.branches.iter_mut() {
                if br.terminal {
                    continue;
                }
                let b = &self.beliefs[br.belief];
                for v in entry.scanned..len {
                    let value = ev.alpha_belief(fsc, v, b);
                    if value < br.best_value {
                        br.best_value = value;
                        br.best_node = Some(v);
                    }
                }
            }
            entry.scanned = len;
        }
    }

    /// `V_{a,o}`: best controller value of a branch, or the fallback value
    /// while the controller is empty.
    fn branch_upper(&self, br: &Branch, fsc: &Fsc, ev: &mut Evaluator) -> f64 {
        if br.terminal {
            0.0
        } else if fsc.is_empty() {
            ev.fallback_belief(&self.beliefs[br.belief])
        } else {
            br.best_value
        }
    }

    fn branch_lower(&self, br: &Branch) -> f64 {
        match br.child {
            Some(c) => self.nodes[c].lower,
            None => br.heuristic,
        }
    }

    /// `Q^F(b, a)` for every action.
    fn q_upper(&self, k: usize, fsc: &Fsc, ev: &mut Evaluator) -> Vec<f64> {
        let table = self.nodes[k].actions.as_ref().expect("expanded");
        table
            .iter()
            .map(|e| {
                e.cost
                    + e.branches
                        .iter()
                        .map(|br| br.prob * self.branch_upper(br, fsc, ev))
                        .sum::<f64>()
            })
            .collect()
    }

    /// Lower-bound Q values from child lower bounds and leaf heuristics.
    fn q_lower(&self, k: usize) -> Vec<f64> {
        let table = self.nodes[k].actions.as_ref().expect("expanded");
        table
            .iter()
            .map(|e| {
                e.cost
                    + e.branches
                        .iter()
                        .map(|br| br.prob * self.branch_lower(br))
                        .sum::<f64>()
            })
            .collect()
    }

    fn argmin(values: &[f64]) -> usize {
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v < values[best] {
                best = i;
            }
        }
        best
    }

    /// Most uncertain open branch of action `a` at node `k`, with its
    /// weighted excess uncertainty.
    fn pick_branch(&self, k: usize, a: usize, fsc: &Fsc, ev: &mut Evaluator) -> Option<(usize, f64)> {
        let table = self.nodes[k].actions.as_ref().expect("expanded");
        let mut best: Option<(usize, f64)> = None;
        for (i, br) in table[a].branches.iter().enumerate() {
            if br.terminal || br.child.is_some_and(|c| self.nodes[c].closed) {
                continue;
            }
            let up = self.branch_upper(br, fsc, ev);
            let excess = br.prob * (up - self.branch_lower(br) - self.epsilon);
            if excess > EXCESS_TOLERANCE && best.is_none_or(|(_, e)| excess > e) {
                best = Some((i, excess));
            }
        }
        best
    }

    fn child(&mut self, k: usize, a: usize, i: usize, fsc: &Fsc, ev: &mut Evaluator) -> usize {
        let br = &self.nodes[k].actions.as_ref().expect("expanded")[a].branches[i];
        if let Some(c) = br.child {
            return c;
        }
        let upper = self.branch_upper(br, fsc, ev);
        let br = &self.nodes[k].actions.as_ref().expect("expanded")[a].branches[i];
        let depth = self.nodes[k].depth + 1;
        let node = TreeNode {
            belief: br.belief,
            depth,
            upper,
            fsc_value: if fsc.is_empty() { f64::INFINITY } else { upper },
            lower: br.heuristic,
            closed: br.terminal || depth >= self.max_depth,
            terminal: br.terminal,
            actions: None,
            upper_scanned: if fsc.is_empty() { 0 } else { fsc.len() },
            entry: br.best_node,
        };
        self.nodes.push(node);
        let c = self.nodes.len() - 1;
        self.nodes[k].actions.as_mut().expect("expanded")[a].branches[i].child = Some(c);
        c
    }

    /// Descend from the root along the most uncertain beliefs and return the
    /// visited path.
    pub fn traverse(&mut self, fsc: &Fsc, ev: &mut Evaluator) -> Vec<usize> {
        let mut path = vec![0];
        let mut k = 0;
        loop {
            let node = &self.nodes[k];
            if node.closed || node.terminal {
                break;
            }
            if node.depth >= self.max_depth {
                self.nodes[k].closed = true;
                break;
            }
            self.expand(k);
            self.refresh(k, fsc, ev);
            if self.gap(k) <= 0.0 {
                break;
            }
            let qu = self.q_upper(k, fsc, ev);
            let ql = self.q_lower(k);
            let a_u = Self::argmin(&qu);
            let a_l = Self::argmin(&ql);
            let choice = match self.pick_branch(k, a_u, fsc, ev) {
                Some((i, _)) => Some((a_u, i)),
                None => self.pick_branch(k, a_l, fsc, ev).map(|(i, _)| (a_l, i)),
            };
            let Some((a, i)) = choice else {
                self.nodes[k].closed = true;
                break;
            };
            k = self.child(k, a, i, fsc, ev);
            path.push(k);
        }
        path
    }

    /// Backup of node `k`: possibly append a controller node, then refresh
    /// the bounds. Returns whether a node was added.
    pub fn backup(&mut self, k: usize, fsc: &mut Fsc, ev: &mut Evaluator) -> bool {
        self.expand(k);
        self.refresh(k, fsc, ev);
        if self.nodes[k].terminal && !fsc.is_empty() {
            return false;
        }
        let qu = self.q_upper(k, fsc, ev);
        let a_star = Self::argmin(&qu);
        let mut added = false;
        if fsc.is_empty() || qu[a_star] < self.nodes[k].fsc_value - EXCESS_TOLERANCE {
            let table = self.nodes[k].actions.as_ref().expect("expanded");
            let mut node = crate::fsc::FscNode::new(ActionId(a_star));
            for br in &table[a_star].branches {
                if let Some(v) = br.best_node {
                    node.edges.insert(br.obs, v);
                }
            }
            let v = fsc.push(node);
            added = true;
            self.refresh(k, fsc, ev);
            if self.nodes[k].terminal {
                self.nodes[k].entry = Some(v);
            }
        }
        if !self.nodes[k].terminal {
            let ql = self.q_lower(k);
            let best = ql.iter().copied().fold(f64::INFINITY, f64::min);
            let node = &mut self.nodes[k];
            node.lower = node.lower.max(best);
        }
        added
    }

    /// Close node `k` when every branch is terminal or leads to a closed
    /// child.
    pub fn update_closed(&mut self, k: usize) {
        if self.nodes[k].closed {
            return;
        }
        let Some(table) = self.nodes[k].actions.as_ref() else {
            return;
        };
        let all_closed = table.iter().all(|e| {
            e.branches
                .iter()
                .all(|br| br.terminal || br.child.is_some_and(|c| self.nodes[c].closed))
        });
        if all_closed {
            self.nodes[k].closed = true;
        }
    }
}
