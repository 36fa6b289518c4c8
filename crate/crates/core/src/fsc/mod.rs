//! Finite-state controllers and policy trees.
//!
//! A controller is a graph of action-labelled nodes whose outgoing edges are
//! keyed by observations. Policy trees are the special case without cycles
//! in which every node has at most one incoming edge.

mod export;
mod rollout;
mod simulate;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionId, Observation};

pub use export::{to_dot, to_dot_labelled};
pub use rollout::{AlphaCache, CachedAlpha, Evaluator, RolloutOutcome, RolloutParams};
pub use simulate::{simulate, Trial, TrialOutcome};

/// One controller node: the action `psi(v)` and the partial edge map
/// `eta(v, o)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FscNode {
    pub action: ActionId,
    #[serde(default)]
    pub edges: BTreeMap<Observation, usize>,
}

impl FscNode {
    pub fn new(action: ActionId) -> Self {
        FscNode {
            action,
            edges: BTreeMap::new(),
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// Finite-state controller with start node `start`.
///
/// Node indices are stable: nodes are only ever appended, so values computed
/// for an existing node stay valid as the controller grows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fsc {
    pub start: usize,
    pub nodes: Vec<FscNode>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub tree: bool,
}

impl Fsc {
    pub fn new() -> Self {
        Fsc::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Append a node and return its index.
    pub fn push(&mut self, node: FscNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn action(&self, v: usize) -> ActionId {
        self.nodes[v].action
    }

    pub fn next(&self, v: usize, o: Observation) -> Option<usize> {
        self.nodes[v].edges.get(&o).copied()
    }

    /// Start node, if the controller has any nodes.
    pub fn start_node(&self) -> Option<usize> {
        (!self.nodes.is_empty()).then_some(self.start)
    }

    /// Structural checks: start and edge targets in range, and actions below
    /// `action_count` when given.
    pub fn validate(&self, action_count: Option<usize>) -> Result<()> {
        let n = self.nodes.len();
        if n > 0 && self.start >= n {
            return Err(Error::InvalidFsc(format!(
                "start node {} out of range ({n} nodes)",
                self.start
            )));
        }
        for (v, node) in self.nodes.iter().enumerate() {
            if let Some(count) = action_count {
                if node.action.0 >= count {
                    return Err(Error::InvalidFsc(format!(
                        "node {v} uses action {} but the model has {count}",
                        node.action.0
                    )));
                }
            }
            if let Some((o, &t)) = node.edges.iter().find(|(_, &t)| t >= n) {
                return Err(Error::InvalidFsc(format!(
                    "edge ({v}, {o}) targets missing node {t}"
                )));
            }
        }
        if self.tree && !self.is_policy_tree() {
            return Err(Error::InvalidFsc("flagged as a tree but is not one".into()));
        }
        Ok(())
    }

    /// Nodes reachable from the start node, in index order.
    pub fn reachable(&self) -> Vec<usize> {
        let Some(start) = self.start_node() else {
            return Vec::new();
        };
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            for &t in self.nodes[v].edges.values() {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        (0..self.nodes.len()).filter(|&v| seen[v]).collect()
    }

    /// Controller restricted to the nodes reachable from the start node,
    /// re-indexed preserving relative order.
    pub fn pruned(&self) -> Fsc {
        let keep = self.reachable();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let nodes = keep
            .iter()
            .map(|&old| FscNode {
                action: self.nodes[old].action,
                edges: self.nodes[old]
                    .edges
                    .iter()
                    .map(|(&o, &t)| (o, remap[t]))
                    .collect(),
            })
            .collect();
        Fsc {
            start: if keep.is_empty() { 0 } else { remap[self.start] },
            nodes,
            tree: self.tree,
        }
    }

    /// True when the graph is acyclic and every node has at most one
    /// incoming `(node, observation)` edge.
    pub fn is_policy_tree(&self) -> bool {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for node in &self.nodes {
            for &t in node.edges.values() {
                indegree[t] += 1;
                if indegree[t] > 1 {
                    return false;
                }
            }
        }
        // With in-degree <= 1 everywhere, a cycle exists iff some node is
        // never reached from the roots.
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        for &v in &stack {
            seen[v] = true;
        }
        while let Some(v) = stack.pop() {
            for &t in self.nodes[v].edges.values() {
                if !seen[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("controller serializes")
    }

    pub fn from_json(text: &str) -> Result<Fsc> {
        let fsc: Fsc = serde_json::from_str(text)?;
        fsc.validate(None)?;
        Ok(fsc)
    }
}

/// A controller known to satisfy the policy-tree constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTree(Fsc);

impl PolicyTree {
    pub fn new(mut fsc: Fsc) -> Result<Self> {
        if !fsc.is_policy_tree() {
            return Err(Error::InvalidFsc("controller is not a policy tree".into()));
        }
        fsc.tree = true;
        Ok(PolicyTree(fsc))
    }

    pub fn as_fsc(&self) -> &Fsc {
        &self.0
    }

    pub fn into_fsc(self) -> Fsc {
        self.0
    }
}

impl std::ops::Deref for PolicyTree {
    type Target = Fsc;

    fn deref(&self) -> &Fsc {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(action: usize, edges: &[(u64, usize)]) -> FscNode {
        FscNode {
            action: ActionId(action),
            edges: edges.iter().map(|&(o, t)| (Observation(o), t)).collect(),
        }
    }

    #[test]
    fn empty_controller_json() {
        let json = Fsc::new().to_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["nodes"].as_array().unwrap().len(), 0);
        assert_eq!(Fsc::from_json(&json).unwrap(), Fsc::new());
    }

    #[test]
    fn json_schema_shape() {
        let fsc = Fsc {
            start: 1,
            nodes: vec![node(2, &[]), node(0, &[(7, 0)])],
            tree: false,
        };
        let value: serde_json::Value = serde_json::from_str(&fsc.to_json()).unwrap();
        assert_eq!(value["start"], 1);
        assert_eq!(value["nodes"][1]["action"], 0);
        assert_eq!(value["nodes"][1]["edges"]["7"], 0);
        assert!(value.get("tree").is_none());
    }

    #[test]
    fn malformed_json_reports_location() {
        match Fsc::from_json("{\"start\": 0,\n \"nodes\": [ }") {
            Err(Error::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_edge_rejected() {
        let fsc = Fsc {
            start: 0,
            nodes: vec![node(0, &[(1, 4)])],
            tree: false,
        };
        assert!(fsc.validate(None).is_err());
        assert!(Fsc::from_json(&fsc.to_json()).is_err());
    }

    #[test]
    fn tree_detection() {
        let tree = Fsc {
            start: 0,
            nodes: vec![node(0, &[(1, 1), (2, 2)]), node(1, &[]), node(1, &[])],
            tree: false,
        };
        assert!(tree.is_policy_tree());
        let shared = Fsc {
            start: 0,
            nodes: vec![node(0, &[(1, 1), (2, 1)]), node(1, &[])],
            tree: false,
        };
        assert!(!shared.is_policy_tree());
        let cyclic = Fsc {
            start: 0,
            nodes: vec![node(0, &[(1, 1)]), node(1, &[(1, 2)]), node(1, &[(1, 1)])],
            tree: false,
        };
        assert!(!cyclic.is_policy_tree());
        assert!(PolicyTree::new(cyclic).is_err());
        assert!(PolicyTree::new(tree).unwrap().tree);
    }

    #[test]
    fn pruning_keeps_reachable_nodes() {
        let fsc = Fsc {
            start: 3,
            nodes: vec![
                node(0, &[]),
                node(1, &[]),
                node(2, &[(5, 0)]),
                node(3, &[(1, 2), (2, 0)]),
            ],
            tree: false,
        };
        let p = fsc.pruned();
        assert_eq!(p.len(), 3);
        assert_eq!(p.start, 2);
        assert_eq!(p.nodes[2], node(3, &[(1, 1), (2, 0)]));
        assert_eq!(p.nodes[1], node(2, &[(5, 0)]));
    }

    fn arb_fsc() -> impl Strategy<Value = Fsc> {
        (1usize..50).prop_flat_map(|n| {
            let nodes = prop::collection::vec(
                (0usize..6, prop::collection::btree_map(0u64..1000, 0..n, 0..5)),
                n,
            );
            (0..n, nodes).prop_map(|(start, nodes)| Fsc {
                start,
                nodes: nodes
                    .into_iter()
                    .map(|(a, edges)| FscNode {
                        action: ActionId(a),
                        edges: edges.into_iter().map(|(o, t)| (Observation(o), t)).collect(),
                    })
                    .collect(),
                tree: false,
            })
        })
    }

    proptest! {
        #[test]
        fn json_round_trip(fsc in arb_fsc()) {
            let back = Fsc::from_json(&fsc.to_json()).unwrap();
            prop_assert_eq!(back, fsc);
        }

        #[test]
        fn pruned_is_closed_and_valid(fsc in arb_fsc()) {
            let p = fsc.pruned();
            p.validate(None).unwrap();
            prop_assert_eq!(p.reachable().len(), p.len());
        }
    }
}
