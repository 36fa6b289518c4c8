//! Canadian Traveller Problem.
//!
//! An agent travels a weighted road graph from `start` to `goal`. Some edges
//! are blocked with a known, independent probability; their status is drawn
//! once and never changes. In [`ObserveMode::AtNode`] the agent sees the
//! status of every uncertain edge incident to the node it stands on. In
//! [`ObserveMode::OnTraverse`] it only learns that an edge is blocked by
//! trying to use it, which costs the edge cost and leaves it in place.
//!
//! State encoding (`u64`):
//!
//! | bits    | meaning                                         |
//! |---------|-------------------------------------------------|
//! | 0..15   | current node                                    |
//! | 15      | last move hit a blocked edge (on-traverse only) |
//! | 16..64  | blocked flags of the uncertain edges, in order  |
//!
//! Action `k` means "take the `k`-th incident edge of the current node",
//! with neighbours sorted by id. Slots past the node's degree keep the agent
//! in place at the cost of the most expensive edge.

use std::collections::VecDeque;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionId, Belief, DetPomdp, Observation, StateRef};

const LOC_BITS: u32 = 15;
const LOC_MASK: u64 = (1 << LOC_BITS) - 1;
const BUMP_BIT: u64 = 1 << LOC_BITS;
const STATUS_SHIFT: u32 = 16;
/// Largest number of uncertain edges the state encoding can hold.
pub const MAX_STOCHASTIC_EDGES: usize = 48;
/// Largest node count the state encoding can hold.
pub const MAX_NODES: usize = 1 << LOC_BITS;
/// Largest number of uncertain edges for which the initial belief is
/// enumerated exactly.
pub const ENUMERATION_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObserveMode {
    #[default]
    AtNode,
    OnTraverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtpNode {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtpEdge {
    pub u: usize,
    pub v: usize,
    pub cost: f64,
    pub block_prob: f64,
}

impl CtpEdge {
    pub fn is_stochastic(&self) -> bool {
        self.block_prob > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CtpInstance {
    pub nodes: Vec<CtpNode>,
    pub edges: Vec<CtpEdge>,
    pub start: usize,
    pub goal: usize,
    #[serde(default)]
    pub observe_mode: ObserveMode,
}

/// Generator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtpParams {
    /// Each node is joined to this many nearest neighbours.
    pub edge_degree: usize,
    /// Fraction of the non-tree edges made uncertain.
    pub stochastic_fraction: f64,
    /// Exact number of uncertain edges; overrides the fraction.
    pub stochastic_count: Option<usize>,
    pub block_prob_range: (f64, f64),
    pub observe_mode: ObserveMode,
    /// When set, uncertain edges are drawn with weight
    /// `exp(-d / width)`, where `d` is the distance from the edge midpoint
    /// to the straight start-goal segment. `None` draws them uniformly.
    pub corridor_width: Option<f64>,
}

impl Default for CtpParams {
    fn default() -> Self {
        CtpParams {
            edge_degree: 4,
            stochastic_fraction: 0.5,
            stochastic_count: None,
            block_prob_range: (0.1, 0.6),
            observe_mode: ObserveMode::AtNode,
            corridor_width: Some(15.0),
        }
    }
}

impl CtpParams {
    pub fn with_stochastic_edges(mut self, count: usize) -> Self {
        self.stochastic_count = Some(count);
        self
    }
}

const GENERATION_ATTEMPTS: u64 = 32;

/// Random geometric instance.
///
/// Nodes are uniform points in a 100 x 100 square, each joined to its
/// `edge_degree` nearest neighbours. A random spanning tree of that graph is
/// kept certain, so the goal stays reachable in every realization; uncertain
/// edges are drawn from the remaining ones (see `corridor_width`). Seeds whose
/// neighbour graph is disconnected are retried on another stream of the same seed.
/// `start` is node 0 and `goal` the node farthest from it.
pub fn generate(n_nodes: usize, params: CtpParams, seed: u64) -> Result<CtpInstance> {
    if !(3..=MAX_NODES).contains(&n_nodes) {
        return Err(Error::InvalidInstance(format!(
            "CTP needs between 3 and {MAX_NODES} nodes, got {n_nodes}"
        )));
    }
    let (lo, hi) = params.block_prob_range;
    if !(0.0 < lo && lo <= hi && hi < 1.0) {
        return Err(Error::InvalidInstance(format!(
            "block probability range ({lo}, {hi}) must lie in (0, 1)"
        )));
    }
    let mut last_err = None;
    for attempt in 0..GENERATION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt);
        match try_generate(n_nodes, &params, &mut rng) {
            Ok(inst) => return Ok(inst),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

fn try_generate(n: usize, params: &CtpParams, rng: &mut ChaCha8Rng) -> Result<CtpInstance> {
    let nodes: Vec<CtpNode> = (0..n)
        .map(|id| CtpNode {
            id,
            x: (rng.gen_range(0.0..100.0f64) * 100.0).round() / 100.0,
            y: (rng.gen_range(0.0..100.0f64) * 100.0).round() / 100.0,
        })
        .collect();
    let d = |i: usize, j: usize| {
        let (a, b) = (&nodes[i], &nodes[j]);
        ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
    };
    for i in 0..n {
        for j in i + 1..n {
            if d(i, j) < 0.5 {
                return Err(Error::InvalidInstance("nodes too close together".into()));
            }
        }
    }

    let mut pairs = std::collections::BTreeSet::new();
    for i in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        order.sort_by(|&a, &b| d(i, a).total_cmp(&d(i, b)).then(a.cmp(&b)));
        for &j in order.iter().take(params.edge_degree) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    // Random spanning tree of the neighbour graph: Kruskal over a random
    // edge order.
    let mut shuffled: Vec<(usize, usize)> = pairs.iter().copied().collect();
    shuffled.shuffle(rng);
    let mut component: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    let mut tree = std::collections::BTreeSet::new();
    for (u, v) in shuffled {
        let (ru, rv) = (find(&mut component, u), find(&mut component, v));
        if ru != rv {
            component[ru] = rv;
            tree.insert((u, v));
        }
    }
    if tree.len() + 1 != n {
        return Err(Error::InvalidInstance("neighbour graph is disconnected".into()));
    }

    let candidates: Vec<(usize, usize)> =
        pairs.iter().copied().filter(|p| !tree.contains(p)).collect();
    let count = match params.stochastic_count {
        Some(c) => c,
        None => (params.stochastic_fraction * candidates.len() as f64).round() as usize,
    };
    if count > candidates.len() || count > MAX_STOCHASTIC_EDGES {
        return Err(Error::InvalidInstance(format!(
            "cannot place {count} uncertain edges ({} candidates)",
            candidates.len()
        )));
    }
    let goal = (1..n)
        .max_by(|&a, &b| d(0, a).total_cmp(&d(0, b)).then(b.cmp(&a)))
        .expect("n >= 3");
    let mut chosen: Vec<(usize, usize)> = match params.corridor_width {
        None => candidates.iter().copied().choose_multiple(rng, count),
        Some(width) => {
            let (sx, sy) = (nodes[0].x, nodes[0].y);
            let (gx, gy) = (nodes[goal].x - sx, nodes[goal].y - sy);
            let len2 = gx * gx + gy * gy;
            let weight = |&(u, v): &(usize, usize)| {
                let mx = (nodes[u].x + nodes[v].x) / 2.0 - sx;
                let my = (nodes[u].y + nodes[v].y) / 2.0 - sy;
                let t = ((mx * gx + my * gy) / len2).clamp(0.0, 1.0);
                let dist = ((mx - t * gx).powi(2) + (my - t * gy).powi(2)).sqrt();
                (-dist / width).exp().max(1e-12)
            };
            candidates
                .choose_multiple_weighted(rng, count, weight)
                .map_err(|e| Error::InvalidInstance(format!("edge selection: {e}")))?
                .copied()
                .collect()
        }
    };
    chosen.shuffle(rng);
    let (lo, hi) = params.block_prob_range;
    let mut probs = std::collections::BTreeMap::new();
    for p in chosen {
        let bp = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        probs.insert(p, (bp * 1000.0).round().clamp(1.0, 999.0) / 1000.0);
    }

    let edges = pairs
        .iter()
        .map(|&(u, v)| CtpEdge {
            u,
            v,
            cost: ((d(u, v) * 100.0).round() / 100.0).max(0.01),
            block_prob: probs.get(&(u, v)).copied().unwrap_or(0.0),
        })
        .collect();
    let inst = CtpInstance {
        nodes,
        edges,
        start: 0,
        goal,
        observe_mode: params.observe_mode,
    };
    inst.validate()?;
    Ok(inst)
}

impl CtpInstance {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn stochastic_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_stochastic()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let n = self.nodes.len();
        if !(2..=MAX_NODES).contains(&n) {
            return bad(format!("node count {n} outside 2..={MAX_NODES}"));
        }
        if self.nodes.iter().enumerate().any(|(i, node)| node.id != i) {
            return bad("node ids must be 0..n in order".into());
        }
        if self.start >= n || self.goal >= n {
            return bad("start or goal out of range".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.u >= n || e.v >= n || e.u == e.v {
                return bad(format!("edge ({}, {}) is not a valid pair", e.u, e.v));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return bad(format!("duplicate edge ({}, {})", e.u, e.v));
            }
            if !(e.cost > 0.0 && e.cost.is_finite()) {
                return bad(format!("edge ({}, {}) has cost {}", e.u, e.v, e.cost));
            }
            if !(0.0..1.0).contains(&e.block_prob) {
                return bad(format!(
                    "edge ({}, {}) has block probability {}",
                    e.u, e.v, e.block_prob
                ));
            }
        }
        if self.stochastic_edge_count() > MAX_STOCHASTIC_EDGES {
            return bad(format!("more than {MAX_STOCHASTIC_EDGES} uncertain edges"));
        }
        if !self.connected(|_| true, None) {
            return bad("graph is not connected with all edges open".into());
        }
        if !self.connected(|e| !e.is_stochastic(), Some((self.start, self.goal))) {
            return bad("no path of certain edges from start to goal".into());
        }
        Ok(())
    }

    /// With `pair`, whether its endpoints are joined by usable edges;
    /// otherwise whether the usable edges connect the whole graph.
    fn connected(&self, usable: impl Fn(&CtpEdge) -> bool, pair: Option<(usize, usize)>) -> bool {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| usable(e)) {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let from = pair.map_or(0, |p| p.0);
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match pair {
            Some((_, to)) => seen[to],
            None => seen.iter().all(|&s| s),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: CtpInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

/// The DetPOMDP induced by a [`CtpInstance`].
#[derive(Debug, Clone)]
pub struct CtpModel {
    instance: CtpInstance,
    /// Per node: `(neighbour, edge index)` sorted by neighbour.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// Per edge: its bit among the uncertain edges.
    bit: Vec<Option<u32>>,
    /// Edge indices of the uncertain edges, in bit order.
    stochastic: Vec<usize>,
    /// Per node: bits of the incident uncertain edges.
    incident: Vec<u64>,
    slots: usize,
    max_cost: f64,
    initial: Option<Belief>,
}

impl CtpModel {
    pub fn new(instance: CtpInstance) -> Result<Self> {
        instance.validate()?;
        let n = instance.node_count();
        let mut adjacency = vec![Vec::new(); n];
        let mut bit = vec![None; instance.edges.len()];
        let mut stochastic = Vec::new();
        let mut incident = vec![0u64; n];
        for (i, e) in instance.edges.iter().enumerate() {
            adjacency[e.u].push((e.v, i));
            adjacency[e.v].push((e.u, i));
            if e.is_stochastic() {
                let b = stochastic.len() as u32;
                bit[i] = Some(b);
                stochastic.push(i);
                incident[e.u] |= 1 << b;
                incident[e.v] |= 1 << b;
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        let slots = adjacency.iter().map(Vec::len).max().unwrap_or(0).max(1);
        let max_cost = instance.edges.iter().map(|e| e.cost).fold(1.0, f64::max);
        let mut model = CtpModel {
            instance,
            adjacency,
            bit,
            stochastic,
            incident,
            slots,
            max_cost,
            initial: None,
        };
        if model.stochastic.len() <= ENUMERATION_LIMIT {
            model.initial = Some(model.enumerate_initial());
        }
        Ok(model)
    }

    pub fn instance(&self) -> &CtpInstance {
        &self.instance
    }

    pub fn encode(location: usize, blocked: u64) -> StateRef {
        StateRef(location as u64 | (blocked << STATUS_SHIFT))
    }

    /// `(location, blocked bits)` of a state.
    pub fn decode(s: StateRef) -> (usize, u64) {
        ((s.0 & LOC_MASK) as usize, s.0 >> STATUS_SHIFT)
    }

    pub fn location(s: StateRef) -> usize {
        (s.0 & LOC_MASK) as usize
    }

    /// Per-edge blocked flag for a realization.
    pub fn blocked_edges(&self, blocked: u64) -> Vec<bool> {
        (0..self.instance.edges.len())
            .map(|i| self.bit[i].is_some_and(|b| blocked >> b & 1 == 1))
            .collect()
    }

    pub fn neighbours(&self, location: usize) -> &[(usize, usize)] {
        &self.adjacency[location]
    }

    /// Action that moves from `from` towards neighbour `to`, if adjacent.
    pub fn action_to(&self, from: usize, to: usize) -> Option<ActionId> {
        self.adjacency[from]
            .binary_search_by_key(&to, |&(v, _)| v)
            .ok()
            .map(ActionId)
    }

    fn reachable(&self, blocked: u64) -> bool {
        let n = self.instance.node_count();
        let mut seen = vec![false; n];
        seen[self.instance.start] = true;
        let mut stack = vec![self.instance.start];
        while let Some(u) = stack.pop() {
            if u == self.instance.goal {
                return true;
            }
            for &(v, e) in &self.adjacency[u] {
                let open = self.bit[e].is_none_or(|b| blocked >> b & 1 == 0);
                if open && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    fn realization_prob(&self, blocked: u64) -> f64 {
        self.stochastic
            .iter()
            .enumerate()
            .map(|(b, &e)| {
                let p = self.instance.edges[e].block_prob;
                if blocked >> b & 1 == 1 {
                    p
                } else {
                    1.0 - p
                }
            })
            .product()
    }

    fn enumerate_initial(&self) -> Belief {
        let m = self.stochastic.len();
        let weights = (0..1u64 << m)
            .filter(|&blocked| self.reachable(blocked))
            .map(|blocked| (Self::encode(self.instance.start, blocked), self.realization_prob(blocked)));
        Belief::from_weights(weights).expect("the all-open realization is reachable")
    }
}

impl DetPomdp for CtpModel {
    fn action_count(&self) -> usize {
        self.slots
    }

    fn transition(&self, s: StateRef, a: ActionId) -> StateRef {
        let (loc, blocked) = Self::decode(s);
        if loc == self.instance.goal {
            return s;
        }
        match self.adjacency[loc].get(a.0) {
            Some(&(next, e)) => {
                if self.bit[e].is_some_and(|b| blocked >> b & 1 == 1) {
                    let bump = match self.instance.observe_mode {
                        ObserveMode::AtNode => 0,
                        ObserveMode::OnTraverse => BUMP_BIT,
                    };
                    StateRef(Self::encode(loc, blocked).0 | bump)
                } else {
                    Self::encode(next, blocked)
                }
            }
            None => Self::encode(loc, blocked),
        }
    }

    fn observe(&self, next: StateRef, _a: ActionId) -> Observation {
        let (loc, blocked) = Self::decode(next);
        match self.instance.observe_mode {
            ObserveMode::AtNode => {
                Observation(loc as u64 | ((blocked & self.incident[loc]) << STATUS_SHIFT))
            }
            ObserveMode::OnTraverse => Observation(loc as u64 | ((next.0 & BUMP_BIT) << 1)),
        }
    }

    fn cost(&self, s: StateRef, a: ActionId) -> f64 {
        let loc = Self::location(s);
        if loc == self.instance.goal {
            return 0.0;
        }
        match self.adjacency[loc].get(a.0) {
            Some(&(_, e)) => self.instance.edges[e].cost,
            None => self.max_cost,
        }
    }

    fn is_goal(&self, s: StateRef) -> bool {
        Self::location(s) == self.instance.goal
    }

    fn max_step_cost(&self) -> f64 {
        self.max_cost
    }

    fn initial_belief(&self) -> Option<Belief> {
        self.initial.clone()
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> StateRef {
        loop {
            let mut blocked = 0u64;
            for (b, &e) in self.stochastic.iter().enumerate() {
                if rng.gen_bool(self.instance.edges[e].block_prob) {
                    blocked |= 1 << b;
                }
            }
            if self.reachable(blocked) {
                return Self::encode(self.instance.start, blocked);
            }
        }
    }

    fn action_label(&self, a: ActionId) -> String {
        format!("edge {}", a.0)
    }

    fn observation_label(&self, o: Observation) -> String {
        let loc = o.0 & LOC_MASK;
        let rest = o.0 >> STATUS_SHIFT;
        match self.instance.observe_mode {
            ObserveMode::OnTraverse if rest & 1 == 1 => format!("at {loc}, blocked"),
            ObserveMode::OnTraverse => format!("at {loc}"),
            ObserveMode::AtNode => {
                let closed: Vec<String> = (0..self.stochastic.len())
                    .filter(|b| rest >> b & 1 == 1)
                    .map(|b| {
                        let e = &self.instance.edges[self.stochastic[b]];
                        format!("{}-{}", e.u, e.v)
                    })
                    .collect();
                if closed.is_empty() {
                    format!("at {loc}")
                } else {
                    format!("at {loc}, blocked {}", closed.join(" "))
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{belief_successors, step};

    /// Triangle 0-1-2: certain 0-1 (3) and 1-2 (3), uncertain shortcut 0-2 (2).
    pub(crate) fn triangle(mode: ObserveMode) -> CtpInstance {
        let node = |id, x| CtpNode { id, x, y: 0.0 };
        let edge = |u, v, cost, block_prob| CtpEdge { u, v, cost, block_prob };
        CtpInstance {
            nodes: vec![node(0, 0.0), node(1, 1.0), node(2, 2.0)],
            edges: vec![edge(0, 1, 3.0, 0.0), edge(1, 2, 3.0, 0.0), edge(0, 2, 2.0, 0.4)],
            start: 0,
            goal: 2,
            observe_mode: mode,
        }
    }

    #[test]
    fn certain_edge_move() {
        let m = CtpModel::new(triangle(ObserveMode::AtNode)).unwrap();
        let s = CtpModel::encode(0, 0);
        let a = m.action_to(0, 1).unwrap();
        let st = step(&m, s, a).unwrap();
        assert_eq!(CtpModel::decode(st.next), (1, 0));
        assert_eq!(st.cost, 3.0);
        // node 1 has no uncertain incident edge
        assert_eq!(st.observation, Observation(1));
    }

    #[test]
    fn blocked_edge_on_traverse() {
        let m = CtpModel::new(triangle(ObserveMode::OnTraverse)).unwrap();
        let a = m.action_to(0, 2).unwrap();
        let blocked = step(&m, CtpModel::encode(0, 1), a).unwrap();
        assert_eq!(CtpModel::location(blocked.next), 0);
        assert_eq!(blocked.cost, 2.0);
        let open = step(&m, CtpModel::encode(0, 0), a).unwrap();
        assert_eq!(CtpModel::location(open.next), 2);
        assert_ne!(blocked.observation, open.observation);
        assert!(m.observation_label(blocked.observation).contains("blocked"));
    }

    #[test]
    fn at_node_observation_collapses_belief() {
        let m = CtpModel::new(triangle(ObserveMode::AtNode)).unwrap();
        let b0 = m.initial_belief().unwrap();
        assert_eq!(b0.support_len(), 2);
        assert!((b0.prob(CtpModel::encode(0, 1)) - 0.4).abs() < 1e-12);
        // moving away and back reveals the shortcut's status at node 0
        let out = belief_successors(&m, &b0, m.action_to(0, 1).unwrap());
        assert_eq!(out.len(), 1);
        let at1 = &out.values().next().unwrap().belief;
        let back = belief_successors(&m, at1, m.action_to(1, 0).unwrap());
        assert_eq!(back.len(), 2);
        assert!(back.values().all(|succ| succ.belief.support_len() == 1));
    }

    #[test]
    fn goal_is_absorbing_and_free() {
        let m = CtpModel::new(triangle(ObserveMode::AtNode)).unwrap();
        let g = CtpModel::encode(2, 1);
        for a in 0..m.action_count() {
            let st = step(&m, g, ActionId(a)).unwrap();
            assert_eq!(st.next, g);
            assert_eq!(st.cost, 0.0);
        }
    }

    #[test]
    fn invalid_slot_stays() {
        let m = CtpModel::new(triangle(ObserveMode::AtNode)).unwrap();
        assert_eq!(m.action_count(), 2);
        let mut inst = triangle(ObserveMode::AtNode);
        inst.nodes.push(CtpNode { id: 3, x: 5.0, y: 5.0 });
        inst.edges.push(CtpEdge { u: 1, v: 3, cost: 1.0, block_prob: 0.0 });
        let m = CtpModel::new(inst).unwrap();
        assert_eq!(m.action_count(), 3);
        let st = step(&m, CtpModel::encode(3, 0), ActionId(2)).unwrap();
        assert_eq!(CtpModel::location(st.next), 3);
        assert_eq!(st.cost, m.max_step_cost());
    }

    #[test]
    fn generator_hits_requested_scale() {
        let params = CtpParams::default().with_stochastic_edges(12);
        let inst = generate(20, params, 4).unwrap();
        assert_eq!(inst.node_count(), 20);
        assert_eq!(inst.stochastic_edge_count(), 12);
        let m = CtpModel::new(inst.clone()).unwrap();
        assert_eq!(m.initial_belief().unwrap().support_len(), 4096);
        assert_eq!(generate(20, params, 4).unwrap(), inst);
        assert_ne!(generate(20, params, 5).unwrap(), inst);
    }

    #[test]
    fn json_round_trip() {
        let inst = generate(8, CtpParams::default(), 1).unwrap();
        let text = inst.to_json();
        assert!(text.contains("\"observe_mode\": \"at-node\""));
        assert_eq!(CtpInstance::from_json(&text).unwrap(), inst);
    }

    #[test]
    fn rejects_instance_without_certain_path() {
        let mut inst = triangle(ObserveMode::AtNode);
        inst.edges[1].block_prob = 0.5;
        assert!(CtpModel::new(inst).is_err());
    }

    #[test]
    fn statuses_never_change() {
        let m = CtpModel::new(generate(10, CtpParams::default(), 2).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let mut s = m.sample_initial_state(&mut rng);
            let bits = CtpModel::decode(s).1;
            for _ in 0..30 {
                s = m.transition(s, ActionId(rng.gen_range(0..m.action_count())));
                assert_eq!(CtpModel::decode(s).1, bits);
            }
        }
    }
}
