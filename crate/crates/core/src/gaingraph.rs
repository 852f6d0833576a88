//! Directed graphs with multiplicative arc gains and additive arc costs.
//!
//! An arc `(v, w)` with gain `γ > 0` and cost `c` encodes the constraint
//! `y_v ≤ c + γ·y_w` on node labels. Walks compose left to right:
//! `c(P·Q) = c(P) + γ(P)·c(Q)` and `γ(P·Q) = γ(P)·γ(Q)`, so a walk `P` from
//! `v` to `w` encodes `y_v ≤ c(P) + γ(P)·y_w`.
//!
//! Cycles fall into three classes by their gain: flow-absorbing (`γ(C) < 1`,
//! spinning yields the finite bound `c(C)/(1−γ(C))`), unit-gain (`γ(C) = 1`,
//! infeasible when the cost is negative), and flow-generating (`γ(C) > 1`,
//! spinning yields a lower bound). This module holds the graph structure,
//! walk arithmetic, and the two cycle-hunting routines the solvers need.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::numerics::{
    ext_add_mul, ext_sign_diff, sign_eps, ArithMode, ExtScalar, Scalar, Sign, Tolerance,
};

pub type NodeId = usize;
pub type ArcId = usize;

#[derive(Clone, Debug)]
pub struct Arc {
    pub tail: NodeId,
    pub head: NodeId,
    pub gamma: Scalar,
    pub cost: Scalar,
}

#[derive(Clone, Debug)]
pub struct GainGraph {
    mode: ArithMode,
    n: usize,
    arcs: Vec<Arc>,
    out: Vec<Vec<ArcId>>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {0} out of range")]
    NodeOutOfRange(NodeId),
    #[error("arc gain must be strictly positive")]
    NonPositiveGain,
    #[error("scalar mode does not match graph mode")]
    ModeMismatch,
    #[error("malformed walk: {0}")]
    MalformedWalk(String),
}

impl GainGraph {
    pub fn new(mode: ArithMode, n: usize) -> Self {
        GainGraph { mode, n, arcs: Vec::new(), out: vec![Vec::new(); n] }
    }

    pub fn mode(&self) -> ArithMode {
        self.mode
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id]
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: NodeId) -> &[ArcId] {
        &self.out[v]
    }

    pub fn add_arc(
        &mut self,
        tail: NodeId,
        head: NodeId,
        gamma: Scalar,
        cost: Scalar,
    ) -> Result<ArcId, GraphError> {
        if tail >= self.n {
            return Err(GraphError::NodeOutOfRange(tail));
        }
        if head >= self.n {
            return Err(GraphError::NodeOutOfRange(head));
        }
        if gamma.mode() != self.mode || cost.mode() != self.mode {
            return Err(GraphError::ModeMismatch);
        }
        if sign_eps(&gamma, 0.0) != Sign::Pos {
            return Err(GraphError::NonPositiveGain);
        }
        let id = self.arcs.len();
        self.arcs.push(Arc { tail, head, gamma, cost });
        self.out[tail].push(id);
        Ok(id)
    }

    /// `y_tail > c + γ·y_head` beyond `eps`, with `+∞` dominating any finite
    /// value and two infinities comparing equal.
    pub fn arc_violated(&self, id: ArcId, labels: &[ExtScalar], eps: f64) -> bool {
        let arc = &self.arcs[id];
        let bound = ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
        ext_sign_diff(&labels[arc.tail], &bound, eps) == Sign::Pos
    }

    /// Split node `u`: a fresh node `u′ = n` takes over as the head of every
    /// arc that pointed at `u` (a self-loop at `u` becomes `(u, u′)`). Arc
    /// ids and tails are preserved, so results on the split graph map back to
    /// this graph by identity.
    pub fn split_at(&self, u: NodeId) -> GainGraph {
        assert!(u < self.n, "split node out of range");
        let mut g = GainGraph::new(self.mode, self.n + 1);
        for arc in &self.arcs {
            let head = if arc.head == u { self.n } else { arc.head };
            g.add_arc(arc.tail, head, arc.gamma.clone(), arc.cost.clone())
                .expect("copying a valid arc");
        }
        g
    }

    /// Subgraph on the same node set keeping only arcs accepted by `keep`.
    /// Returns the subgraph and the map from new arc ids to original ones.
    pub fn filter_arcs(&self, mut keep: impl FnMut(ArcId, &Arc) -> bool) -> (GainGraph, Vec<ArcId>) {
        let mut g = GainGraph::new(self.mode, self.n);
        let mut map = Vec::new();
        for (id, arc) in self.arcs.iter().enumerate() {
            if keep(id, arc) {
                g.add_arc(arc.tail, arc.head, arc.gamma.clone(), arc.cost.clone())
                    .expect("copying a valid arc");
                map.push(id);
            }
        }
        (g, map)
    }
}

/// A sequence of consecutive arcs. Empty walks have cost 0 and gain 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Walk {
    pub arcs: Vec<ArcId>,
}

impl Walk {
    pub fn empty() -> Self {
        Walk { arcs: Vec::new() }
    }

    pub fn new(arcs: Vec<ArcId>) -> Self {
        Walk { arcs }
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// First node of the walk, if nonempty.
    pub fn start(&self, g: &GainGraph) -> Option<NodeId> {
        self.arcs.first().map(|&a| g.arc(a).tail)
    }

    /// Last node of the walk, if nonempty.
    pub fn end(&self, g: &GainGraph) -> Option<NodeId> {
        self.arcs.last().map(|&a| g.arc(a).head)
    }

    /// Tail sequence plus the final head; empty for the empty walk.
    pub fn nodes(&self, g: &GainGraph) -> Vec<NodeId> {
        if self.arcs.is_empty() {
            return Vec::new();
        }
        let mut nodes: Vec<NodeId> = self.arcs.iter().map(|&a| g.arc(a).tail).collect();
        nodes.push(g.arc(*self.arcs.last().unwrap()).head);
        nodes
    }

    /// Check arc existence and head-to-tail chaining.
    pub fn validate(&self, g: &GainGraph) -> Result<(), GraphError> {
        for pair in self.arcs.windows(2) {
            if pair[0] >= g.arc_count() || pair[1] >= g.arc_count() {
                return Err(GraphError::MalformedWalk("arc id out of range".into()));
            }
            if g.arc(pair[0]).head != g.arc(pair[1]).tail {
                return Err(GraphError::MalformedWalk(format!(
                    "arc {} ends at node {} but arc {} starts at node {}",
                    pair[0],
                    g.arc(pair[0]).head,
                    pair[1],
                    g.arc(pair[1]).tail
                )));
            }
        }
        if let Some(&a) = self.arcs.first() {
            if a >= g.arc_count() {
                return Err(GraphError::MalformedWalk("arc id out of range".into()));
            }
        }
        Ok(())
    }

    pub fn gain(&self, g: &GainGraph) -> Scalar {
        let mut gain = Scalar::one(g.mode());
        for &a in &self.arcs {
            gain = &gain * &g.arc(a).gamma;
        }
        gain
    }

    pub fn cost(&self, g: &GainGraph) -> Scalar {
        let mut cost = Scalar::zero(g.mode());
        let mut gain = Scalar::one(g.mode());
        for &a in &self.arcs {
            cost = &cost + &(&gain * &g.arc(a).cost);
            gain = &gain * &g.arc(a).gamma;
        }
        cost
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleClass {
    /// `γ(C) < 1`.
    FlowAbsorbing,
    /// `γ(C) = 1`; `negative` marks infeasibility-certifying negative cost.
    UnitGain { negative: bool },
    /// `γ(C) > 1`.
    FlowGenerating,
}

/// Classify a closed walk that visits no node twice except its endpoint.
pub fn classify_cycle(
    g: &GainGraph,
    cycle: &Walk,
    tol: &Tolerance,
) -> Result<CycleClass, GraphError> {
    cycle.validate(g)?;
    if cycle.is_empty() {
        return Err(GraphError::MalformedWalk("empty walk is not a cycle".into()));
    }
    if cycle.start(g) != cycle.end(g) {
        return Err(GraphError::MalformedWalk("walk is not closed".into()));
    }
    let tails: Vec<NodeId> = cycle.arcs.iter().map(|&a| g.arc(a).tail).collect();
    let distinct: BTreeSet<NodeId> = tails.iter().copied().collect();
    if distinct.len() != tails.len() {
        return Err(GraphError::MalformedWalk("cycle revisits a node".into()));
    }
    let gain = cycle.gain(g);
    let rel = &gain - &Scalar::one(g.mode());
    Ok(match sign_eps(&rel, tol.eps_cmp) {
        Sign::Neg => CycleClass::FlowAbsorbing,
        Sign::Pos => CycleClass::FlowGenerating,
        Sign::Zero => {
            let negative = sign_eps(&cycle.cost(g), tol.eps_zero) == Sign::Neg;
            CycleClass::UnitGain { negative }
        }
    })
}

/// Find a simple cycle through `u` with gain strictly below one, if any.
///
/// A length-bounded product dynamic program detects a closed walk through `u`
/// with gain `< 1` (a simple witness of length ≤ n exists whenever such a
/// cycle does), and the walk is decomposed into simple pieces hoping one
/// through `u` is itself gain-deficient. When the decomposition yields none —
/// possible on arbitrary graphs when the deficiency hides in a piece avoiding
/// `u` — an exhaustive search over simple cycles through `u` settles the
/// answer exactly. The returned cycle starts and ends at `u`.
pub fn find_flow_absorbing_cycle(
    g: &GainGraph,
    u: NodeId,
    tol: &Tolerance,
) -> Option<Walk> {
    let n = g.node_count();
    let one = Scalar::one(g.mode());
    let below_one = |gain: &Scalar| sign_eps(&(gain - &one), tol.eps_cmp) == Sign::Neg;

    // best[v] after l rounds: least gain of a u→v walk with exactly l arcs.
    let mut best: Vec<Option<Scalar>> = vec![None; n];
    best[u] = Some(one.clone());
    let mut parents: Vec<Vec<Option<ArcId>>> = Vec::new();

    for _ in 1..=n {
        let mut next: Vec<Option<Scalar>> = vec![None; n];
        let mut parent: Vec<Option<ArcId>> = vec![None; n];
        for v in 0..n {
            let Some(gain_v) = &best[v] else { continue };
            for &a in g.out_arcs(v) {
                let arc = g.arc(a);
                let cand = gain_v * &arc.gamma;
                let better = match &next[arc.head] {
                    None => true,
                    Some(cur) => cand.total_cmp(cur) == std::cmp::Ordering::Less,
                };
                if better {
                    next[arc.head] = Some(cand);
                    parent[arc.head] = Some(a);
                }
            }
        }
        parents.push(parent);
        best = next;

        if let Some(gain_u) = &best[u] {
            if below_one(gain_u) {
                // Unwind the closed walk and decompose it into simple pieces.
                let l = parents.len();
                let mut rev_arcs = Vec::with_capacity(l);
                let mut v = u;
                for step in (0..l).rev() {
                    let a = parents[step][v].expect("parent chain complete");
                    rev_arcs.push(a);
                    v = g.arc(a).tail;
                }
                rev_arcs.reverse();
                if let Some(cycle) = trim_to_simple_cycle_through(g, &rev_arcs, u, tol) {
                    return Some(cycle);
                }
                // The deficiency hid in a piece avoiding u; settle exactly.
                return dfs_absorbing_cycle_through(g, u, tol);
            }
        }
    }
    None
}

/// Stack-decompose a closed walk into simple cycles and return the first
/// piece through `u` whose gain is below one, rotated to start at `u`.
fn trim_to_simple_cycle_through(
    g: &GainGraph,
    walk_arcs: &[ArcId],
    u: NodeId,
    tol: &Tolerance,
) -> Option<Walk> {
    let one = Scalar::one(g.mode());
    // Stack of (node, arc that entered it); popping a revisited node yields
    // a simple cycle built from the entering arcs above it.
    let mut stack: Vec<(NodeId, Option<ArcId>)> = vec![(u, None)];
    let mut pieces: Vec<Vec<ArcId>> = Vec::new();
    for &a in walk_arcs {
        let head = g.arc(a).head;
        if let Some(pos) = stack.iter().position(|&(node, _)| node == head) {
            let mut piece: Vec<ArcId> = stack[pos + 1..]
                .iter()
                .map(|(_, arc)| arc.expect("non-root stack entries record their arc"))
                .collect();
            piece.push(a);
            pieces.push(piece);
            stack.truncate(pos + 1);
        } else {
            stack.push((head, Some(a)));
        }
    }
    for piece in pieces {
        let walk = Walk::new(piece);
        if walk.nodes(g).contains(&u)
            && sign_eps(&(&walk.gain(g) - &one), tol.eps_cmp) == Sign::Neg
        {
            return Some(rotate_cycle_to(g, &walk, u));
        }
    }
    None
}

/// Exhaustive deterministic search (arc-id order) for a simple cycle through
/// `u` with gain below one. Exponential in the worst case; only a fallback.
fn dfs_absorbing_cycle_through(g: &GainGraph, u: NodeId, tol: &Tolerance) -> Option<Walk> {
    let one = Scalar::one(g.mode());
    let mut visited = vec![false; g.node_count()];
    let mut path: Vec<ArcId> = Vec::new();

    fn go(
        g: &GainGraph,
        u: NodeId,
        v: NodeId,
        visited: &mut Vec<bool>,
        path: &mut Vec<ArcId>,
        one: &Scalar,
        tol: &Tolerance,
    ) -> Option<Walk> {
        for &a in g.out_arcs(v) {
            let head = g.arc(a).head;
            if head == u {
                path.push(a);
                let walk = Walk::new(path.clone());
                if sign_eps(&(&walk.gain(g) - one), tol.eps_cmp) == Sign::Neg {
                    return Some(walk);
                }
                path.pop();
            } else if !visited[head] {
                visited[head] = true;
                path.push(a);
                if let Some(found) = go(g, u, head, visited, path, one, tol) {
                    return Some(found);
                }
                path.pop();
                visited[head] = false;
            }
        }
        None
    }

    visited[u] = true;
    go(g, u, u, &mut visited, &mut path, &one, tol)
}

/// Rotate a simple cycle so it starts (and ends) at `node`.
fn rotate_cycle_to(g: &GainGraph, cycle: &Walk, node: NodeId) -> Walk {
    let pos = cycle
        .arcs
        .iter()
        .position(|&a| g.arc(a).tail == node)
        .expect("cycle passes through the node");
    let mut arcs = cycle.arcs[pos..].to_vec();
    arcs.extend_from_slice(&cycle.arcs[..pos]);
    Walk::new(arcs)
}

/// Find a cycle with unit gain and strictly negative cost anywhere in the
/// graph, if one exists.
///
/// Unit-gain cycles live inside strongly connected components. A component
/// whose gains are *balanced* (every cycle has gain one) admits node scale
/// factors turning costs additive, where ordinary Bellman–Ford relaxation
/// finds a negative cycle or proves none exists; balance is established
/// constructively and checked on every arc. Components that fail the balance
/// check can still harbor unit-gain cycles among non-unit ones; those fall
/// back to exhaustive enumeration of simple cycles (exponential in the worst
/// case — in this codebase such components only arise in small adversarial
/// tests, while the solver-facing callers always present balanced ones).
pub fn detect_negative_unit_gain_cycle(g: &GainGraph, tol: &Tolerance) -> Option<Walk> {
    let comp = strongly_connected_components(g);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    for c in 0..ncomp {
        let members: Vec<NodeId> = (0..g.node_count()).filter(|&v| comp[v] == c).collect();
        let intra: Vec<ArcId> = (0..g.arc_count())
            .filter(|&a| {
                comp[g.arc(a).tail] == c && comp[g.arc(a).head] == c
            })
            .collect();
        if intra.is_empty() {
            continue;
        }
        if let Some(found) = scan_component(g, &members, &intra, tol) {
            return Some(found);
        }
    }
    None
}

fn scan_component(
    g: &GainGraph,
    members: &[NodeId],
    intra: &[ArcId],
    tol: &Tolerance,
) -> Option<Walk> {
    let one = Scalar::one(g.mode());
    let n = g.node_count();
    let mut is_intra = vec![false; g.arc_count()];
    for &a in intra {
        is_intra[a] = true;
    }

    // Build scale factors π along a forward search tree: π_head = π_tail/γ.
    let mut pi: Vec<Option<Scalar>> = vec![None; n];
    pi[members[0]] = Some(one.clone());
    let mut queue = vec![members[0]];
    while let Some(v) = queue.pop() {
        let pv = pi[v].clone().expect("queued nodes have scale factors");
        for &a in g.out_arcs(v) {
            let arc = g.arc(a);
            if !is_intra[a] || pi[arc.head].is_some() {
                continue;
            }
            pi[arc.head] = Some(&pv / &arc.gamma);
            queue.push(arc.head);
        }
    }

    // Balance check: γ_a = π_tail/π_head for every intra-component arc.
    let balanced = intra.iter().all(|&a| {
        let arc = g.arc(a);
        match (&pi[arc.tail], &pi[arc.head]) {
            (Some(pt), Some(ph)) => {
                let expect = pt / ph;
                sign_eps(&(&arc.gamma - &expect), tol.eps_cmp) == Sign::Zero
            }
            _ => false,
        }
    });

    if !balanced {
        return exhaustive_negative_unit_cycle(g, members, intra, tol);
    }

    // Rescaled costs ĉ_a = c_a/π_tail are additive along walks; a negative
    // rescaled cycle is exactly a negative unit-gain cycle here.
    let rescaled: Vec<Option<Scalar>> = (0..g.arc_count())
        .map(|a| {
            if is_intra[a] {
                let arc = g.arc(a);
                Some(&arc.cost / pi[arc.tail].as_ref().expect("member scale"))
            } else {
                None
            }
        })
        .collect();

    let mut dist: Vec<Scalar> = vec![Scalar::zero(g.mode()); n];
    let mut pred: Vec<Option<ArcId>> = vec![None; n];
    let rounds = members.len();
    let mut improved_node = None;
    for round in 0..=rounds {
        let mut improved = false;
        for &a in intra {
            let arc = g.arc(a);
            let cand = rescaled[a].as_ref().expect("intra arc rescaled") + &dist[arc.head];
            if sign_eps(&(&cand - &dist[arc.tail]), tol.eps_cmp) == Sign::Neg {
                dist[arc.tail] = cand;
                pred[arc.tail] = Some(a);
                improved = true;
                if round == rounds {
                    improved_node = Some(arc.tail);
                }
            }
        }
        if !improved {
            return None;
        }
    }
    let mut v = improved_node?;
    // Step far enough to be sure we sit on the cycle itself.
    for _ in 0..rounds {
        v = g.arc(pred[v].expect("improved nodes have predecessors")).head;
    }
    let start = v;
    let mut arcs = Vec::new();
    loop {
        let a = pred[v].expect("cycle nodes have predecessors");
        arcs.push(a);
        v = g.arc(a).head;
        if v == start {
            break;
        }
    }
    // pred[v] points along v → head, so the chase already walks forward.
    let walk = Walk::new(arcs);
    debug_assert_eq!(
        sign_eps(&(&walk.gain(g) - &one), tol.eps_cmp),
        Sign::Zero,
        "balanced component cycles have unit gain"
    );
    if sign_eps(&walk.cost(g), tol.eps_zero) == Sign::Neg {
        Some(walk)
    } else {
        // Numerically ambiguous extraction; settle exactly.
        exhaustive_negative_unit_cycle(g, members, intra, tol)
    }
}

/// Enumerate simple cycles (smallest member as anchor, arc-id order) and
/// return the first with unit gain and negative cost.
fn exhaustive_negative_unit_cycle(
    g: &GainGraph,
    members: &[NodeId],
    intra: &[ArcId],
    tol: &Tolerance,
) -> Option<Walk> {
    let one = Scalar::one(g.mode());
    let allowed: Vec<bool> = {
        let mut m = vec![false; g.arc_count()];
        for &a in intra {
            m[a] = true;
        }
        m
    };

    fn go(
        g: &GainGraph,
        anchor: NodeId,
        v: NodeId,
        allowed: &[bool],
        visited: &mut Vec<bool>,
        path: &mut Vec<ArcId>,
        one: &Scalar,
        tol: &Tolerance,
    ) -> Option<Walk> {
        for &a in g.out_arcs(v) {
            if !allowed[a] {
                continue;
            }
            let head = g.arc(a).head;
            if head == anchor {
                path.push(a);
                let walk = Walk::new(path.clone());
                if sign_eps(&(&walk.gain(g) - one), tol.eps_cmp) == Sign::Zero
                    && sign_eps(&walk.cost(g), tol.eps_zero) == Sign::Neg
                {
                    return Some(walk);
                }
                path.pop();
            } else if head > anchor && !visited[head] {
                visited[head] = true;
                path.push(a);
                if let Some(found) = go(g, anchor, head, allowed, visited, path, one, tol) {
                    return Some(found);
                }
                path.pop();
                visited[head] = false;
            }
        }
        None
    }

    let mut anchors: Vec<NodeId> = members.to_vec();
    anchors.sort_unstable();
    for &anchor in &anchors {
        let mut visited = vec![false; g.node_count()];
        visited[anchor] = true;
        let mut path = Vec::new();
        if let Some(found) =
            go(g, anchor, anchor, &allowed, &mut visited, &mut path, &one, tol)
        {
            return Some(found);
        }
    }
    None
}

/// Tarjan's algorithm, iteratively; returns a component id per node.
pub fn strongly_connected_components(g: &GainGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<NodeId> = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut next_index = 0;
    let mut next_comp = 0;

    // Explicit DFS frames: (node, next out-arc position).
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut frames: Vec<(NodeId, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while !frames.is_empty() {
            let top = frames.len() - 1;
            let (v, pos) = frames[top];
            if pos < g.out_arcs(v).len() {
                frames[top].1 += 1;
                let w = g.arc(g.out_arcs(v)[pos]).head;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("component stack nonempty");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn graph(n: usize, arcs: &[(usize, usize, (i64, i64), i64)]) -> GainGraph {
        let mut g = GainGraph::new(ArithMode::Rational, n);
        for &(t, h, (gn, gd), c) in arcs {
            g.add_arc(t, h, Scalar::ratio(gn, gd), Scalar::int(c)).unwrap();
        }
        g
    }

    #[test]
    fn walk_composition() {
        let g = graph(3, &[(0, 1, (2, 1), 1), (1, 2, (3, 1), 4)]);
        let p = Walk::new(vec![0]);
        let q = Walk::new(vec![1]);
        let pq = Walk::new(vec![0, 1]);
        assert_eq!(pq.gain(&g), &p.gain(&g) * &q.gain(&g));
        assert_eq!(pq.cost(&g), &p.cost(&g) + &(&p.gain(&g) * &q.cost(&g)));
        assert_eq!(pq.cost(&g), Scalar::int(9));
        assert_eq!(pq.gain(&g), Scalar::int(6));
        assert_eq!(pq.nodes(&g), vec![0, 1, 2]);

        let empty = Walk::empty();
        assert_eq!(empty.cost(&g), Scalar::int(0));
        assert_eq!(empty.gain(&g), Scalar::int(1));
        assert!(empty.nodes(&g).is_empty());
    }

    #[test]
    fn cycle_classification() {
        let g = graph(
            2,
            &[
                (0, 1, (1, 2), 0),  // 0: gain 1/2
                (1, 0, (1, 1), 0),  // 1: gain 1
                (0, 1, (1, 1), 1),  // 2: cost 1
                (1, 0, (1, 1), -3), // 3: cost −3
                (0, 1, (3, 1), 0),  // 4: gain 3
            ],
        );
        assert_eq!(
            classify_cycle(&g, &Walk::new(vec![0, 1]), &tol()).unwrap(),
            CycleClass::FlowAbsorbing
        );
        assert_eq!(
            classify_cycle(&g, &Walk::new(vec![2, 3]), &tol()).unwrap(),
            CycleClass::UnitGain { negative: true }
        );
        assert_eq!(
            classify_cycle(&g, &Walk::new(vec![2, 1]), &tol()).unwrap(),
            CycleClass::UnitGain { negative: false }
        );
        assert_eq!(
            classify_cycle(&g, &Walk::new(vec![4, 1]), &tol()).unwrap(),
            CycleClass::FlowGenerating
        );
        // Open walks and node-repeating walks are rejected.
        assert!(classify_cycle(&g, &Walk::new(vec![0]), &tol()).is_err());
        assert!(classify_cycle(&g, &Walk::new(vec![0, 1, 2, 3]), &tol()).is_err());
        assert!(classify_cycle(&g, &Walk::empty(), &tol()).is_err());
    }

    #[test]
    fn split_redirects_heads() {
        let g = graph(
            3,
            &[
                (0, 1, (1, 1), 0),
                (1, 1, (1, 2), 5), // self-loop at the split node
                (2, 1, (1, 1), 2),
                (1, 0, (1, 1), 3),
            ],
        );
        let s = g.split_at(1);
        assert_eq!(s.node_count(), 4);
        assert_eq!(s.arc_count(), 4);
        assert_eq!(s.arc(0).head, 3); // 0→1 becomes 0→1′
        assert_eq!(s.arc(1).tail, 1);
        assert_eq!(s.arc(1).head, 3); // self-loop becomes (1, 1′)
        assert_eq!(s.arc(2).head, 3);
        assert_eq!(s.arc(3).head, 0); // heads ≠ 1 untouched
        assert_eq!(s.arc(3).tail, 1); // tails never move
    }

    #[test]
    fn violated_arc_with_infinities() {
        let g = graph(2, &[(0, 1, (1, 2), 3)]);
        let eps = 1e-9;
        // y_0 ≤ 3 + y_1/2
        let fin = |v: i64| ExtScalar::Finite(Scalar::int(v));
        assert!(!g.arc_violated(0, &[fin(5), fin(4)], eps));
        assert!(g.arc_violated(0, &[fin(6), fin(4)], eps));
        assert!(!g.arc_violated(0, &[fin(100), ExtScalar::PosInf], eps));
        assert!(g.arc_violated(0, &[ExtScalar::PosInf, fin(0)], eps));
        assert!(!g.arc_violated(0, &[ExtScalar::PosInf, ExtScalar::PosInf], eps));
    }

    #[test]
    fn absorbing_cycle_through_node() {
        let g = graph(2, &[(0, 1, (1, 1), 0), (1, 0, (1, 3), 0)]);
        let c = find_flow_absorbing_cycle(&g, 0, &tol()).unwrap();
        assert_eq!(c.arcs, vec![0, 1]);
        assert_eq!(c.start(&g), Some(0));
        assert_eq!(classify_cycle(&g, &c, &tol()).unwrap(), CycleClass::FlowAbsorbing);
        // Rotated when asked from the other node.
        let c1 = find_flow_absorbing_cycle(&g, 1, &tol()).unwrap();
        assert_eq!(c1.start(&g), Some(1));
    }

    #[test]
    fn absorbing_cycle_not_through_node_is_none() {
        // Node 2 feeds the absorbing cycle but lies on no cycle itself.
        let g = graph(
            3,
            &[(0, 1, (1, 1), 0), (1, 0, (1, 3), 0), (2, 0, (1, 1), 0)],
        );
        assert!(find_flow_absorbing_cycle(&g, 2, &tol()).is_none());
        assert!(find_flow_absorbing_cycle(&g, 0, &tol()).is_some());
    }

    #[test]
    fn absorbing_walk_detection_falls_back_honestly() {
        // The cheapest closed walk through 0 detours through the absorbing
        // 1↔2 cycle, but no simple cycle through 0 itself is absorbing: the
        // walk decomposition finds nothing and the exhaustive fallback must
        // settle the answer as None. (Node 3 only widens the length budget
        // so the detour walk is seen at all.)
        let g = graph(
            4,
            &[
                (0, 1, (1, 1), 0),
                (1, 2, (1, 1), 0),
                (2, 1, (1, 4), 0),
                (1, 0, (1, 1), 0),
            ],
        );
        assert!(find_flow_absorbing_cycle(&g, 0, &tol()).is_none());
        // Through 1 or 2 the short cycle itself is the answer.
        let c = find_flow_absorbing_cycle(&g, 1, &tol()).unwrap();
        assert_eq!(c.arcs, vec![1, 2]);
    }

    #[test]
    fn absorbing_self_loop() {
        let g = graph(2, &[(0, 1, (1, 1), 0), (1, 1, (1, 4), 7), (1, 0, (1, 1), 0)]);
        let c = find_flow_absorbing_cycle(&g, 1, &tol()).unwrap();
        assert_eq!(c.arcs, vec![1]);
    }

    #[test]
    fn negative_unit_cycle_additive() {
        let g = graph(2, &[(0, 1, (1, 1), 1), (1, 0, (1, 1), -3)]);
        let c = detect_negative_unit_gain_cycle(&g, &tol()).unwrap();
        assert_eq!(
            classify_cycle(&g, &c, &tol()).unwrap(),
            CycleClass::UnitGain { negative: true }
        );
        assert_eq!(c.cost(&g), Scalar::int(-2));
    }

    #[test]
    fn negative_unit_cycle_balanced_gains() {
        // Gains 2 and 1/2 balance out; cost 2 + 2·(−2) = −2 < 0.
        let g = graph(2, &[(0, 1, (2, 1), 2), (1, 0, (1, 2), -2)]);
        let c = detect_negative_unit_gain_cycle(&g, &tol()).unwrap();
        assert_eq!(
            classify_cycle(&g, &c, &tol()).unwrap(),
            CycleClass::UnitGain { negative: true }
        );
    }

    #[test]
    fn negative_absorbing_cycle_is_not_unit() {
        // γ(C) = 1/2 with negative cost: not an infeasibility certificate.
        let g = graph(2, &[(0, 1, (1, 2), -1), (1, 0, (1, 1), -1)]);
        assert!(detect_negative_unit_gain_cycle(&g, &tol()).is_none());
    }

    #[test]
    fn unit_cycle_hidden_among_unbalanced_gains() {
        // Two 2-cycles on the same nodes: one absorbing, one unit negative.
        // The component is unbalanced, exercising the exhaustive fallback.
        let g = graph(
            2,
            &[
                (0, 1, (1, 2), 0),
                (1, 0, (1, 1), 0),
                (0, 1, (1, 1), -1),
                (1, 0, (1, 1), -1),
            ],
        );
        let c = detect_negative_unit_gain_cycle(&g, &tol()).unwrap();
        assert_eq!(
            classify_cycle(&g, &c, &tol()).unwrap(),
            CycleClass::UnitGain { negative: true }
        );
    }

    #[test]
    fn no_cycles_no_detection() {
        let g = graph(3, &[(0, 1, (1, 1), -5), (1, 2, (1, 1), -5)]);
        assert!(detect_negative_unit_gain_cycle(&g, &tol()).is_none());
        assert!(find_flow_absorbing_cycle(&g, 0, &tol()).is_none());
    }

    #[test]
    fn scc_layout() {
        let g = graph(
            4,
            &[(0, 1, (1, 1), 0), (1, 0, (1, 1), 0), (1, 2, (1, 1), 0), (3, 2, (1, 1), 0)],
        );
        let comp = strongly_connected_components(&g);
        assert_eq!(comp[0], comp[1]);
        assert_ne!(comp[0], comp[2]);
        assert_ne!(comp[2], comp[3]);
    }

    #[test]
    fn filter_preserves_arc_identity_via_map() {
        let g = graph(2, &[(0, 1, (1, 1), 0), (1, 0, (2, 1), 1), (0, 0, (1, 1), -1)]);
        let (sub, map) = g.filter_arcs(|_, arc| arc.gamma == Scalar::int(1));
        assert_eq!(sub.arc_count(), 2);
        assert_eq!(map, vec![0, 2]);
        assert_eq!(sub.arc(1).tail, 0);
        assert_eq!(sub.arc(1).head, 0);
    }
}
