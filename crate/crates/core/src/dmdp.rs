//! Deterministic Markov decision processes with discounted transitions.
//!
//! A deterministic MDP is a gain graph whose factors are all at most one:
//! arc `(v, w, γ, c)` says that the optimal value at `v` is bounded by
//! `c + γ·y_w`, and a policy picks one outgoing arc per node. The pointwise
//! maximal solution of the constraint system is exactly the optimal value
//! vector, and a policy reading off tight arcs is optimal.
//!
//! The solver reuses the phase loop from [`crate::m2vpi`], but swaps the
//! relaxation transport: because every factor is ≤ 1 and labels only ever
//! decrease through the target, each evaluation is a shortest-path
//! recomputation with nonnegative reduced costs, so a Dijkstra-style pass
//! ([`dijkstra_relabel`]) replaces the round-based propagation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::gaingraph::{ArcId, GainGraph, NodeId, Walk};
use crate::m2vpi::{
    map_walk, phase_setup, InfeasibilityEvidence, OracleStep, PhaseNewton, PhasePrep, PhaseReport,
    PhaseSetup, Side, SolveOutcome,
};
use crate::newton::{
    solve_root, ConcaveOracle, NewtonConfig, NewtonError, NewtonOutcome, OracleReply,
};
use crate::numerics::{ext_add_mul, sign, ExtScalar, Scalar, Sign, Tolerance};

#[derive(Debug, Error)]
pub enum DmdpError {
    #[error("arc {arc} has discount factor outside (0, 1]")]
    DiscountOutOfRange { arc: ArcId },
    #[error("node {node} has no outgoing arc; a policy cannot be formed")]
    MissingAction { node: NodeId },
    #[error("relabel precondition violated: {0}")]
    PreconditionViolation(String),
}

/// A validated deterministic MDP: every discount factor lies in `(0, 1]` and
/// every node has at least one outgoing arc.
pub struct DmdpInstance {
    graph: GainGraph,
}

impl DmdpInstance {
    pub fn new(graph: GainGraph) -> Result<Self, DmdpError> {
        let one = Scalar::one(graph.mode());
        let zero = Scalar::zero(graph.mode());
        for id in 0..graph.arc_count() {
            let arc = graph.arc(id);
            if arc.gamma.total_cmp(&zero) != Ordering::Greater
                || arc.gamma.total_cmp(&one) == Ordering::Greater
            {
                return Err(DmdpError::DiscountOutOfRange { arc: id });
            }
        }
        for node in 0..graph.node_count() {
            if graph.out_arcs(node).is_empty() {
                return Err(DmdpError::MissingAction { node });
            }
        }
        Ok(DmdpInstance { graph })
    }

    pub fn graph(&self) -> &GainGraph {
        &self.graph
    }
}

/// Result of one relabeling pass: the lowered labels and the in-tree of
/// tight arcs rooted at the target (`preds[v]` is the arc `v` follows; the
/// target and untouched nodes carry `None`).
pub struct RelabelOutcome {
    pub labels: Vec<ExtScalar>,
    pub preds: Vec<Option<ArcId>>,
}

struct HeapEntry {
    z: Scalar,
    node: NodeId,
}

// The standard library heap pops its greatest element; order entries so the
// smallest delta (ties: lowest node id) is "greatest".
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.z.total_cmp(&self.z).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

/// Lower the bound on a zero-out-degree target node `t` from `y_t` to
/// `alpha` and propagate the decrease backwards, assuming `y` satisfies
/// every constraint (nonnegative reduced costs).
///
/// Because all factors are ≤ 1 the deltas contract along every arc, so a
/// single Dijkstra-style sweep settles each affected node once; nodes that
/// cannot reach `t` keep their labels and stay outside the tree. Labels may
/// be `∞` on nodes that play no role, but any node the decrease would touch
/// must carry a finite label.
///
/// Uses a binary heap with lazy reinsertion instead of a decrease-key heap;
/// at the sizes this library targets the extra `log n` factor on pushes is
/// not observable. Ties on equal deltas pop the lower node id.
pub fn dijkstra_relabel(
    g: &GainGraph,
    t: NodeId,
    y: &[ExtScalar],
    alpha: &Scalar,
    tol: &Tolerance,
) -> Result<RelabelOutcome, DmdpError> {
    let n = g.node_count();
    assert_eq!(y.len(), n, "label vector must cover the graph");
    let one = Scalar::one(g.mode());
    if !g.out_arcs(t).is_empty() {
        return Err(DmdpError::PreconditionViolation(format!(
            "target node {t} has outgoing arcs"
        )));
    }
    for id in 0..g.arc_count() {
        let arc = g.arc(id);
        if arc.gamma.total_cmp(&one) == Ordering::Greater {
            return Err(DmdpError::PreconditionViolation(format!(
                "arc {id} has expansive factor; deltas would not contract"
            )));
        }
        if let (ExtScalar::Finite(yv), ExtScalar::Finite(yw)) = (&y[arc.tail], &y[arc.head]) {
            let reduced = &(&arc.cost + &(&arc.gamma * yw)) - yv;
            if sign(&reduced, tol) == Sign::Neg {
                return Err(DmdpError::PreconditionViolation(format!(
                    "arc {id} has negative reduced cost under the input labels"
                )));
            }
        }
    }
    let y_t = match &y[t] {
        ExtScalar::Finite(v) => v.clone(),
        ExtScalar::PosInf => {
            return Err(DmdpError::PreconditionViolation(
                "target label must be finite".into(),
            ))
        }
    };
    let z_t = alpha - &y_t;
    if sign(&z_t, tol) != Sign::Neg {
        return Err(DmdpError::PreconditionViolation(
            "new target bound must strictly decrease the target label".into(),
        ));
    }

    let mut in_arcs: Vec<Vec<ArcId>> = vec![Vec::new(); n];
    for id in 0..g.arc_count() {
        in_arcs[g.arc(id).head].push(id);
    }

    // `z[v]` is the pending decrease of `y_v`; absent means unimproved.
    let mut z: Vec<Option<Scalar>> = vec![None; n];
    let mut preds: Vec<Option<ArcId>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    z[t] = Some(z_t.clone());
    heap.push(HeapEntry { z: z_t, node: t });

    let mut last_popped: Option<Scalar> = None;
    while let Some(entry) = heap.pop() {
        let v = entry.node;
        if settled[v] {
            continue; // stale reinsertion
        }
        match &z[v] {
            Some(best) if best.total_cmp(&entry.z) == Ordering::Equal => {}
            _ => continue, // stale reinsertion
        }
        settled[v] = true;
        // The extraction sequence is nondecreasing: candidate deltas are
        // built from already-extracted deltas scaled by factors ≤ 1, so
        // nothing smaller than the current minimum can appear later.
        if let Some(prev) = &last_popped {
            debug_assert_ne!(
                entry.z.total_cmp(prev),
                Ordering::Less,
                "extraction deltas must be nondecreasing"
            );
        } else {
            debug_assert_eq!(v, t, "the target is extracted first");
        }
        debug_assert_eq!(sign(&entry.z, tol), Sign::Neg, "only strict decreases settle");
        last_popped = Some(entry.z.clone());

        let y_v_new = match &y[v] {
            ExtScalar::Finite(yv) => yv + &entry.z,
            ExtScalar::PosInf => unreachable!("improved nodes carry finite labels"),
        };
        for &aid in &in_arcs[v] {
            let arc = g.arc(aid);
            let u = arc.tail;
            if settled[u] {
                continue;
            }
            let y_u = match &y[u] {
                ExtScalar::Finite(val) => val,
                ExtScalar::PosInf => {
                    // A finite bound now reaches a node that was recorded as
                    // unbounded, so the input labels were not settled.
                    return Err(DmdpError::PreconditionViolation(format!(
                        "node {u} is unbounded yet reaches the decrease via arc {aid}"
                    )));
                }
            };
            let candidate = &(&arc.cost + &(&arc.gamma * &y_v_new)) - y_u;
            if sign(&candidate, tol) != Sign::Neg {
                continue; // no improvement over the implicit zero delta
            }
            let better = match &z[u] {
                None => true,
                Some(cur) => candidate.total_cmp(cur) == Ordering::Less,
            };
            if better {
                z[u] = Some(candidate.clone());
                preds[u] = Some(aid);
                heap.push(HeapEntry { z: candidate.clone(), node: u });
            }
        }
    }

    let mut labels = y.to_vec();
    for v in 0..n {
        if let Some(delta) = &z[v] {
            match &y[v] {
                ExtScalar::Finite(yv) => labels[v] = ExtScalar::Finite(yv + delta),
                ExtScalar::PosInf => unreachable!("improved nodes carry finite labels"),
            }
        }
    }
    if cfg!(debug_assertions) {
        for (v, pred) in preds.iter().enumerate() {
            let Some(aid) = pred else { continue };
            let arc = g.arc(*aid);
            let bound = ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
            debug_assert_eq!(
                crate::numerics::ext_sign_diff(&labels[v], &bound, tol.eps_cmp),
                Sign::Zero,
                "tree arcs are tight under the output labels"
            );
        }
        for id in 0..g.arc_count() {
            debug_assert!(
                !g.arc_violated(id, &labels, tol.eps_cmp),
                "output labels keep every reduced cost nonnegative"
            );
        }
    }
    Ok(RelabelOutcome { labels, preds })
}

/// Follow the tight-arc tree from `from` until the chain ends.
fn tree_path(preds: &[Option<ArcId>], g: &GainGraph, from: NodeId) -> Walk {
    let mut arcs = Vec::new();
    let mut at = from;
    while let Some(aid) = preds[at] {
        arcs.push(aid);
        at = g.arc(aid).head;
    }
    Walk::new(arcs)
}

/// Root-finding oracle backed by [`dijkstra_relabel`] on the split phase
/// graph. Mirrors the transactional bookkeeping of the propagation-based
/// oracle: every committed evaluation is kept so a discarded trial can be
/// rolled back exactly.
struct DijkstraOracle<'a> {
    split: &'a GainGraph,
    u: NodeId,
    u_prime: NodeId,
    tol: Tolerance,
    history: Vec<OracleStep>,
    /// The phase's pre-checked first evaluation, consumed by the first
    /// `eval` call. Re-running it is not an option: its labels still carry
    /// the old target bound, so the relabel precondition would reject it.
    initial: Option<OracleStep>,
}

impl ConcaveOracle for DijkstraOracle<'_> {
    fn eval(&mut self, delta: &Scalar) -> Result<OracleReply, NewtonError> {
        if let Some(step) = self.initial.take() {
            debug_assert_eq!(step.delta.total_cmp(delta), Ordering::Equal);
            let reply = step.reply.clone();
            self.history.push(step);
            return Ok(reply);
        }
        let committed = &self
            .history
            .last()
            .expect("the cached first evaluation precedes every other eval")
            .labels;
        let out = dijkstra_relabel(self.split, self.u_prime, committed, delta, &self.tol)
            .map_err(|e| NewtonError::OracleFailure(format!("relabel failed: {e}")))?;
        let walk = tree_path(&out.preds, self.split, self.u);
        let value = match &out.labels[self.u] {
            ExtScalar::Finite(v) => v - delta,
            ExtScalar::PosInf => {
                return Err(NewtonError::OracleFailure(
                    "phase node lost its finite label during a relabel".into(),
                ))
            }
        };
        let supergradient = match walk.end(self.split) {
            Some(end) if end == self.u_prime => {
                &walk.gain(self.split) - &Scalar::one(self.split.mode())
            }
            _ => -Scalar::one(self.split.mode()),
        };
        let reply = OracleReply::Finite { value, supergradient };
        self.history.push(OracleStep {
            delta: delta.clone(),
            labels: out.labels,
            walk,
            reply: reply.clone(),
        });
        Ok(reply)
    }

    fn discard_last(&mut self) {
        self.history.pop();
    }
}

/// Solver output: the optimal value of every node (`∞` when the objective
/// is unbounded there), the per-phase reports, and — when feasible — a
/// policy of tight arcs, one per node.
pub struct DmdpReport {
    pub outcome: SolveOutcome,
    pub phases: Vec<PhaseReport>,
    pub policy: Option<Vec<ArcId>>,
}

/// Compute optimal values and an optimal policy, or report infeasibility.
///
/// Feasibility is decided up front: with all factors ≤ 1 the system is
/// infeasible exactly when the subgraph of factor-one arcs contains an
/// additively negative cycle. After that check passes, the phase loop can
/// no longer fail, so any later infeasibility verdict is reported as a
/// numeric breakdown rather than as a result.
pub fn solve_dmdp(inst: &DmdpInstance, cfg: &NewtonConfig) -> Result<DmdpReport, NewtonError> {
    let g = inst.graph();
    let n = g.node_count();
    let one = Scalar::one(g.mode());
    let tol = &cfg.tol;

    let (unit, unit_map) = g.filter_arcs(|_, a| sign(&(&a.gamma - &one), tol) == Sign::Zero);
    if let Some(cycle) = crate::gaingraph::detect_negative_unit_gain_cycle(&unit, tol) {
        let cycle = map_walk(&cycle, &unit_map);
        let node = cycle.start(g).expect("a detected cycle is nonempty");
        return Ok(DmdpReport {
            outcome: SolveOutcome::Infeasible {
                phase: 0,
                node,
                side: Side::Forward,
                evidence: InfeasibilityEvidence::NegativeUnitGainCycle { cycle },
            },
            phases: Vec::new(),
            policy: None,
        });
    }

    let mut labels = vec![ExtScalar::PosInf; n];
    let mut phases: Vec<PhaseReport> = Vec::new();
    for u in 0..n {
        let phase = phases.len();
        let (active, _) = g.filter_arcs(|_, a| a.tail <= u);
        let active_arcs = active.arc_count();
        let setup = match phase_setup(g, &labels, u, tol)? {
            PhasePrep::Skip => {
                phases.push(PhaseReport {
                    phase,
                    node: u,
                    side: Side::Forward,
                    active_arcs,
                    seeded_from_cycle: false,
                    skipped: true,
                    exit_labels: labels.clone(),
                    newton: None,
                });
                continue;
            }
            PhasePrep::Infeasible { .. } => {
                return Err(NewtonError::OracleFailure(format!(
                    "phase {phase} reported infeasibility after the negative-cycle \
                     precheck passed; numeric tolerance breakdown"
                )))
            }
            PhasePrep::Ready(setup) => *setup,
        };
        let PhaseSetup {
            split,
            arc_map,
            u_prime,
            delta1,
            seeded,
            base_labels: _,
            initial_labels,
            initial_walk,
            f1,
            g1,
        } = setup;

        let mut oracle = DijkstraOracle {
            split: &split,
            u,
            u_prime,
            tol: tol.clone(),
            history: Vec::new(),
            initial: Some(OracleStep {
                delta: delta1.clone(),
                labels: initial_labels,
                walk: initial_walk,
                reply: OracleReply::Finite { value: f1.clone(), supergradient: g1.clone() },
            }),
        };
        let result = solve_root(&mut oracle, &delta1, &g1, cfg)?;
        let mut history = oracle.history;
        if history.len() > result.trace.len() {
            history.pop();
        }
        assert_eq!(history.len(), result.trace.len(), "oracle steps must match the trace");
        let newton = PhaseNewton {
            delta1,
            entry_labels: labels.clone(),
            iterate_labels: history.iter().map(|s| s.labels.clone()).collect(),
            iterate_walks: history.iter().map(|s| map_walk(&s.walk, &arc_map)).collect(),
            result: result.clone(),
        };
        match result.outcome {
            NewtonOutcome::Root { delta } => {
                let settled = &history.last().expect("root implies an accepted step").labels;
                let mut out = settled[..n].to_vec();
                if g.mode() == crate::numerics::ArithMode::Rational {
                    assert_eq!(
                        out[u],
                        ExtScalar::Finite(delta.clone()),
                        "the settled value at a root equals the root"
                    );
                }
                out[u] = ExtScalar::Finite(delta);
                labels = out;
                phases.push(PhaseReport {
                    phase,
                    node: u,
                    side: Side::Forward,
                    active_arcs,
                    seeded_from_cycle: seeded,
                    skipped: false,
                    exit_labels: labels.clone(),
                    newton: Some(newton),
                });
            }
            NewtonOutcome::NoRoot { .. } => {
                return Err(NewtonError::OracleFailure(format!(
                    "phase {phase} found no root after the negative-cycle precheck \
                     passed; numeric tolerance breakdown"
                )))
            }
        }
    }

    for id in 0..g.arc_count() {
        if g.arc_violated(id, &labels, tol.eps_cmp) {
            return Err(NewtonError::OracleFailure(format!(
                "final values violate arc {id}; numeric tolerance breakdown"
            )));
        }
    }

    let policy = extract_policy(g, &labels, tol)?;
    Ok(DmdpReport {
        outcome: SolveOutcome::MaxSolution { labels },
        phases,
        policy: Some(policy),
    })
}

/// Pick one tight outgoing arc per node (lowest id). Nodes with unbounded
/// value are unconstrained, so any action is optimal; take the first.
fn extract_policy(
    g: &GainGraph,
    labels: &[ExtScalar],
    tol: &Tolerance,
) -> Result<Vec<ArcId>, NewtonError> {
    let mut policy = Vec::with_capacity(g.node_count());
    for v in 0..g.node_count() {
        let outs = g.out_arcs(v);
        match &labels[v] {
            ExtScalar::PosInf => policy.push(outs[0]),
            finite => {
                let tight = outs.iter().copied().find(|&aid| {
                    let arc = g.arc(aid);
                    let bound = ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
                    crate::numerics::ext_sign_diff(finite, &bound, tol.eps_cmp) == Sign::Zero
                });
                match tight {
                    Some(aid) => policy.push(aid),
                    None => {
                        return Err(NewtonError::OracleFailure(format!(
                            "no tight arc at node {v}; the values are not maximal"
                        )))
                    }
                }
            }
        }
    }
    Ok(policy)
}

/// Reference verdict from brute force over all policies.
#[derive(Clone, Debug)]
pub enum PolicyAnswer {
    Infeasible,
    Values(Vec<ExtScalar>),
}

/// Evaluate every policy in closed form and take the pointwise minimum.
///
/// Under one policy each node walks into a cycle. A cycle with factor < 1
/// pins its entry value to `c(C)/(1−γ(C))` and the approach path `Q` gives
/// `c(Q) + γ(Q)·(entry value)`; a factor-one cycle leaves the value
/// unconstrained (`∞`) when its cost is nonnegative and makes the whole
/// instance infeasible when negative. Exponential in the number of nodes —
/// a test oracle, not a solver.
pub fn enumerate_policy_values(inst: &DmdpInstance) -> PolicyAnswer {
    let g = inst.graph();
    let n = g.node_count();
    let one = Scalar::one(g.mode());
    let mut best = vec![ExtScalar::PosInf; n];
    let mut choice: Vec<usize> = vec![0; n];
    loop {
        let pick: Vec<ArcId> = (0..n).map(|v| g.out_arcs(v)[choice[v]]).collect();
        let mut values: Vec<Option<ExtScalar>> = vec![None; n];
        for start in 0..n {
            if values[start].is_some() {
                continue;
            }
            // Walk the policy's functional graph until a computed value or a
            // repeat; `seen[v]` is v's position in the chain.
            let mut chain = Vec::new();
            let mut seen: Vec<Option<usize>> = vec![None; n];
            let mut at = start;
            let entry_value = loop {
                if let Some(val) = &values[at] {
                    break val.clone();
                }
                if let Some(pos) = seen[at] {
                    // Cycle: arcs chain[pos..] close at `at`.
                    let cycle = Walk::new(chain[pos..].to_vec());
                    let gain = cycle.gain(g);
                    let cost = cycle.cost(g);
                    let val = if gain.total_cmp(&one) == Ordering::Equal {
                        if cost.total_cmp(&Scalar::zero(g.mode())) == Ordering::Less {
                            return PolicyAnswer::Infeasible;
                        }
                        ExtScalar::PosInf
                    } else {
                        ExtScalar::Finite(&cost / &(&one - &gain))
                    };
                    values[at] = Some(val.clone());
                    // Unwind the tail of the chain beyond the cycle entry.
                    chain.truncate(pos);
                    break val;
                }
                seen[at] = Some(chain.len());
                chain.push(pick[at]);
                at = g.arc(pick[at]).head;
            };
            let mut val = entry_value;
            for &aid in chain.iter().rev() {
                let arc = g.arc(aid);
                val = ext_add_mul(&arc.cost, &arc.gamma, &val);
                values[arc.tail] = Some(val.clone());
            }
        }
        for v in 0..n {
            let val = values[v].clone().expect("every node was evaluated");
            if val.total_cmp(&best[v]) == Ordering::Less {
                best[v] = val;
            }
        }
        // Advance the mixed-radix choice counter.
        let mut v = 0;
        loop {
            if v == n {
                return PolicyAnswer::Values(best);
            }
            choice[v] += 1;
            if choice[v] < g.out_arcs(v).len() {
                break;
            }
            choice[v] = 0;
            v += 1;
        }
    }
}
