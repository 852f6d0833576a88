//! Synchronous label relaxation over gain graphs, with provenance.
//!
//! One *round* relaxes every node simultaneously (Jacobi style):
//! `y′_v = min(y_v, min over out-arcs (v,w) of c + γ·y_w)`, with `+∞`
//! absorbing. A full run executes exactly as many rounds as the graph has
//! nodes — no early exit — and records, per round and node, which arc (if
//! any) strictly improved the label. Chasing those records backward through
//! the rounds reconstructs the walk explaining a node's final label.
//!
//! [`update_dual`] packages the relaxation step used inside the parametric
//! solvers: lower the bound at a designated sink copy `u′`, re-relax, and
//! either return the settled labels together with the explaining walk from
//! `u` (whose gain yields a supergradient of `δ ↦ y_u(δ) − δ`), or extract a
//! flow-generating cycle plus its exit path as an unboundedness certificate
//! when a violated arc survives all rounds.

use thiserror::Error;

use crate::gaingraph::{ArcId, GainGraph, NodeId, Walk};
use crate::numerics::{ext_add_mul, ext_sign_diff, sign_eps, ExtScalar, Scalar, Sign, Tolerance};

#[derive(Clone, Debug)]
pub struct GrapevineRun {
    pub labels: Vec<ExtScalar>,
    /// `preds[r][v]`: arc that strictly improved `v` in round `r+1`, if any.
    pub preds: Vec<Vec<Option<ArcId>>>,
    pub rounds_executed: usize,
}

/// Relax `labels` for exactly `g.node_count()` rounds.
pub fn run_grapevine(g: &GainGraph, labels: Vec<ExtScalar>, tol: &Tolerance) -> GrapevineRun {
    assert_eq!(labels.len(), g.node_count(), "one label per node");
    let rounds = g.node_count();
    let mut labels = labels;
    let mut preds = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut next = labels.clone();
        let mut pred: Vec<Option<ArcId>> = vec![None; g.node_count()];
        for v in 0..g.node_count() {
            for &a in g.out_arcs(v) {
                let arc = g.arc(a);
                let cand = ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
                if ext_sign_diff(&cand, &next[v], tol.eps_cmp) == Sign::Neg {
                    next[v] = cand;
                    pred[v] = Some(a);
                }
            }
        }
        labels = next;
        preds.push(pred);
    }
    GrapevineRun { labels, preds, rounds_executed: rounds }
}

impl GrapevineRun {
    /// Reconstruct the improving walk that explains `v`'s final label: at
    /// each round level, stay put when the node was not improved that round,
    /// otherwise follow the improving arc to its head one level down.
    pub fn trace_walk(&self, g: &GainGraph, v: NodeId) -> Walk {
        let mut arcs = Vec::new();
        let mut node = v;
        let mut level = self.preds.len();
        while level > 0 {
            match self.preds[level - 1][node] {
                None => level -= 1,
                Some(a) => {
                    arcs.push(a);
                    node = g.arc(a).head;
                    level -= 1;
                }
            }
        }
        Walk::new(arcs)
    }

    /// Lowest-id arc still violated under the final labels, if any.
    pub fn violated_arc(&self, g: &GainGraph, tol: &Tolerance) -> Option<ArcId> {
        (0..g.arc_count()).find(|&a| g.arc_violated(a, &self.labels, tol.eps_cmp))
    }
}

#[derive(Clone, Debug)]
pub enum DualUpdateResult {
    Updated {
        labels: Vec<ExtScalar>,
        /// Improving walk from `u`; empty when the label at `u` kept a
        /// bound that does not depend on the sink value.
        path: Walk,
        /// Supergradient of `δ ↦ y_u(δ) − δ`: `γ(path) − 1` when the walk
        /// reaches `u′`, else `−1`.
        supergradient: Scalar,
    },
    /// A violated arc survived relaxation: spinning `cycle` (gain > 1) and
    /// exiting along `path` to `u′` drives the value at the cycle below any
    /// bound, certifying `y_u(delta) = −∞`.
    Infeasible { cycle: Walk, path: Walk, delta: Scalar },
}

#[derive(Debug, Error)]
pub enum GrapevineError {
    /// The relaxation state contradicts the caller's settledness promise.
    #[error("relaxation contract violation: {0}")]
    ContractViolation(String),
}

/// Lower the label of the sink copy `u′` to `delta_prime` and re-relax.
///
/// The caller promises the incoming labels are settled (no violated arc) for
/// some previous sink value `≥ delta_prime`; under that promise a violated
/// arc after a full run can only be explained by a flow-generating cycle,
/// which is extracted from the improvement provenance.
pub fn update_dual(
    g: &GainGraph,
    labels: &[ExtScalar],
    u: NodeId,
    u_prime: NodeId,
    delta_prime: &Scalar,
    tol: &Tolerance,
) -> Result<DualUpdateResult, GrapevineError> {
    let mut start = labels.to_vec();
    start[u_prime] = ExtScalar::Finite(delta_prime.clone());
    let run = run_grapevine(g, start, tol);

    if let Some(arc) = run.violated_arc(g, tol) {
        let trace = run.trace_walk(g, g.arc(arc).head);
        let (cycle, path) = split_first_cycle(g, &trace).ok_or_else(|| {
            GrapevineError::ContractViolation(format!(
                "violated arc {arc} but the improvement trace contains no cycle"
            ))
        })?;
        let gain = cycle.gain(g);
        let one = Scalar::one(g.mode());
        if sign_eps(&(&gain - &one), tol.eps_cmp) != Sign::Pos {
            return Err(GrapevineError::ContractViolation(format!(
                "violated arc {arc} traced to a cycle of gain {gain}, expected a generating one"
            )));
        }
        let terminal = if path.is_empty() { cycle.end(g) } else { path.end(g) };
        if terminal != Some(u_prime) {
            return Err(GrapevineError::ContractViolation(
                "improvement trace does not terminate at the sink copy".into(),
            ));
        }
        return Ok(DualUpdateResult::Infeasible { cycle, path, delta: delta_prime.clone() });
    }

    let path = run.trace_walk(g, u);
    let supergradient = match path.end(g) {
        Some(end) if end == u_prime => &path.gain(g) - &Scalar::one(g.mode()),
        _ => -Scalar::one(g.mode()),
    };
    Ok(DualUpdateResult::Updated { labels: run.labels, path, supergradient })
}

/// Split a walk at its first node repetition into the simple cycle between
/// the two occurrences and the remainder following the second occurrence.
fn split_first_cycle(g: &GainGraph, walk: &Walk) -> Option<(Walk, Walk)> {
    let nodes = walk.nodes(g);
    let mut seen: Vec<(NodeId, usize)> = Vec::new();
    for (j, &x) in nodes.iter().enumerate() {
        if let Some(&(_, i)) = seen.iter().find(|&&(node, _)| node == x) {
            let cycle = Walk::new(walk.arcs[i..j].to_vec());
            let rest = Walk::new(walk.arcs[j..].to_vec());
            return Some((cycle, rest));
        }
        seen.push((x, j));
    }
    None
}
