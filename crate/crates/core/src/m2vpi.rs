//! Solver for monotone two-variable-per-inequality systems.
//!
//! A system is a gain graph in which arc `(u, v, γ, c)` encodes the
//! constraint `y_u ≤ c + γ·y_v`. The solver introduces one node per phase,
//! splits it from its incoming arcs, and runs the root-finding engine on the
//! concave value function `δ ↦ y_u(δ) − δ`, with the relaxation procedure
//! from [`crate::grapevine`] serving as the value/supergradient oracle.
//! Labels persist across phases, so the final vector is the pointwise-
//! maximal solution, with `∞` marking coordinates that are unbounded above.
//!
//! The module also contains the reduction from general two-variable
//! inequalities onto signed variable copies, the system reversal that swaps
//! upper for lower bounds (solve it to get the pointwise-minimal solution,
//! negated), and the recovery of an explicit finite feasible point from the
//! two bound vectors.
//!
//! Infeasibility is never a bare verdict: every early exit carries evidence
//! (a violated arc, a non-contracting closed walk, a pumping cycle, or a
//! negative unit-gain cycle) that can be re-checked against the instance by
//! direct arithmetic.

use std::cmp::Ordering;

use thiserror::Error;

use crate::gaingraph::{
    find_flow_absorbing_cycle, detect_negative_unit_gain_cycle, ArcId, GainGraph, NodeId, Walk,
};
use crate::grapevine::{update_dual, run_grapevine, DualUpdateResult, GrapevineError};
use crate::newton::{
    solve_root, ConcaveOracle, NewtonConfig, NewtonError, NewtonOutcome, NewtonResult, OracleReply,
};
use crate::numerics::{sign, sign_eps, ArithMode, ExtScalar, Scalar, Sign, Tolerance};

/// Which orientation of the system a phase (or a piece of evidence) refers
/// to. `Reversed` items live in the arc-id space of [`reverse_system`]; arc
/// ids coincide with the original system's, but tails and heads are swapped
/// and gains and costs transformed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Forward,
    Reversed,
}

/// Reason a no-root verdict was reached mid-solve.
#[derive(Clone, Debug)]
pub enum NoRootKind {
    /// Spinning `cycle` (gain > 1) and leaving along `path` pushes the value
    /// at the cycle's anchor below every bound: the trial value made the
    /// restricted system unbounded, so no root exists.
    ValueUnbounded { cycle: Walk, path: Walk },
    /// A closed walk at the phase node with gain ≥ 1 whose bound is already
    /// negative: the value function stays negative for every smaller trial.
    NonNegativeGradient { path: Walk, f_value: Scalar },
}

/// Re-checkable witness for an infeasible outcome. Walks are stated in the
/// arc ids of the side's system (see [`Side`]).
#[derive(Clone, Debug)]
pub enum InfeasibilityEvidence {
    /// The phase's initial relaxation did not settle: `arc` (an id in the
    /// side's system) is still violated under `labels`, which are indexed by
    /// the split graph of the phase (original nodes plus the sink copy).
    ViolatedAfterGrapevine { arc: ArcId, labels: Vec<ExtScalar> },
    /// Closed walk at the phase node with gain ≥ 1 whose bound at the
    /// initial trial value `delta` is already negative.
    NonContractingPath { path: Walk, delta: Scalar, f_value: Scalar },
    /// The root-finding engine proved no root exists; `delta` is the trial
    /// value at which the witness was observed.
    NewtonNoRoot { delta: Scalar, kind: NoRootKind },
    /// A unit-gain cycle with negative cost: no finite assignment satisfies
    /// its chained constraints, independent of everything else.
    NegativeUnitGainCycle { cycle: Walk },
}

/// Final verdict of a solve.
#[derive(Clone, Debug)]
pub enum SolveOutcome {
    /// Pointwise-maximal solution; `PosInf` marks coordinates unbounded
    /// above. When every entry is finite the vector itself is feasible.
    MaxSolution { labels: Vec<ExtScalar> },
    /// The system has no finite solution. `phase` indexes into the report's
    /// phase list (equal to its length for the final whole-graph cycle
    /// check); `node` is the phase node or the cycle's anchor.
    Infeasible { phase: usize, node: NodeId, side: Side, evidence: InfeasibilityEvidence },
}

/// Everything the engine did during one phase's root search.
#[derive(Clone, Debug)]
pub struct PhaseNewton {
    /// Initial trial value (first out-arc bound or absorbing-cycle seed).
    pub delta1: Scalar,
    /// Labels at phase entry, indexed by original nodes.
    pub entry_labels: Vec<ExtScalar>,
    pub result: NewtonResult,
    /// Settled labels per accepted iterate, indexed by split-graph nodes
    /// (the last entry is the sink copy); aligned 1:1 with `result.trace`.
    pub iterate_labels: Vec<Vec<ExtScalar>>,
    /// Improving walk per accepted iterate, in the side system's arc ids;
    /// aligned 1:1 with `result.trace`.
    pub iterate_walks: Vec<Walk>,
}

/// Summary of a single phase.
#[derive(Clone, Debug)]
pub struct PhaseReport {
    pub phase: usize,
    pub node: NodeId,
    pub side: Side,
    /// Arc count of the phase's active subgraph (tails among processed
    /// nodes).
    pub active_arcs: usize,
    /// The initial value came from a flow-absorbing cycle, not an out-arc.
    pub seeded_from_cycle: bool,
    /// No finite bound on the phase node existed; the phase did nothing.
    pub skipped: bool,
    /// Labels after the phase, indexed by original nodes.
    pub exit_labels: Vec<ExtScalar>,
    pub newton: Option<PhaseNewton>,
}

/// Full solve transcript: the verdict plus one report per executed phase.
#[derive(Clone, Debug)]
pub struct M2vpiReport {
    pub outcome: SolveOutcome,
    pub phases: Vec<PhaseReport>,
}

/// Result of [`recover_finite_solution`].
#[derive(Clone, Debug)]
pub enum RecoveryOutcome {
    /// An explicit finite assignment satisfying every constraint.
    Point { y: Vec<Scalar> },
    Infeasible { report: M2vpiReport },
}

/// Active subgraph and split graph for the phase at `node`, plus the map
/// from split arc ids back to the system's. Deterministic, so evidence and
/// traces can be re-grounded after the fact.
pub fn phase_split(system: &GainGraph, node: NodeId) -> (GainGraph, Vec<ArcId>) {
    let (active, map) = system.filter_arcs(|_, a| a.tail <= node);
    (active.split_at(node), map)
}

/// Reverse every constraint through the substitution `z = −y`: arc
/// `(u, v, γ, c)` (that is, `y_u ≤ c + γ·y_v`) becomes `(v, u, 1/γ, c/γ)`
/// (that is, `z_v ≤ c/γ + (1/γ)·z_u`). Arc ids are preserved and the map is
/// involutive. Solving the reversed system yields the negated pointwise-
/// minimal solution of the original.
pub fn reverse_system(system: &GainGraph) -> GainGraph {
    let mut g = GainGraph::new(system.mode(), system.node_count());
    for arc in system.arcs() {
        let gamma = arc.gamma.recip();
        let cost = &arc.cost / &arc.gamma;
        g.add_arc(arc.head, arc.tail, gamma, cost).expect("reversing a valid arc");
    }
    g
}

/// Transactional adapter between the root-finding engine and the relaxation
/// oracle. Each `eval` settles labels from the last non-discarded state, so
/// `discard_last` (used around look-ahead probes) must roll the label state
/// back; the accepted steps then line up 1:1 with the engine's trace.
struct DualOracle<'a> {
    split: &'a GainGraph,
    u: NodeId,
    u_prime: NodeId,
    tol: Tolerance,
    base_labels: Vec<ExtScalar>,
    history: Vec<OracleStep>,
    /// The phase's pre-checked first evaluation, consumed by the first
    /// `eval` call so its work is not repeated.
    initial: Option<OracleStep>,
    last_unbounded: Option<(Walk, Walk, Scalar)>,
}

/// One committed oracle evaluation: the trial value, the labels it settled
/// to, the improving walk from the phase node, and the engine-facing reply.
pub(crate) struct OracleStep {
    pub(crate) delta: Scalar,
    pub(crate) labels: Vec<ExtScalar>,
    pub(crate) walk: Walk,
    pub(crate) reply: OracleReply,
}

impl DualOracle<'_> {
    fn committed_labels(&self) -> &[ExtScalar] {
        self.history.last().map(|s| s.labels.as_slice()).unwrap_or(&self.base_labels)
    }
}

impl ConcaveOracle for DualOracle<'_> {
    fn eval(&mut self, delta: &Scalar) -> Result<OracleReply, NewtonError> {
        if let Some(step) = self.initial.take() {
            debug_assert_eq!(step.delta.total_cmp(delta), Ordering::Equal);
            let reply = step.reply.clone();
            self.history.push(step);
            return Ok(reply);
        }
        match update_dual(self.split, self.committed_labels(), self.u, self.u_prime, delta, &self.tol)
        {
            Ok(DualUpdateResult::Updated { labels, path, supergradient }) => {
                let value = match &labels[self.u] {
                    ExtScalar::Finite(v) => v - delta,
                    ExtScalar::PosInf => {
                        return Err(NewtonError::OracleContractViolation(
                            "phase node lost its finite bound during relaxation".into(),
                        ))
                    }
                };
                let reply = OracleReply::Finite { value, supergradient };
                self.history.push(OracleStep {
                    delta: delta.clone(),
                    labels,
                    walk: path,
                    reply: reply.clone(),
                });
                Ok(reply)
            }
            Ok(DualUpdateResult::Infeasible { cycle, path, delta: at }) => {
                self.last_unbounded = Some((cycle, path, at));
                // Keep the label state unchanged: a diverging trial never
                // becomes the committed point.
                self.history.push(OracleStep {
                    delta: delta.clone(),
                    labels: self.committed_labels().to_vec(),
                    walk: Walk::empty(),
                    reply: OracleReply::NegInf,
                });
                Ok(OracleReply::NegInf)
            }
            Err(GrapevineError::ContractViolation(msg)) => {
                Err(NewtonError::OracleContractViolation(msg))
            }
        }
    }

    fn discard_last(&mut self) {
        self.history.pop();
    }
}

enum PhaseResult {
    Skipped,
    Solved { labels: Vec<ExtScalar>, newton: PhaseNewton, seeded: bool },
    Infeasible { evidence: InfeasibilityEvidence, newton: Option<PhaseNewton>, seeded: bool },
}

pub(crate) fn map_walk(walk: &Walk, arc_map: &[ArcId]) -> Walk {
    Walk::new(walk.arcs.iter().map(|&a| arc_map[a]).collect())
}

/// Everything a phase needs before the root search starts: the split graph,
/// the initial trial value, the settled initial evaluation, and its
/// value/supergradient pair.
pub(crate) struct PhaseSetup {
    pub split: GainGraph,
    pub arc_map: Vec<ArcId>,
    pub u_prime: NodeId,
    pub delta1: Scalar,
    pub seeded: bool,
    /// Labels at phase entry, widened to the split graph (sink copy at ∞).
    pub base_labels: Vec<ExtScalar>,
    /// Settled labels at `delta1`.
    pub initial_labels: Vec<ExtScalar>,
    /// Improving walk from the phase node at `delta1`, in split arc ids.
    pub initial_walk: Walk,
    pub f1: Scalar,
    pub g1: Scalar,
}

pub(crate) enum PhasePrep {
    /// The phase node has no finite bound yet; nothing to do.
    Skip,
    Infeasible { evidence: InfeasibilityEvidence, seeded: bool },
    Ready(Box<PhaseSetup>),
}

/// Prepare the phase at node `u`: choose the initial trial value, settle the
/// labels once, and run the two entry infeasibility checks.
pub(crate) fn phase_setup(
    system: &GainGraph,
    labels: &[ExtScalar],
    u: NodeId,
    tol: &Tolerance,
) -> Result<PhasePrep, NewtonError> {
    let mode = system.mode();
    let n = system.node_count();
    let (active, _) = system.filter_arcs(|_, a| a.tail <= u);

    // Initial upper bound on the phase node: best outgoing arc, falling back
    // to the fixpoint of a flow-absorbing cycle through the node.
    let mut delta1 = ExtScalar::PosInf;
    for &aid in active.out_arcs(u) {
        let arc = active.arc(aid);
        let bound = crate::numerics::ext_add_mul(&arc.cost, &arc.gamma, &labels[arc.head]);
        if bound.total_cmp(&delta1) == Ordering::Less {
            delta1 = bound;
        }
    }
    let mut seeded = false;
    let delta1 = match delta1 {
        ExtScalar::Finite(v) => v,
        ExtScalar::PosInf => match find_flow_absorbing_cycle(&active, u, tol) {
            Some(cycle) => {
                seeded = true;
                let gain = cycle.gain(&active);
                let cost = cycle.cost(&active);
                &cost / &(&Scalar::one(mode) - &gain)
            }
            None => return Ok(PhasePrep::Skip),
        },
    };

    let (split, arc_map) = phase_split(system, u);
    let u_prime = n;
    let mut base_labels = labels.to_vec();
    base_labels.push(ExtScalar::PosInf);

    // Initial settlement at delta1.
    let mut start = base_labels.clone();
    start[u_prime] = ExtScalar::Finite(delta1.clone());
    let run = run_grapevine(&split, start, tol);
    if let Some(arc) = run.violated_arc(&split, tol) {
        return Ok(PhasePrep::Infeasible {
            evidence: InfeasibilityEvidence::ViolatedAfterGrapevine {
                arc: arc_map[arc],
                labels: run.labels,
            },
            seeded,
        });
    }
    let path = run.trace_walk(&split, u);
    let g1 = match path.end(&split) {
        Some(end) if end == u_prime => &path.gain(&split) - &Scalar::one(mode),
        _ => -Scalar::one(mode),
    };
    let f1 = match &run.labels[u] {
        ExtScalar::Finite(v) => v - &delta1,
        ExtScalar::PosInf => {
            return Err(NewtonError::OracleContractViolation(
                "initial settlement left the phase node unbounded".into(),
            ))
        }
    };
    match sign(&f1, tol) {
        Sign::Pos => {
            return Err(NewtonError::OracleContractViolation(
                "initial bound must dominate the settled value".into(),
            ))
        }
        Sign::Neg if sign(&g1, tol) != Sign::Neg => {
            return Ok(PhasePrep::Infeasible {
                evidence: InfeasibilityEvidence::NonContractingPath {
                    path: map_walk(&path, &arc_map),
                    delta: delta1,
                    f_value: f1,
                },
                seeded,
            });
        }
        _ => {}
    }
    Ok(PhasePrep::Ready(Box::new(PhaseSetup {
        split,
        arc_map,
        u_prime,
        delta1,
        seeded,
        base_labels,
        initial_labels: run.labels,
        initial_walk: path,
        f1,
        g1,
    })))
}

/// One phase of the label-correcting loop: bound the phase node, settle,
/// pre-check, and hand the rest to the root-finding engine.
fn run_phase(
    system: &GainGraph,
    labels: &[ExtScalar],
    u: NodeId,
    cfg: &NewtonConfig,
) -> Result<PhaseResult, NewtonError> {
    let mode = system.mode();
    let n = system.node_count();
    let setup = match phase_setup(system, labels, u, &cfg.tol)? {
        PhasePrep::Skip => return Ok(PhaseResult::Skipped),
        PhasePrep::Infeasible { evidence, seeded } => {
            return Ok(PhaseResult::Infeasible { evidence, newton: None, seeded })
        }
        PhasePrep::Ready(setup) => *setup,
    };
    let PhaseSetup {
        split,
        arc_map,
        u_prime,
        delta1,
        seeded,
        base_labels,
        initial_labels,
        initial_walk,
        f1,
        g1,
    } = setup;

    let mut oracle = DualOracle {
        split: &split,
        u,
        u_prime,
        tol: cfg.tol.clone(),
        base_labels,
        history: Vec::new(),
        initial: Some(OracleStep {
            delta: delta1.clone(),
            labels: initial_labels,
            walk: initial_walk,
            reply: OracleReply::Finite { value: f1.clone(), supergradient: g1.clone() },
        }),
        last_unbounded: None,
    };
    let result = solve_root(&mut oracle, &delta1, &g1, cfg)?;

    // On a no-root verdict the witness evaluation trails the accepted steps.
    let mut history = oracle.history;
    let witness_step = if history.len() > result.trace.len() { history.pop() } else { None };
    assert_eq!(history.len(), result.trace.len(), "oracle steps must match the trace");
    let newton = PhaseNewton {
        delta1,
        entry_labels: labels.to_vec(),
        iterate_labels: history.iter().map(|s| s.labels.clone()).collect(),
        iterate_walks: history.iter().map(|s| map_walk(&s.walk, &arc_map)).collect(),
        result: result.clone(),
    };

    match result.outcome {
        NewtonOutcome::Root { delta } => {
            let settled = &history.last().expect("root implies an accepted step").labels;
            let mut out = settled[..n].to_vec();
            if mode == ArithMode::Rational {
                assert_eq!(
                    out[u],
                    ExtScalar::Finite(delta.clone()),
                    "the settled value at a root equals the root"
                );
            }
            out[u] = ExtScalar::Finite(delta);
            Ok(PhaseResult::Solved { labels: out, newton, seeded })
        }
        NewtonOutcome::NoRoot { witness_delta, witness } => {
            let kind = match witness {
                OracleReply::NegInf => {
                    let (cycle, path, at) = oracle.last_unbounded.expect(
                        "a diverging evaluation must have recorded its cycle",
                    );
                    debug_assert_eq!(at.total_cmp(&witness_delta), Ordering::Equal);
                    NoRootKind::ValueUnbounded {
                        cycle: map_walk(&cycle, &arc_map),
                        path: map_walk(&path, &arc_map),
                    }
                }
                OracleReply::Finite { value, .. } => NoRootKind::NonNegativeGradient {
                    path: map_walk(
                        &witness_step.expect("finite no-root witness has a trailing step").walk,
                        &arc_map,
                    ),
                    f_value: value,
                },
            };
            Ok(PhaseResult::Infeasible {
                evidence: InfeasibilityEvidence::NewtonNoRoot { delta: witness_delta, kind },
                newton: Some(newton),
                seeded,
            })
        }
    }
}

struct SideRun {
    labels: Vec<ExtScalar>,
    phases: Vec<PhaseReport>,
    infeasible: Option<(usize, NodeId, InfeasibilityEvidence)>,
}

fn run_side(
    system: &GainGraph,
    side: Side,
    cfg: &NewtonConfig,
    phase_offset: usize,
) -> Result<SideRun, NewtonError> {
    let n = system.node_count();
    let mut labels = vec![ExtScalar::PosInf; n];
    let mut phases = Vec::new();
    for u in 0..n {
        let phase = phase_offset + phases.len();
        let (active, _) = system.filter_arcs(|_, a| a.tail <= u);
        let active_arcs = active.arc_count();
        match run_phase(system, &labels, u, cfg)? {
            PhaseResult::Skipped => phases.push(PhaseReport {
                phase,
                node: u,
                side,
                active_arcs,
                seeded_from_cycle: false,
                skipped: true,
                exit_labels: labels.clone(),
                newton: None,
            }),
            PhaseResult::Solved { labels: new_labels, newton, seeded } => {
                labels = new_labels;
                phases.push(PhaseReport {
                    phase,
                    node: u,
                    side,
                    active_arcs,
                    seeded_from_cycle: seeded,
                    skipped: false,
                    exit_labels: labels.clone(),
                    newton: Some(newton),
                });
            }
            PhaseResult::Infeasible { evidence, newton, seeded } => {
                phases.push(PhaseReport {
                    phase,
                    node: u,
                    side,
                    active_arcs,
                    seeded_from_cycle: seeded,
                    skipped: false,
                    exit_labels: labels.clone(),
                    newton,
                });
                return Ok(SideRun { labels, phases, infeasible: Some((phase, u, evidence)) });
            }
        }
    }
    Ok(SideRun { labels, phases, infeasible: None })
}

struct FullSolve {
    report: M2vpiReport,
    reversed_labels: Option<Vec<ExtScalar>>,
}

fn full_solve(system: &GainGraph, cfg: &NewtonConfig) -> Result<FullSolve, NewtonError> {
    let forward = run_side(system, Side::Forward, cfg, 0)?;
    let mut phases = forward.phases;
    if let Some((phase, node, evidence)) = forward.infeasible {
        return Ok(FullSolve {
            report: M2vpiReport {
                outcome: SolveOutcome::Infeasible { phase, node, side: Side::Forward, evidence },
                phases,
            },
            reversed_labels: None,
        });
    }

    let mut reversed_labels = None;
    if forward.labels.iter().any(|l| !l.is_finite()) {
        // Coordinates unbounded above: bound them from below by solving the
        // reversed system, then look for a negative unit-gain cycle among
        // the nodes unbounded in both directions.
        let reversed = reverse_system(system);
        let rev = run_side(&reversed, Side::Reversed, cfg, phases.len())?;
        phases.extend(rev.phases);
        if let Some((phase, node, evidence)) = rev.infeasible {
            return Ok(FullSolve {
                report: M2vpiReport {
                    outcome: SolveOutcome::Infeasible { phase, node, side: Side::Reversed, evidence },
                    phases,
                },
                reversed_labels: Some(rev.labels),
            });
        }
        let in_both: Vec<bool> = (0..system.node_count())
            .map(|v| !forward.labels[v].is_finite() && !rev.labels[v].is_finite())
            .collect();
        let (unbounded_part, sub_map) =
            system.filter_arcs(|_, a| in_both[a.tail] && in_both[a.head]);
        if let Some(cycle) = detect_negative_unit_gain_cycle(&unbounded_part, &cfg.tol) {
            let cycle = map_walk(&cycle, &sub_map);
            let node = cycle.start(system).expect("detected cycles are nonempty");
            let phase = phases.len();
            return Ok(FullSolve {
                report: M2vpiReport {
                    outcome: SolveOutcome::Infeasible {
                        phase,
                        node,
                        side: Side::Forward,
                        evidence: InfeasibilityEvidence::NegativeUnitGainCycle { cycle },
                    },
                    phases,
                },
                reversed_labels: Some(rev.labels),
            });
        }
        reversed_labels = Some(rev.labels);
    }

    // Final soundness check on the claimed maximal solution.
    for id in 0..system.arc_count() {
        if system.arc_violated(id, &forward.labels, cfg.tol.eps_cmp) {
            return Err(NewtonError::OracleFailure(format!(
                "final labels violate arc {id}; numeric tolerance breakdown"
            )));
        }
    }
    Ok(FullSolve {
        report: M2vpiReport {
            outcome: SolveOutcome::MaxSolution { labels: forward.labels },
            phases,
        },
        reversed_labels,
    })
}

/// Solve the system: pointwise-maximal labels, or infeasibility evidence.
pub fn solve_m2vpi(system: &GainGraph, cfg: &NewtonConfig) -> Result<M2vpiReport, NewtonError> {
    Ok(full_solve(system, cfg)?.report)
}

/// Turn the two bound vectors into an explicit all-finite feasible point by
/// fixing coordinates one at a time (preferring the upper bound, then the
/// lower, then zero) and re-settling both bound vectors after each fix.
pub fn recover_finite_solution(
    system: &GainGraph,
    cfg: &NewtonConfig,
) -> Result<RecoveryOutcome, NewtonError> {
    let solved = full_solve(system, cfg)?;
    let mut upper = match &solved.report.outcome {
        SolveOutcome::Infeasible { .. } => {
            return Ok(RecoveryOutcome::Infeasible { report: solved.report })
        }
        SolveOutcome::MaxSolution { labels } => labels.clone(),
    };
    if upper.iter().all(|l| l.is_finite()) {
        let y = upper.iter().map(|l| l.expect_finite()).collect();
        return Ok(RecoveryOutcome::Point { y });
    }

    let reversed = reverse_system(system);
    let mut neg_lower = solved
        .reversed_labels
        .clone()
        .expect("an unbounded coordinate forces the reversed solve");
    let tol = &cfg.tol;
    let mode = system.mode();
    for u in 0..system.node_count() {
        let value = match (&upper[u], &neg_lower[u]) {
            (ExtScalar::Finite(hi), lo) => {
                if let ExtScalar::Finite(lo) = lo {
                    let low = -lo;
                    if sign_eps(&(hi - &low), tol.eps_cmp) == Sign::Neg {
                        return Err(NewtonError::OracleFailure(format!(
                            "recovery interval for node {u} is empty; numeric tolerance breakdown"
                        )));
                    }
                }
                hi.clone()
            }
            (ExtScalar::PosInf, ExtScalar::Finite(lo)) => -lo,
            (ExtScalar::PosInf, ExtScalar::PosInf) => Scalar::zero(mode),
        };
        upper[u] = ExtScalar::Finite(value.clone());
        upper = run_grapevine(system, upper, tol).labels;
        neg_lower[u] = ExtScalar::Finite(-&value);
        neg_lower = run_grapevine(&reversed, neg_lower, tol).labels;
        if mode == ArithMode::Rational {
            assert_eq!(
                upper[u],
                ExtScalar::Finite(value),
                "re-settling never moves a fixed coordinate"
            );
        }
    }

    let y: Vec<Scalar> = upper
        .iter()
        .map(|l| match l {
            ExtScalar::Finite(v) => Ok(v.clone()),
            ExtScalar::PosInf => Err(NewtonError::OracleFailure(
                "recovery left an unbounded coordinate".into(),
            )),
        })
        .collect::<Result<_, _>>()?;
    for arc in system.arcs() {
        let slack = &(&arc.cost + &(&arc.gamma * &y[arc.head])) - &y[arc.tail];
        if sign(&slack, tol) == Sign::Neg {
            return Err(NewtonError::OracleFailure(
                "recovered point violates a constraint; numeric tolerance breakdown".into(),
            ));
        }
    }
    Ok(RecoveryOutcome::Point { y })
}

impl SolveOutcome {
    /// Re-check the verdict's witness against the system by direct
    /// arithmetic. `system` is the forward system; reversed-side evidence is
    /// checked against its reversal.
    pub fn validate(&self, system: &GainGraph, tol: &Tolerance) -> Result<(), String> {
        match self {
            SolveOutcome::MaxSolution { labels } => {
                if labels.len() != system.node_count() {
                    return Err("label vector has the wrong width".into());
                }
                for id in 0..system.arc_count() {
                    if system.arc_violated(id, labels, tol.eps_cmp) {
                        return Err(format!("arc {id} is violated by the claimed solution"));
                    }
                }
                Ok(())
            }
            SolveOutcome::Infeasible { node, side, evidence, .. } => {
                let owned;
                let sys = match side {
                    Side::Forward => system,
                    Side::Reversed => {
                        owned = reverse_system(system);
                        &owned
                    }
                };
                evidence.validate(sys, *node, tol)
            }
        }
    }
}

impl InfeasibilityEvidence {
    /// Direct-arithmetic re-check against the side's system. `node` is the
    /// phase node (ignored by the cycle variant, which certifies on its
    /// own).
    pub fn validate(&self, system: &GainGraph, node: NodeId, tol: &Tolerance) -> Result<(), String> {
        let mode = system.mode();
        let one = Scalar::one(mode);
        match self {
            InfeasibilityEvidence::ViolatedAfterGrapevine { arc, labels } => {
                let (split, arc_map) = phase_split(system, node);
                let local = arc_map
                    .iter()
                    .position(|&orig| orig == *arc)
                    .ok_or_else(|| format!("arc {arc} is not active in phase at node {node}"))?;
                if labels.len() != split.node_count() {
                    return Err("stored labels do not cover the split graph".into());
                }
                if !split.arc_violated(local, labels, tol.eps_cmp) {
                    return Err(format!("arc {arc} is not violated under the stored labels"));
                }
                Ok(())
            }
            InfeasibilityEvidence::NonContractingPath { path, delta, f_value } => {
                path.validate(system).map_err(|e| e.to_string())?;
                if path.is_empty()
                    || path.start(system) != Some(node)
                    || path.end(system) != Some(node)
                {
                    return Err("witness walk must be closed at the phase node".into());
                }
                let gain = path.gain(system);
                if sign(&(&gain - &one), tol) == Sign::Neg {
                    return Err("witness walk must have gain at least one".into());
                }
                if sign(f_value, tol) != Sign::Neg {
                    return Err("witness value must be negative".into());
                }
                let bound = &path.cost(system) + &(&(&gain - &one) * delta);
                if sign(&bound, tol) != Sign::Neg {
                    return Err("walk bound at the trial value is not negative".into());
                }
                Ok(())
            }
            InfeasibilityEvidence::NewtonNoRoot { delta, kind } => match kind {
                NoRootKind::ValueUnbounded { cycle, path } => {
                    cycle.validate(system).map_err(|e| e.to_string())?;
                    path.validate(system).map_err(|e| e.to_string())?;
                    if cycle.is_empty() || cycle.start(system) != cycle.end(system) {
                        return Err("pumping witness must be a closed walk".into());
                    }
                    let cycle_gain = cycle.gain(system);
                    if sign(&(&cycle_gain - &one), tol) != Sign::Pos {
                        return Err("pumping cycle must have gain above one".into());
                    }
                    if path.is_empty()
                        || path.start(system) != cycle.start(system)
                        || path.end(system) != Some(node)
                    {
                        return Err(
                            "exit walk must run from the cycle to the phase node".into()
                        );
                    }
                    let entry = &path.cost(system) + &(&path.gain(system) * delta);
                    let pump = &cycle.cost(system) + &(&(&cycle_gain - &one) * &entry);
                    if sign(&pump, tol) != Sign::Neg {
                        return Err("spinning the cycle does not improve the bound".into());
                    }
                    Ok(())
                }
                NoRootKind::NonNegativeGradient { path, f_value } => {
                    InfeasibilityEvidence::NonContractingPath {
                        path: path.clone(),
                        delta: delta.clone(),
                        f_value: f_value.clone(),
                    }
                    .validate(system, node, tol)
                }
            },
            InfeasibilityEvidence::NegativeUnitGainCycle { cycle } => {
                cycle.validate(system).map_err(|e| e.to_string())?;
                if cycle.is_empty() || cycle.start(system) != cycle.end(system) {
                    return Err("witness must be a closed walk".into());
                }
                if sign(&(&cycle.gain(system) - &one), tol) != Sign::Zero {
                    return Err("witness cycle must have unit gain".into());
                }
                if sign(&cycle.cost(system), tol) != Sign::Neg {
                    return Err("witness cycle must have negative cost".into());
                }
                Ok(())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Reduction from general two-variable inequalities.

/// One inequality `a·y_u + b·y_v ≤ c` with at most two nonzero coefficients.
#[derive(Clone, Debug)]
pub struct TvpiRow {
    pub a: Scalar,
    pub u: NodeId,
    pub b: Scalar,
    pub v: NodeId,
    pub c: Scalar,
}

/// A system of two-variable inequalities over `num_vars` variables.
#[derive(Clone, Debug)]
pub struct Tvpi2System {
    mode: ArithMode,
    num_vars: usize,
    rows: Vec<TvpiRow>,
}

#[derive(Debug, Error)]
pub enum ReduceError {
    /// A row with no variables and a negative right-hand side.
    #[error("row {row} reads 0 ≤ {rhs}, which is false")]
    InfeasibleTrivialRow { row: usize, rhs: Scalar },
}

impl Tvpi2System {
    pub fn new(mode: ArithMode, num_vars: usize) -> Self {
        Tvpi2System { mode, num_vars, rows: Vec::new() }
    }

    pub fn mode(&self) -> ArithMode {
        self.mode
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn rows(&self) -> &[TvpiRow] {
        &self.rows
    }

    pub fn add_row(&mut self, a: Scalar, u: NodeId, b: Scalar, v: NodeId, c: Scalar) {
        assert!(u < self.num_vars && v < self.num_vars, "row variable out of range");
        assert!(
            a.mode() == self.mode && b.mode() == self.mode && c.mode() == self.mode,
            "row arithmetic mode must match the system"
        );
        self.rows.push(TvpiRow { a, u, b, v, c });
    }

    /// Does `point` satisfy every row (with tolerance in float mode)?
    pub fn satisfied_by(&self, point: &[Scalar], tol: &Tolerance) -> bool {
        self.rows.iter().all(|row| {
            let lhs = &(&row.a * &point[row.u]) + &(&row.b * &point[row.v]);
            sign(&(&lhs - &row.c), tol) != Sign::Pos
        })
    }
}

/// Output of [`reduce_2vpi`]: a monotone system over signed variable copies
/// (variable `u` becomes nodes `2u` and `2u+1`, holding `y⁺_u` and `y⁻_u`)
/// together with the inverse substitution `y_u = (y⁺_u − y⁻_u)/2`.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub graph: GainGraph,
    original_vars: usize,
}

impl ReducedSystem {
    /// Recover original-variable values from reduced-system values.
    pub fn back_map(&self, labels: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(labels.len(), 2 * self.original_vars);
        let two = Scalar::from_int(2, self.graph.mode());
        (0..self.original_vars)
            .map(|u| &(&labels[2 * u] - &labels[2 * u + 1]) / &two)
            .collect()
    }

    /// Embed an original-variable point into the reduced system's space
    /// (`y⁺ = y`, `y⁻ = −y`).
    pub fn embed(&self, point: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(point.len(), self.original_vars);
        let mut out = Vec::with_capacity(2 * point.len());
        for y in point {
            out.push(y.clone());
            out.push(-y);
        }
        out
    }
}

/// Rewrite every row over the signed copies so that each output constraint
/// has the monotone shape `y_x ≤ c′ + γ·y_z` with γ > 0; the reduced system
/// is feasible exactly when the input is, and solutions map back through
/// [`ReducedSystem::back_map`].
pub fn reduce_2vpi(sys: &Tvpi2System) -> Result<ReducedSystem, ReduceError> {
    let mode = sys.mode;
    let tol = Tolerance::default();
    let mut graph = GainGraph::new(mode, 2 * sys.num_vars);
    // `pos_coeff·y_x − |neg_coeff|·y_z ≤ rhs`, normalized by the positive
    // coefficient.
    let emit = |graph: &mut GainGraph, x: NodeId, p: Scalar, z: NodeId, m: Scalar, rhs: &Scalar| {
        debug_assert!(sign(&p, &tol) == Sign::Pos && sign(&m, &tol) == Sign::Neg);
        let gamma = &(-&m) / &p;
        let cost = rhs / &p;
        graph.add_arc(x, z, gamma, cost).expect("reduced arc is well-formed");
    };
    for (idx, row) in sys.rows.iter().enumerate() {
        // Coalesce rows mentioning one variable twice.
        let (a, b) = if row.u == row.v {
            (&row.a + &row.b, Scalar::zero(mode))
        } else {
            (row.a.clone(), row.b.clone())
        };
        let (sa, sb) = (sign(&a, &tol), sign(&b, &tol));
        match (sa, sb) {
            (Sign::Zero, Sign::Zero) => {
                if sign(&row.c, &tol) == Sign::Neg {
                    return Err(ReduceError::InfeasibleTrivialRow { row: idx, rhs: row.c.clone() });
                }
            }
            (_, Sign::Zero) | (Sign::Zero, _) => {
                // coef·y⁺ − coef·y⁻ ≤ 2c on the signed copies.
                let (coef, var) = if sb == Sign::Zero { (a, row.u) } else { (b, row.v) };
                let two_c = &Scalar::from_int(2, mode) * &row.c;
                if sign(&coef, &tol) == Sign::Pos {
                    emit(&mut graph, 2 * var, coef.clone(), 2 * var + 1, -&coef, &two_c);
                } else {
                    emit(&mut graph, 2 * var + 1, -&coef, 2 * var, coef.clone(), &two_c);
                }
            }
            _ if sa == sb => {
                // a·y⁺_u − b·y⁻_v ≤ c and −a·y⁻_u + b·y⁺_v ≤ c.
                let (u, v) = (row.u, row.v);
                if sa == Sign::Pos {
                    emit(&mut graph, 2 * u, a.clone(), 2 * v + 1, -&b, &row.c);
                    emit(&mut graph, 2 * v, b, 2 * u + 1, -&a, &row.c);
                } else {
                    emit(&mut graph, 2 * v + 1, -&b, 2 * u, a.clone(), &row.c);
                    emit(&mut graph, 2 * u + 1, -&a, 2 * v, b, &row.c);
                }
            }
            _ => {
                // a·y⁺_u + b·y⁺_v ≤ c and −a·y⁻_u − b·y⁻_v ≤ c.
                let (u, v) = (row.u, row.v);
                if sa == Sign::Pos {
                    emit(&mut graph, 2 * u, a.clone(), 2 * v, b.clone(), &row.c);
                    emit(&mut graph, 2 * v + 1, -&b, 2 * u + 1, -&a, &row.c);
                } else {
                    emit(&mut graph, 2 * v, b.clone(), 2 * u, a.clone(), &row.c);
                    emit(&mut graph, 2 * u + 1, -&a, 2 * v + 1, -&b, &row.c);
                }
            }
        }
    }
    Ok(ReducedSystem { graph, original_vars: sys.num_vars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::{rat, FmSystem};
    use crate::newton::Method;

    fn q(p: i64, q_: i64) -> Scalar {
        Scalar::ratio(p, q_)
    }

    fn cfg() -> NewtonConfig {
        NewtonConfig::default()
    }

    /// The two-constraint warm-up system whose maximal solution is (−2, −2).
    fn warmup_system() -> GainGraph {
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(0, 1, Scalar::int(1), Scalar::int(0)).unwrap();
        g.add_arc(1, 0, q(1, 2), Scalar::int(-1)).unwrap();
        g
    }

    #[test]
    fn warmup_system_solves_exactly() {
        let g = warmup_system();
        let report = solve_m2vpi(&g, &cfg()).unwrap();
        match &report.outcome {
            SolveOutcome::MaxSolution { labels } => {
                assert_eq!(labels[0], ExtScalar::Finite(Scalar::int(-2)));
                assert_eq!(labels[1], ExtScalar::Finite(Scalar::int(-2)));
            }
            other => panic!("expected a solution, got {other:?}"),
        }
        report.outcome.validate(&g, &Tolerance::default()).unwrap();

        // Phase shape: node 0 has no finite bound yet; node 1 is seeded from
        // the absorbing 2-cycle at fixpoint −2 and roots immediately.
        assert!(report.phases[0].skipped);
        let newton = report.phases[1].newton.as_ref().unwrap();
        assert!(report.phases[1].seeded_from_cycle);
        assert_eq!(newton.delta1, Scalar::int(-2));
        assert_eq!(newton.result.trace.len(), 1);
        assert_eq!(newton.iterate_labels.len(), 1);
        assert_eq!(newton.iterate_walks[0].len(), 2);
    }

    #[test]
    fn empty_system_is_unbounded_everywhere() {
        let g = GainGraph::new(ArithMode::Rational, 3);
        let report = solve_m2vpi(&g, &cfg()).unwrap();
        match &report.outcome {
            SolveOutcome::MaxSolution { labels } => {
                assert!(labels.iter().all(|l| *l == ExtScalar::PosInf));
            }
            other => panic!("expected a solution, got {other:?}"),
        }
    }

    #[test]
    fn negative_unit_gain_two_cycle_is_infeasible() {
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(0, 1, Scalar::int(1), Scalar::int(-1)).unwrap();
        g.add_arc(1, 0, Scalar::int(1), Scalar::int(-1)).unwrap();
        let report = solve_m2vpi(&g, &cfg()).unwrap();
        match &report.outcome {
            SolveOutcome::Infeasible { evidence, .. } => {
                assert!(matches!(evidence, InfeasibilityEvidence::NegativeUnitGainCycle { .. }));
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
        report.outcome.validate(&g, &Tolerance::default()).unwrap();
    }

    #[test]
    fn contracting_cap_with_negative_unit_loop_is_noncontracting_path() {
        // y_0 ≤ 5 (via an absorbing self-loop) and y_0 ≤ y_0 − 1.
        let mut g = GainGraph::new(ArithMode::Rational, 1);
        g.add_arc(0, 0, q(1, 2), q(5, 2)).unwrap();
        g.add_arc(0, 0, Scalar::int(1), Scalar::int(-1)).unwrap();
        let report = solve_m2vpi(&g, &cfg()).unwrap();
        match &report.outcome {
            SolveOutcome::Infeasible { node, side, evidence, .. } => {
                assert_eq!(*node, 0);
                assert_eq!(*side, Side::Forward);
                match evidence {
                    InfeasibilityEvidence::NonContractingPath { path, delta, f_value } => {
                        assert_eq!(path.arcs, vec![1]);
                        assert_eq!(*delta, Scalar::int(5));
                        assert_eq!(*f_value, Scalar::int(-1));
                    }
                    other => panic!("expected a non-contracting walk, got {other:?}"),
                }
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
        report.outcome.validate(&g, &Tolerance::default()).unwrap();
    }

    #[test]
    fn pumping_cycle_yields_value_unbounded_evidence() {
        // y_0 ≤ 1 + 2y_0 (pumps once y_0 < −1), y_0 ≤ y_1,
        // y_1 ≤ −5 + y_0/2, y_1 ≤ 5 + y_1/2 (cap 10). Infeasible: the first
        // and third rows force y_0 ≤ −10, but the first requires y_0 ≥ −1.
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(0, 0, Scalar::int(2), Scalar::int(1)).unwrap(); // arc 0
        g.add_arc(0, 1, Scalar::int(1), Scalar::int(0)).unwrap(); // arc 1
        g.add_arc(1, 0, q(1, 2), Scalar::int(-5)).unwrap(); // arc 2
        g.add_arc(1, 1, q(1, 2), Scalar::int(5)).unwrap(); // arc 3
        let report = solve_m2vpi(&g, &cfg()).unwrap();
        match &report.outcome {
            SolveOutcome::Infeasible { node, evidence, .. } => {
                assert_eq!(*node, 1);
                match evidence {
                    InfeasibilityEvidence::NewtonNoRoot { delta, kind } => {
                        assert_eq!(*delta, Scalar::int(-10));
                        match kind {
                            NoRootKind::ValueUnbounded { cycle, .. } => {
                                assert_eq!(cycle.arcs, vec![0]);
                            }
                            other => panic!("expected a pumping witness, got {other:?}"),
                        }
                    }
                    other => panic!("expected a no-root witness, got {other:?}"),
                }
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
        report.outcome.validate(&g, &Tolerance::default()).unwrap();
    }

    #[test]
    fn reversal_matches_negation_substitution() {
        // y_0 ≤ 3 + 2y_1 under y ↦ −z becomes z_1 ≤ 3/2 + z_0/2.
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(0, 1, Scalar::int(2), Scalar::int(3)).unwrap();
        let rev = reverse_system(&g);
        let arc = rev.arc(0);
        assert_eq!((arc.tail, arc.head), (1, 0));
        assert_eq!(arc.gamma, q(1, 2));
        assert_eq!(arc.cost, q(3, 2));

        // Spot-check the substitution: y = (3, 0) satisfies the original,
        // so z = (−3, 0) must satisfy the reversal.
        let z = [Scalar::int(-3), Scalar::int(0)];
        let bound = &arc.cost + &(&arc.gamma * &z[arc.head]);
        assert!(sign(&(&z[arc.tail] - &bound), &Tolerance::default()) != Sign::Pos);

        // Reversal is an involution.
        let back = reverse_system(&rev);
        for (orig, twice) in g.arcs().iter().zip(back.arcs()) {
            assert_eq!((orig.tail, orig.head), (twice.tail, twice.head));
            assert_eq!(orig.gamma, twice.gamma);
            assert_eq!(orig.cost, twice.cost);
        }
    }

    #[test]
    fn lower_bounds_flow_through_reversal() {
        // y_0 ≥ 4, encoded as −y_0 ≤ −4 via the reduction, solves to the
        // reported minimum through the reversed system.
        let mut sys = Tvpi2System::new(ArithMode::Rational, 1);
        sys.add_row(Scalar::int(-1), 0, Scalar::int(0), 0, Scalar::int(-4));
        let reduced = reduce_2vpi(&sys).unwrap();
        match recover_finite_solution(&reduced.graph, &cfg()).unwrap() {
            RecoveryOutcome::Point { y } => {
                let back = reduced.back_map(&y);
                assert!(sys.satisfied_by(&back, &Tolerance::default()));
                assert_eq!(back[0], Scalar::int(4));
            }
            other => panic!("expected a point, got {other:?}"),
        }
    }

    #[test]
    fn recovery_handles_free_and_one_sided_coordinates() {
        // Node 0 free; node 1 bounded above through an absorbing loop.
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(1, 1, q(1, 2), Scalar::int(3)).unwrap(); // y_1 ≤ 6
        match recover_finite_solution(&g, &cfg()).unwrap() {
            RecoveryOutcome::Point { y } => {
                assert_eq!(y[0], Scalar::int(0));
                assert_eq!(y[1], Scalar::int(6));
            }
            other => panic!("expected a point, got {other:?}"),
        }

        let empty = GainGraph::new(ArithMode::Rational, 1);
        match recover_finite_solution(&empty, &cfg()).unwrap() {
            RecoveryOutcome::Point { y } => assert_eq!(y[0], Scalar::int(0)),
            other => panic!("expected a point, got {other:?}"),
        }
    }

    #[test]
    fn recovery_propagates_infeasibility() {
        let mut g = GainGraph::new(ArithMode::Rational, 2);
        g.add_arc(0, 1, Scalar::int(1), Scalar::int(-1)).unwrap();
        g.add_arc(1, 0, Scalar::int(1), Scalar::int(-1)).unwrap();
        assert!(matches!(
            recover_finite_solution(&g, &cfg()).unwrap(),
            RecoveryOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn reduction_same_sign_row() {
        // y_0 + y_1 ≤ 4 → y⁺_0 − y⁻_1 ≤ 4 and y⁺_1 − y⁻_0 ≤ 4.
        let mut sys = Tvpi2System::new(ArithMode::Rational, 2);
        sys.add_row(Scalar::int(1), 0, Scalar::int(1), 1, Scalar::int(4));
        let reduced = reduce_2vpi(&sys).unwrap();
        let arcs: Vec<_> = reduced
            .graph
            .arcs()
            .iter()
            .map(|a| (a.tail, a.head, a.gamma.clone(), a.cost.clone()))
            .collect();
        assert_eq!(
            arcs,
            vec![
                (0, 3, Scalar::int(1), Scalar::int(4)),
                (2, 1, Scalar::int(1), Scalar::int(4)),
            ]
        );
    }

    #[test]
    fn reduction_mixed_sign_row() {
        // y_0 − 2y_1 ≤ 3 → y⁺_0 ≤ 3 + 2y⁺_1 and y⁻_1 ≤ 3/2 + y⁻_0/2.
        let mut sys = Tvpi2System::new(ArithMode::Rational, 2);
        sys.add_row(Scalar::int(1), 0, Scalar::int(-2), 1, Scalar::int(3));
        let reduced = reduce_2vpi(&sys).unwrap();
        let arcs: Vec<_> = reduced
            .graph
            .arcs()
            .iter()
            .map(|a| (a.tail, a.head, a.gamma.clone(), a.cost.clone()))
            .collect();
        assert_eq!(
            arcs,
            vec![
                (0, 2, Scalar::int(2), Scalar::int(3)),
                (3, 1, q(1, 2), q(3, 2)),
            ]
        );
    }

    #[test]
    fn reduction_trivial_rows() {
        let mut bad = Tvpi2System::new(ArithMode::Rational, 1);
        bad.add_row(Scalar::int(0), 0, Scalar::int(0), 0, Scalar::int(-1));
        assert!(matches!(reduce_2vpi(&bad), Err(ReduceError::InfeasibleTrivialRow { row: 0, .. })));

        let mut ok = Tvpi2System::new(ArithMode::Rational, 1);
        ok.add_row(Scalar::int(0), 0, Scalar::int(0), 0, Scalar::int(2));
        // Coalesced row 3y_0 − 3y_0 ≤ 1 is also trivial and satisfiable.
        ok.add_row(Scalar::int(3), 0, Scalar::int(-3), 0, Scalar::int(1));
        assert_eq!(reduce_2vpi(&ok).unwrap().graph.arc_count(), 0);
    }

    #[test]
    fn reduction_round_trip_agrees_with_elimination() {
        // A small mixed system solved both ways.
        let mut sys = Tvpi2System::new(ArithMode::Rational, 2);
        sys.add_row(Scalar::int(1), 0, Scalar::int(1), 1, Scalar::int(4));
        sys.add_row(Scalar::int(-1), 0, Scalar::int(2), 1, Scalar::int(3));
        sys.add_row(Scalar::int(0), 0, Scalar::int(-1), 1, Scalar::int(-1));

        let mut fm = FmSystem::new(2);
        fm.add_row(vec![rat(1), rat(1)], rat(4));
        fm.add_row(vec![rat(-1), rat(2)], rat(3));
        fm.add_row(vec![rat(0), rat(-1)], rat(-1));
        assert!(fm.is_feasible());

        let reduced = reduce_2vpi(&sys).unwrap();
        match recover_finite_solution(&reduced.graph, &cfg()).unwrap() {
            RecoveryOutcome::Point { y } => {
                let back = reduced.back_map(&y);
                assert!(sys.satisfied_by(&back, &Tolerance::default()));
            }
            other => panic!("expected a point, got {other:?}"),
        }

        // And an infeasible variant flips both verdicts.
        let mut sys2 = Tvpi2System::new(ArithMode::Rational, 2);
        sys2.add_row(Scalar::int(1), 0, Scalar::int(1), 1, Scalar::int(-1));
        sys2.add_row(Scalar::int(-1), 0, Scalar::int(0), 1, Scalar::int(0));
        sys2.add_row(Scalar::int(0), 0, Scalar::int(-1), 1, Scalar::int(0));
        let mut fm2 = FmSystem::new(2);
        fm2.add_row(vec![rat(1), rat(1)], rat(-1));
        fm2.add_row(vec![rat(-1), rat(0)], rat(0));
        fm2.add_row(vec![rat(0), rat(-1)], rat(0));
        assert!(!fm2.is_feasible());
        let reduced2 = reduce_2vpi(&sys2).unwrap();
        assert!(matches!(
            recover_finite_solution(&reduced2.graph, &cfg()).unwrap(),
            RecoveryOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn phase_iterations_and_labels_monotone_on_a_chain() {
        // A chain with gains above and below one, solved in both engine
        // modes; outcomes agree and look-ahead uses no more evaluations.
        let mut g = GainGraph::new(ArithMode::Rational, 3);
        g.add_arc(0, 0, q(1, 3), Scalar::int(2)).unwrap(); // y_0 ≤ 3
        g.add_arc(1, 0, Scalar::int(2), Scalar::int(-1)).unwrap();
        g.add_arc(2, 1, q(1, 2), Scalar::int(1)).unwrap();
        g.add_arc(1, 2, Scalar::int(1), Scalar::int(4)).unwrap();
        g.add_arc(2, 2, q(2, 3), Scalar::int(-2)).unwrap(); // y_2 ≤ −6

        let look = solve_m2vpi(&g, &cfg()).unwrap();
        let std_cfg = NewtonConfig { method: Method::Standard, ..cfg() };
        let std = solve_m2vpi(&g, &std_cfg).unwrap();
        let (look_labels, std_labels) = match (&look.outcome, &std.outcome) {
            (
                SolveOutcome::MaxSolution { labels: a },
                SolveOutcome::MaxSolution { labels: b },
            ) => (a, b),
            other => panic!("expected solutions, got {other:?}"),
        };
        assert_eq!(look_labels, std_labels);
        let iters = |r: &M2vpiReport| -> usize {
            r.phases.iter().filter_map(|p| p.newton.as_ref()).map(|n| n.result.trace.len()).sum()
        };
        assert!(iters(&look) <= iters(&std));

        // Exit labels never increase phase over phase.
        for pair in look.phases.windows(2) {
            for v in 0..3 {
                let before = &pair[0].exit_labels[v];
                let after = &pair[1].exit_labels[v];
                assert_ne!(after.total_cmp(before), Ordering::Greater);
            }
        }
    }
}
