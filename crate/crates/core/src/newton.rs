//! Root finding for concave, piecewise-affine-like functions via damped
//! Newton iteration with an optional geometric look-ahead step.
//!
//! The engine drives a [`ConcaveOracle`]: given δ it reports either the pair
//! `(f(δ), g)` with `g` a supergradient of the concave function `f` at δ, or
//! "`f(δ) = −∞`". Starting from a point `δ₁` with `f(δ₁) ≤ 0` that lies at or
//! above every root, iterates decrease monotonically until `f` hits zero
//! exactly (up to the configured tolerance in float mode) or a certificate
//! that no root exists is found:
//!
//! * a point with `f(δ) = −∞`, or
//! * a point with `f(δ) < 0` and a nonnegative supergradient
//!
//! — either one proves `f < 0` on the whole line given the invariant that
//! iterates never pass below a root.
//!
//! In look-ahead mode every accepted Newton step `σ` is preceded by a probe of
//! the reflected point `σ′ = 2σ − δᵢ`. The probe is adopted iff its value is
//! finite and strictly negative with a strictly negative supergradient;
//! otherwise the engine falls back to `σ`. Probing is attempted even when
//! `f(σ) = 0`; such a probe always fails the adoption test, so the observable
//! result is unchanged.
//!
//! # Stateful oracles
//!
//! A probe that fails may lie strictly below the root, where a stateful
//! oracle (one that refines internal labels as it is queried) would have
//! driven its state past the fixpoint it is converging to. The engine
//! therefore keeps a strict protocol: the oracle's state must always reflect
//! **accepted iterates only**. Before probing, the preceding standard-point
//! evaluation is undone with [`ConcaveOracle::discard_last`]; if the probe
//! fails it is undone the same way and the standard point is re-evaluated for
//! adoption. Oracles must implement `discard_last` as a complete rollback of
//! the single most recent `eval`. Deterministic oracles thus see one history
//! entry per trace record, in order — except after a no-root verdict, where
//! one trailing entry for the witness point remains.

use std::fmt;

use thiserror::Error;

use crate::numerics::{sign, sign_eps, Scalar, Sign, Tolerance};

/// Evaluation interface the engine drives.
///
/// `eval` may mutate internal state (labels, caches). `discard_last` must
/// undo the most recent `eval` completely; the default no-op suits stateless
/// oracles.
pub trait ConcaveOracle {
    fn eval(&mut self, delta: &Scalar) -> Result<OracleReply, NewtonError>;

    /// Roll back the single most recent call to `eval`.
    fn discard_last(&mut self) {}
}

/// One oracle answer: a finite value with a supergradient, or `−∞`.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleReply {
    Finite { value: Scalar, supergradient: Scalar },
    NegInf,
}

/// Iteration policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Plain Newton steps.
    Standard,
    /// Newton steps with the reflected look-ahead probe.
    LookAhead,
}

#[derive(Clone, Debug)]
pub struct NewtonConfig {
    pub method: Method,
    /// Maximum number of accepted iterates (trace records). A run that roots
    /// exactly at the limit still succeeds.
    pub max_iters: usize,
    pub tol: Tolerance,
    /// Verify the supergradient inequality between consecutive accepted
    /// iterates and fail with a contract violation when it breaks.
    pub check_concavity: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            method: Method::LookAhead,
            max_iters: 1_000_000,
            tol: Tolerance::default(),
            check_concavity: cfg!(debug_assertions),
        }
    }
}

impl NewtonConfig {
    /// A generous per-run iteration budget proportional to instance size.
    pub fn sized(size: usize) -> usize {
        10 * size.max(1)
    }

    pub fn with_method(method: Method) -> Self {
        NewtonConfig { method, ..NewtonConfig::default() }
    }
}

/// One accepted iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub delta: Scalar,
    pub value: Scalar,
    pub gradient: Scalar,
    /// Whether a look-ahead probe was evaluated while producing this iterate.
    pub lookahead_attempted: bool,
    /// Whether this iterate *is* an adopted look-ahead point.
    pub lookahead_success: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NewtonOutcome {
    Root {
        delta: Scalar,
    },
    /// `f < 0` everywhere. The witness point exhibits `f = −∞` or a negative
    /// value with nonnegative supergradient; it is not part of the trace.
    NoRoot {
        witness_delta: Scalar,
        witness: OracleReply,
    },
}

#[derive(Clone, Debug)]
pub struct NewtonResult {
    pub outcome: NewtonOutcome,
    pub trace: Vec<TraceRecord>,
}

impl NewtonResult {
    /// Number of accepted iterates.
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

#[derive(Debug, Error)]
pub enum NewtonError {
    #[error("iteration limit exceeded ({limit} iterates)")]
    IterationLimitExceeded { limit: usize },
    #[error("oracle contract violation: {0}")]
    OracleContractViolation(String),
    #[error("oracle failure: {0}")]
    OracleFailure(String),
}

/// Find the root of the concave function behind `oracle`.
///
/// Preconditions supplied by the caller: `f(delta1) ≤ 0`, `g1` is a
/// supergradient of `f` at `delta1`, and `delta1` lies at or above every root
/// of `f`. `f(delta1) = 0` returns `Root(delta1)` immediately; `g1` is then
/// recorded but never used.
pub fn solve_root<O: ConcaveOracle + ?Sized>(
    oracle: &mut O,
    delta1: &Scalar,
    g1: &Scalar,
    cfg: &NewtonConfig,
) -> Result<NewtonResult, NewtonError> {
    let tol = &cfg.tol;
    let mut trace: Vec<TraceRecord> = Vec::new();

    if cfg.max_iters == 0 {
        return Err(NewtonError::IterationLimitExceeded { limit: 0 });
    }

    let first = oracle.eval(delta1)?;
    let f1 = match &first {
        OracleReply::NegInf => {
            return Err(NewtonError::OracleContractViolation(
                "initial point must have a finite value".into(),
            ))
        }
        OracleReply::Finite { value, .. } => value.clone(),
    };
    match sign(&f1, tol) {
        Sign::Pos => {
            return Err(NewtonError::OracleContractViolation(format!(
                "initial value must be nonpositive, got {f1} at {delta1}"
            )))
        }
        Sign::Zero => {
            trace.push(TraceRecord {
                delta: delta1.clone(),
                value: f1,
                gradient: g1.clone(),
                lookahead_attempted: false,
                lookahead_success: false,
            });
            return Ok(NewtonResult { outcome: NewtonOutcome::Root { delta: delta1.clone() }, trace });
        }
        Sign::Neg => {}
    }

    trace.push(TraceRecord {
        delta: delta1.clone(),
        value: f1.clone(),
        gradient: g1.clone(),
        lookahead_attempted: false,
        lookahead_success: false,
    });

    if sign(g1, tol) != Sign::Neg {
        // Negative value, nonnegative slope: no root at or below delta1, and
        // the caller promised none lies above.
        return Ok(NewtonResult {
            outcome: NewtonOutcome::NoRoot {
                witness_delta: delta1.clone(),
                witness: OracleReply::Finite { value: f1, supergradient: g1.clone() },
            },
            trace,
        });
    }

    let mut cur_delta = delta1.clone();
    let mut cur_f = f1;
    let mut cur_g = g1.clone();

    loop {
        // Invariant: f(cur_delta) < 0 and cur_g < 0.
        if trace.len() >= cfg.max_iters {
            return Err(NewtonError::IterationLimitExceeded { limit: cfg.max_iters });
        }

        let std_delta = &cur_delta - &(&cur_f / &cur_g);
        let std_reply = oracle.eval(&std_delta)?;
        if let Some(result) =
            no_root_verdict(&std_delta, &std_reply, tol, &trace)?
        {
            return Ok(NewtonResult { outcome: result, trace });
        }

        let adopted = match cfg.method {
            Method::Standard => {
                let (value, gradient) = expect_finite(&std_reply);
                TraceRecord {
                    delta: std_delta.clone(),
                    value,
                    gradient,
                    lookahead_attempted: false,
                    lookahead_success: false,
                }
            }
            Method::LookAhead => {
                // The oracle must only retain accepted iterates, so undo the
                // standard evaluation before probing.
                oracle.discard_last();
                let probe_delta = &std_delta + &(&std_delta - &cur_delta);
                let probe_reply = oracle.eval(&probe_delta)?;
                let adopt_probe = match &probe_reply {
                    OracleReply::Finite { value, supergradient } => {
                        sign(value, tol) == Sign::Neg && sign(supergradient, tol) == Sign::Neg
                    }
                    OracleReply::NegInf => false,
                };
                if adopt_probe {
                    let (value, gradient) = expect_finite(&probe_reply);
                    TraceRecord {
                        delta: probe_delta,
                        value,
                        gradient,
                        lookahead_attempted: true,
                        lookahead_success: true,
                    }
                } else {
                    oracle.discard_last();
                    let re_reply = oracle.eval(&std_delta)?;
                    if let Some(result) =
                        no_root_verdict(&std_delta, &re_reply, tol, &trace)?
                    {
                        return Ok(NewtonResult { outcome: result, trace });
                    }
                    let (value, gradient) = expect_finite(&re_reply);
                    TraceRecord {
                        delta: std_delta.clone(),
                        value,
                        gradient,
                        lookahead_attempted: true,
                        lookahead_success: false,
                    }
                }
            }
        };

        if cfg.check_concavity {
            let prev = trace.last().expect("nonempty trace");
            let bound = &prev.value + &(&prev.gradient * &(&adopted.delta - &prev.delta));
            if sign_eps(&(&adopted.value - &bound), tol.eps_zero) == Sign::Pos {
                return Err(NewtonError::OracleContractViolation(format!(
                    "supergradient inequality broken between {} and {}: {} > {}",
                    prev.delta, adopted.delta, adopted.value, bound
                )));
            }
        }

        let done = sign(&adopted.value, tol) == Sign::Zero;
        cur_delta = adopted.delta.clone();
        cur_f = adopted.value.clone();
        cur_g = adopted.gradient.clone();
        trace.push(adopted);
        if done {
            return Ok(NewtonResult { outcome: NewtonOutcome::Root { delta: cur_delta }, trace });
        }
    }
}

fn expect_finite(reply: &OracleReply) -> (Scalar, Scalar) {
    match reply {
        OracleReply::Finite { value, supergradient } => (value.clone(), supergradient.clone()),
        OracleReply::NegInf => unreachable!("reply checked finite before adoption"),
    }
}

/// Shared verdict checks for a freshly evaluated standard point: `−∞` or a
/// negative value with nonnegative slope certify that no root exists;
/// a positive value breaks concavity.
fn no_root_verdict(
    delta: &Scalar,
    reply: &OracleReply,
    tol: &Tolerance,
    _trace: &[TraceRecord],
) -> Result<Option<NewtonOutcome>, NewtonError> {
    match reply {
        OracleReply::NegInf => Ok(Some(NewtonOutcome::NoRoot {
            witness_delta: delta.clone(),
            witness: OracleReply::NegInf,
        })),
        OracleReply::Finite { value, supergradient } => match sign(value, tol) {
            Sign::Pos => Err(NewtonError::OracleContractViolation(format!(
                "standard step value must be nonpositive, got {value} at {delta}"
            ))),
            Sign::Neg if sign(supergradient, tol) != Sign::Neg => {
                Ok(Some(NewtonOutcome::NoRoot {
                    witness_delta: delta.clone(),
                    witness: reply.clone(),
                }))
            }
            _ => Ok(None),
        },
    }
}

/// Per-iterate data for the Bregman-divergence contraction check: the root,
/// the value there (normally zero), and for each trace record the *least*
/// supergradient of `f` at that iterate.
#[derive(Clone, Debug)]
pub struct BregmanData {
    pub delta_star: Scalar,
    pub f_star: Scalar,
    pub min_supergradients: Vec<Scalar>,
}

/// A broken invariant found in an iteration trace.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceViolation {
    /// `delta[i] ≥ delta[i−1]` (indices are 1-based trace positions).
    DeltaNotDecreasing { i: usize },
    /// `f[i] ≤ f[i−1]`.
    ValueNotIncreasing { i: usize },
    /// `g[i] < g[i−1]`.
    GradientDecreased { i: usize },
    /// `f[i]/f[i−1] + g[i]/g[i−1] > 1` on a consecutive pair with both
    /// values negative.
    RatioBoundExceeded { i: usize, lhs: Scalar },
    /// A recorded value is positive.
    ValuePositive { i: usize },
    /// Supergradient inequality broken between records `i−1` and `i`.
    NotConcave { i: usize },
    /// Bregman divergence at record `i` is negative.
    BregmanNegative { i: usize, divergence: Scalar },
    /// `D[i] ≥ D[i−2]/2` in a look-ahead run.
    BregmanNotHalved { i: usize, divergence: Scalar, reference: Scalar },
    /// The Bregman data does not cover every trace record.
    BregmanDataLength { expected: usize, got: usize },
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::DeltaNotDecreasing { i } => {
                write!(f, "iterates must strictly decrease (record {i})")
            }
            TraceViolation::ValueNotIncreasing { i } => {
                write!(f, "values must strictly increase (record {i})")
            }
            TraceViolation::GradientDecreased { i } => {
                write!(f, "supergradients must not decrease (record {i})")
            }
            TraceViolation::RatioBoundExceeded { i, lhs } => {
                write!(f, "value/gradient ratio sum {lhs} exceeds 1 (record {i})")
            }
            TraceViolation::ValuePositive { i } => {
                write!(f, "recorded value is positive (record {i})")
            }
            TraceViolation::NotConcave { i } => {
                write!(f, "supergradient inequality broken (record {i})")
            }
            TraceViolation::BregmanNegative { i, divergence } => {
                write!(f, "Bregman divergence {divergence} negative (record {i})")
            }
            TraceViolation::BregmanNotHalved { i, divergence, reference } => {
                write!(
                    f,
                    "Bregman divergence {divergence} not halved against {reference} (record {i})"
                )
            }
            TraceViolation::BregmanDataLength { expected, got } => {
                write!(f, "Bregman data covers {got} records, trace has {expected}")
            }
        }
    }
}

/// Check the convergence invariants of an iteration trace.
///
/// Always checked: strictly decreasing iterates, strictly increasing values,
/// nondecreasing supergradients, no positive values, the supergradient
/// inequality, and on consecutive pairs with both values negative the ratio
/// bound `f[i]/f[i−1] + g[i]/g[i−1] ≤ 1`.
///
/// With `bregman` supplied (sensible for traces that end in a root), the
/// divergences `D[i] = f[i] + g[i]·(δ* − δ[i]) − f*` — using the least
/// supergradients from the data, not the recorded ones — are checked to be
/// nonnegative and, for look-ahead traces, to at least halve every second
/// iterate: `D[i] < D[i−2]/2` for `i ≥ 3`.
///
/// In float mode violations are reported only when they exceed the tolerance;
/// in rational mode the checks are exact and strict.
pub fn verify_trace(
    trace: &[TraceRecord],
    tol: &Tolerance,
    bregman: Option<&BregmanData>,
) -> Vec<TraceViolation> {
    let mut violations = Vec::new();
    let eps = tol.eps_zero;

    for (idx, rec) in trace.iter().enumerate() {
        let i = idx + 1;
        if sign_eps(&rec.value, eps) == Sign::Pos {
            violations.push(TraceViolation::ValuePositive { i });
        }
        if idx == 0 {
            continue;
        }
        let prev = &trace[idx - 1];
        // Strict checks: exact in rational mode, clear-violation-only in
        // float mode (a borderline tie cannot be certified either way).
        let d_delta = &rec.delta - &prev.delta;
        let strict_delta_ok = match &d_delta {
            Scalar::Rational(_) => sign_eps(&d_delta, 0.0) == Sign::Neg,
            Scalar::Float(_) => sign_eps(&d_delta, eps) != Sign::Pos,
        };
        if !strict_delta_ok {
            violations.push(TraceViolation::DeltaNotDecreasing { i });
        }
        let d_value = &rec.value - &prev.value;
        let strict_value_ok = match &d_value {
            Scalar::Rational(_) => sign_eps(&d_value, 0.0) == Sign::Pos,
            Scalar::Float(_) => sign_eps(&d_value, eps) != Sign::Neg,
        };
        if !strict_value_ok {
            violations.push(TraceViolation::ValueNotIncreasing { i });
        }
        if sign_eps(&(&rec.gradient - &prev.gradient), eps) == Sign::Neg {
            violations.push(TraceViolation::GradientDecreased { i });
        }
        let bound = &prev.value + &(&prev.gradient * &d_delta);
        if sign_eps(&(&rec.value - &bound), eps) == Sign::Pos {
            violations.push(TraceViolation::NotConcave { i });
        }
        let both_negative = sign_eps(&rec.value, eps) == Sign::Neg
            && sign_eps(&prev.value, eps) == Sign::Neg
            && sign_eps(&prev.gradient, eps) == Sign::Neg
            && sign_eps(&rec.gradient, eps) == Sign::Neg;
        if both_negative {
            let lhs = &(&rec.value / &prev.value) + &(&rec.gradient / &prev.gradient);
            let over = &lhs - &Scalar::one(lhs.mode());
            if sign_eps(&over, eps) == Sign::Pos {
                violations.push(TraceViolation::RatioBoundExceeded { i, lhs });
            }
        }
    }

    if let Some(data) = bregman {
        if data.min_supergradients.len() != trace.len() {
            violations.push(TraceViolation::BregmanDataLength {
                expected: trace.len(),
                got: data.min_supergradients.len(),
            });
            return violations;
        }
        let divergences: Vec<Scalar> = trace
            .iter()
            .zip(&data.min_supergradients)
            .map(|(rec, g)| {
                &(&rec.value + &(g * &(&data.delta_star - &rec.delta))) - &data.f_star
            })
            .collect();
        for (idx, d) in divergences.iter().enumerate() {
            let i = idx + 1;
            if sign_eps(d, eps) == Sign::Neg {
                violations.push(TraceViolation::BregmanNegative { i, divergence: d.clone() });
            }
            if idx >= 2 {
                let reference = &divergences[idx - 2];
                let half = reference / &Scalar::from_int(2, reference.mode());
                let over = d - &half;
                let halved = match &over {
                    Scalar::Rational(_) => sign_eps(&over, 0.0) == Sign::Neg,
                    Scalar::Float(_) => sign_eps(&over, eps) != Sign::Pos,
                };
                if !halved {
                    violations.push(TraceViolation::BregmanNotHalved {
                        i,
                        divergence: d.clone(),
                        reference: reference.clone(),
                    });
                }
            }
        }
    }

    violations
}

/// Render a trace as CSV: `i,delta,f,g,lookahead_attempted,lookahead_success`
/// with 1-based indices and 0/1 booleans.
pub fn trace_to_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("i,delta,f,g,lookahead_attempted,lookahead_success\n");
    for (idx, rec) in trace.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            idx + 1,
            rec.delta,
            rec.value,
            rec.gradient,
            rec.lookahead_attempted as u8,
            rec.lookahead_success as u8,
        ));
    }
    out
}
