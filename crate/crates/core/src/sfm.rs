//! Parametric line search over submodular set functions.
//!
//! Given a nonnegative submodular `h` on a ground set `V` and a direction
//! vector `a`, find `δ* = max{δ : h(S) − δ·a(S) ≥ 0 for all S ⊆ V}` — the
//! largest parameter keeping the shifted function nonnegative. The map
//! `f(δ) = min_S h(S) − δ·a(S)` is concave and piecewise linear, each
//! minimization provides a supergradient `−a(S)`, and `δ*` is its maximal
//! root, so the accelerated root-finding engine applies directly.
//!
//! Minimization itself is an exhaustive scan (the backend seam is the
//! [`SubmodularFn`] trait); this library targets instances small enough to
//! verify exactly, not large-scale submodular minimization.

use std::cmp::Ordering;

use thiserror::Error;

use crate::newton::{
    solve_root, ConcaveOracle, NewtonConfig, NewtonError, NewtonOutcome, NewtonResult, OracleReply,
};
use crate::numerics::{sign, ArithMode, Scalar, Sign};

/// A subset of the ground set, one bit per element (bit `i` ⇔ element `i`).
pub type SetMask = u32;

/// A set function given by evaluation. Implementations must be submodular
/// and nonnegative; [`verify_submodular`] checks both exhaustively on small
/// ground sets. Evaluation must be read-only so scans can share the
/// function freely.
pub trait SubmodularFn {
    fn ground_size(&self) -> usize;
    fn eval(&self, s: SetMask) -> Scalar;
}

#[derive(Debug, Error)]
pub enum SfmError {
    #[error("ground set of size {n} exceeds the exhaustive-scan cap")]
    GroundSetTooLarge { n: usize },
    #[error("vector length does not match the ground set")]
    DimensionMismatch,
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("submodular inequality fails at masks {s:#b}, {t:#b}")]
    NotSubmodular { s: SetMask, t: SetMask },
    #[error("function is negative at mask {s:#b}")]
    NegativeValue { s: SetMask },
    #[error("no root found: {0}")]
    NoRootUnexpected(String),
    #[error(transparent)]
    Engine(#[from] NewtonError),
}

/// Sum the coordinates of `a` selected by `mask`.
pub fn set_sum(a: &[Scalar], mask: SetMask) -> Scalar {
    let mode = a.first().map(|s| s.mode()).unwrap_or(ArithMode::Rational);
    let mut acc = Scalar::zero(mode);
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        acc = &acc + &a[i];
        rest &= rest - 1;
    }
    acc
}

/// Exhaustively check submodularity and nonnegativity. Quadratic in the
/// number of subsets, so capped at 12 elements.
pub fn verify_submodular<H: SubmodularFn + ?Sized>(h: &H) -> Result<(), SfmError> {
    let n = h.ground_size();
    if n > 12 {
        return Err(SfmError::GroundSetTooLarge { n });
    }
    let size = 1u32 << n;
    let table: Vec<Scalar> = (0..size).map(|s| h.eval(s)).collect();
    let zero = Scalar::zero(table[0].mode());
    for (s, val) in table.iter().enumerate() {
        if val.total_cmp(&zero) == Ordering::Less {
            return Err(SfmError::NegativeValue { s: s as SetMask });
        }
    }
    for s in 0..size {
        for t in 0..s {
            let lhs = &table[s as usize] + &table[t as usize];
            let rhs = &table[(s & t) as usize] + &table[(s | t) as usize];
            if lhs.total_cmp(&rhs) == Ordering::Less {
                return Err(SfmError::NotSubmodular { s, t });
            }
        }
    }
    Ok(())
}

/// Minimize `h(S) − δ·a(S)` by scanning all subsets. Among minimizers the
/// scan prefers larger `a(S)` (so the negated sum is the steepest
/// supergradient of the piecewise-linear minimum at `δ`), then the lowest
/// mask, making replies deterministic.
pub fn sfm_minimize<H: SubmodularFn + ?Sized>(
    h: &H,
    a: &[Scalar],
    delta: &Scalar,
) -> Result<(Scalar, SetMask), SfmError> {
    let n = h.ground_size();
    if n > 20 {
        return Err(SfmError::GroundSetTooLarge { n });
    }
    if a.len() != n {
        return Err(SfmError::DimensionMismatch);
    }
    let size = 1u32 << n;
    let mode = delta.mode();
    // Subset sums of `a`, built by peeling the lowest set bit.
    let mut a_sums = Vec::with_capacity(size as usize);
    a_sums.push(Scalar::zero(mode));
    for mask in 1..size {
        let prev = (mask & (mask - 1)) as usize;
        let i = mask.trailing_zeros() as usize;
        a_sums.push(&a_sums[prev] + &a[i]);
    }
    let mut best: Option<(Scalar, SetMask)> = None;
    for mask in 0..size {
        let value = &h.eval(mask) - &(delta * &a_sums[mask as usize]);
        let replace = match &best {
            None => true,
            Some((bv, bm)) => match value.total_cmp(bv) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    a_sums[mask as usize].total_cmp(&a_sums[*bm as usize]) == Ordering::Greater
                }
            },
        };
        if replace {
            best = Some((value, mask));
        }
    }
    Ok(best.expect("the empty set is always scanned"))
}

/// Independent reference for `δ*`: the minimum of `h(S)/a(S)` over subsets
/// with positive `a(S)`, by direct scan.
pub fn bruteforce_delta_star<H: SubmodularFn + ?Sized>(
    h: &H,
    a: &[Scalar],
) -> Result<Scalar, SfmError> {
    let n = h.ground_size();
    if n > 20 {
        return Err(SfmError::GroundSetTooLarge { n });
    }
    if a.len() != n {
        return Err(SfmError::DimensionMismatch);
    }
    let mut best: Option<Scalar> = None;
    for mask in 0..(1u32 << n) {
        let denom = set_sum(a, mask);
        if sign(&denom, &crate::numerics::Tolerance::default()) != Sign::Pos {
            continue;
        }
        let ratio = &h.eval(mask) / &denom;
        let keep = match &best {
            None => true,
            Some(b) => ratio.total_cmp(b) == Ordering::Less,
        };
        if keep {
            best = Some(ratio);
        }
    }
    best.ok_or_else(|| {
        SfmError::PreconditionViolation("no subset has a positive direction sum".into())
    })
}

/// Result of a parametric run: the maximal root, a subset attaining it with
/// positive direction sum, counts, and the engine trace with the minimizer
/// behind each iterate.
pub struct ParamSfmResult {
    pub delta_star: Scalar,
    pub witness: SetMask,
    pub iterations: usize,
    /// Total exhaustive-minimization calls, probes included.
    pub sfm_calls: usize,
    pub result: NewtonResult,
    /// The minimizer behind each trace record, index-aligned.
    pub iterate_sets: Vec<SetMask>,
}

struct SfmStep {
    delta: Scalar,
    mask: SetMask,
    reply: OracleReply,
}

struct SfmOracle<'a, H: ?Sized> {
    h: &'a H,
    a: &'a [Scalar],
    history: Vec<SfmStep>,
    initial: Option<SfmStep>,
    /// Most recently discarded evaluation; a re-evaluation at the same point
    /// (the engine's rollback after a failed probe) reuses it so each
    /// iteration costs at most two scans.
    memo: Option<SfmStep>,
    calls: usize,
}

impl<H: SubmodularFn + ?Sized> ConcaveOracle for SfmOracle<'_, H> {
    fn eval(&mut self, delta: &Scalar) -> Result<OracleReply, NewtonError> {
        if let Some(step) = self.initial.take() {
            debug_assert_eq!(step.delta.total_cmp(delta), Ordering::Equal);
            let reply = step.reply.clone();
            self.history.push(step);
            return Ok(reply);
        }
        if let Some(step) = self.memo.take() {
            if step.delta.total_cmp(delta) == Ordering::Equal {
                let reply = step.reply.clone();
                self.history.push(step);
                return Ok(reply);
            }
        }
        let (value, mask) = sfm_minimize(self.h, self.a, delta)
            .map_err(|e| NewtonError::OracleFailure(e.to_string()))?;
        self.calls += 1;
        let reply = OracleReply::Finite { value, supergradient: -set_sum(self.a, mask) };
        self.history.push(SfmStep { delta: delta.clone(), mask, reply: reply.clone() });
        Ok(reply)
    }

    fn discard_last(&mut self) {
        self.memo = self.history.pop();
    }
}

/// Find the largest `δ` with `h − δ·a` nonnegative everywhere.
///
/// The search starts at the best singleton ratio `min{h({i})/a_i : a_i > 0}`
/// (lowest index on ties; the value is the same), which bounds the root
/// from above, and walks down by Newton steps.
pub fn parametric_sfm<H: SubmodularFn + ?Sized>(
    h: &H,
    a: &[Scalar],
    cfg: &NewtonConfig,
) -> Result<ParamSfmResult, SfmError> {
    let n = h.ground_size();
    if n > 20 {
        return Err(SfmError::GroundSetTooLarge { n });
    }
    if a.len() != n {
        return Err(SfmError::DimensionMismatch);
    }
    let zero = a
        .first()
        .map(|s| Scalar::zero(s.mode()))
        .ok_or_else(|| SfmError::PreconditionViolation("empty ground set".into()))?;
    let mut delta1: Option<Scalar> = None;
    for (i, ai) in a.iter().enumerate() {
        if ai.total_cmp(&zero) != Ordering::Greater {
            continue;
        }
        let ratio = &h.eval(1 << i) / ai;
        if delta1.as_ref().map_or(true, |d| ratio.total_cmp(d) == Ordering::Less) {
            delta1 = Some(ratio);
        }
    }
    let delta1 = delta1.ok_or_else(|| {
        SfmError::PreconditionViolation("the direction vector has no positive coordinate".into())
    })?;

    let (f1, s1) = sfm_minimize(h, a, &delta1)?;
    let g1 = -set_sum(a, s1);
    let mut oracle = SfmOracle {
        h,
        a,
        history: Vec::new(),
        initial: Some(SfmStep {
            delta: delta1.clone(),
            mask: s1,
            reply: OracleReply::Finite { value: f1, supergradient: g1.clone() },
        }),
        memo: None,
        calls: 1,
    };
    let result = solve_root(&mut oracle, &delta1, &g1, cfg)?;
    let mut history = oracle.history;
    match result.outcome.clone() {
        NewtonOutcome::Root { delta } => {
            assert_eq!(history.len(), result.trace.len(), "oracle steps must match the trace");
            let witness = history.last().expect("a root has a final iterate").mask;
            if delta.mode() == ArithMode::Rational {
                let denom = set_sum(a, witness);
                assert_eq!(
                    h.eval(witness).total_cmp(&(&delta * &denom)),
                    Ordering::Equal,
                    "the witness is tight at the root"
                );
                assert_eq!(
                    denom.total_cmp(&zero),
                    Ordering::Greater,
                    "the witness has a positive direction sum"
                );
            }
            Ok(ParamSfmResult {
                delta_star: delta,
                witness,
                iterations: result.iterations(),
                sfm_calls: oracle.calls,
                iterate_sets: history.iter().map(|s| s.mask).collect(),
                result,
            })
        }
        NewtonOutcome::NoRoot { witness_delta, .. } => {
            if history.len() > result.trace.len() {
                history.pop();
            }
            Err(SfmError::NoRootUnexpected(format!(
                "stalled at {witness_delta}; the function is not nonnegative submodular"
            )))
        }
    }
}

/// A set function stored as a full table in mask order.
pub struct TableFn {
    n: usize,
    values: Vec<Scalar>,
}

impl TableFn {
    pub fn new(n: usize, values: Vec<Scalar>) -> Result<Self, SfmError> {
        if n > 20 {
            return Err(SfmError::GroundSetTooLarge { n });
        }
        if values.len() != 1usize << n {
            return Err(SfmError::DimensionMismatch);
        }
        Ok(TableFn { n, values })
    }
}

impl SubmodularFn for TableFn {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, s: SetMask) -> Scalar {
        self.values[s as usize].clone()
    }
}

/// Weighted undirected cut: `h(S)` totals the weights of edges with exactly
/// one endpoint in `S`. Nonnegative weights make it nonnegative submodular.
pub struct CutFn {
    n: usize,
    edges: Vec<(usize, usize, Scalar)>,
}

impl CutFn {
    pub fn new(n: usize, edges: Vec<(usize, usize, Scalar)>) -> Result<Self, SfmError> {
        let zero = edges.first().map(|(_, _, w)| Scalar::zero(w.mode()));
        for (u, v, w) in &edges {
            if *u >= n || *v >= n {
                return Err(SfmError::DimensionMismatch);
            }
            if w.total_cmp(zero.as_ref().unwrap()) == Ordering::Less {
                return Err(SfmError::PreconditionViolation(
                    "cut weights must be nonnegative".into(),
                ));
            }
        }
        Ok(CutFn { n, edges })
    }
}

impl SubmodularFn for CutFn {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, s: SetMask) -> Scalar {
        let mode = self
            .edges
            .first()
            .map(|(_, _, w)| w.mode())
            .unwrap_or(ArithMode::Rational);
        let mut acc = Scalar::zero(mode);
        for (u, v, w) in &self.edges {
            if (s >> u & 1) != (s >> v & 1) {
                acc = &acc + w;
            }
        }
        acc
    }
}

/// Rank function of the uniform matroid: `h(S) = min(|S|, k)`.
pub struct UniformMatroidRank {
    pub n: usize,
    pub k: usize,
}

impl SubmodularFn for UniformMatroidRank {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, s: SetMask) -> Scalar {
        Scalar::int((s.count_ones() as usize).min(self.k) as i64)
    }
}

/// Rank function of a partition matroid: each block contributes up to its
/// capacity. Blocks must partition the ground set.
pub struct PartitionMatroidRank {
    n: usize,
    blocks: Vec<(SetMask, usize)>,
}

impl PartitionMatroidRank {
    pub fn new(n: usize, blocks: Vec<(SetMask, usize)>) -> Result<Self, SfmError> {
        let mut union: SetMask = 0;
        for (mask, _) in &blocks {
            if union & mask != 0 {
                return Err(SfmError::PreconditionViolation("blocks overlap".into()));
            }
            union |= mask;
        }
        if n > 20 || union != (1u32 << n) - 1 {
            return Err(SfmError::DimensionMismatch);
        }
        Ok(PartitionMatroidRank { n, blocks })
    }
}

impl SubmodularFn for PartitionMatroidRank {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn eval(&self, s: SetMask) -> Scalar {
        let total: usize = self
            .blocks
            .iter()
            .map(|(mask, cap)| ((s & mask).count_ones() as usize).min(*cap))
            .sum();
        Scalar::int(total as i64)
    }
}

/// Weighted coverage: element `i` covers a set of universe points;
/// `h(S)` totals the weights of points covered by at least one chosen
/// element. Nonnegative weights make it nonnegative submodular.
pub struct WeightedCoverage {
    covers: Vec<Vec<usize>>,
    weights: Vec<Scalar>,
}

impl WeightedCoverage {
    pub fn new(covers: Vec<Vec<usize>>, weights: Vec<Scalar>) -> Result<Self, SfmError> {
        let zero = weights.first().map(|w| Scalar::zero(w.mode()));
        for w in &weights {
            if w.total_cmp(zero.as_ref().unwrap()) == Ordering::Less {
                return Err(SfmError::PreconditionViolation(
                    "coverage weights must be nonnegative".into(),
                ));
            }
        }
        for cover in &covers {
            if cover.iter().any(|&j| j >= weights.len()) {
                return Err(SfmError::DimensionMismatch);
            }
        }
        Ok(WeightedCoverage { covers, weights })
    }
}

impl SubmodularFn for WeightedCoverage {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn eval(&self, s: SetMask) -> Scalar {
        let mode = self
            .weights
            .first()
            .map(|w| w.mode())
            .unwrap_or(ArithMode::Rational);
        let mut covered = vec![false; self.weights.len()];
        for (i, cover) in self.covers.iter().enumerate() {
            if s >> i & 1 == 1 {
                for &j in cover {
                    covered[j] = true;
                }
            }
        }
        let mut acc = Scalar::zero(mode);
        for (j, w) in self.weights.iter().enumerate() {
            if covered[j] {
                acc = &acc + w;
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ints(vals: &[i64]) -> Vec<Scalar> {
        vals.iter().map(|&v| Scalar::int(v)).collect()
    }

    fn two_point() -> TableFn {
        TableFn::new(1, ints(&[0, 2])).unwrap()
    }

    #[test]
    fn verification_accepts_and_rejects() {
        verify_submodular(&two_point()).unwrap();
        verify_submodular(&UniformMatroidRank { n: 4, k: 2 }).unwrap();
        // min(|S|, 1) read upside down: supermodular, not submodular.
        let bad = TableFn::new(2, ints(&[0, 0, 0, 1])).unwrap();
        assert!(matches!(verify_submodular(&bad), Err(SfmError::NotSubmodular { .. })));
        let negative = TableFn::new(1, ints(&[0, -1])).unwrap();
        assert!(matches!(verify_submodular(&negative), Err(SfmError::NegativeValue { s: 1 })));
    }

    #[test]
    fn minimize_scans_with_tie_break() {
        let h = two_point();
        let (val, s) = sfm_minimize(&h, &ints(&[1]), &Scalar::int(1)).unwrap();
        assert_eq!(val, Scalar::int(0));
        assert_eq!(s, 0b0);
        let (val, s) = sfm_minimize(&h, &ints(&[1]), &Scalar::int(3)).unwrap();
        assert_eq!(val, Scalar::int(-1));
        assert_eq!(s, 0b1);
        // Ties prefer the larger direction sum: at δ = 2 both sets give 0.
        let (val, s) = sfm_minimize(&h, &ints(&[1]), &Scalar::int(2)).unwrap();
        assert_eq!(val, Scalar::int(0));
        assert_eq!(s, 0b1);
    }

    #[test]
    fn singleton_parametric_run() {
        let out = parametric_sfm(&two_point(), &ints(&[1]), &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::int(2));
        assert_eq!(out.witness, 0b1);
        assert_eq!(bruteforce_delta_star(&two_point(), &ints(&[1])).unwrap(), Scalar::int(2));
    }

    #[test]
    fn rank_one_matroid_halves_the_ratio() {
        let h = UniformMatroidRank { n: 2, k: 1 };
        let a = ints(&[1, 1]);
        let out = parametric_sfm(&h, &a, &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::ratio(1, 2));
        assert_eq!(out.witness, 0b11);
        assert_eq!(bruteforce_delta_star(&h, &a).unwrap(), Scalar::ratio(1, 2));
    }

    #[test]
    fn zero_function_roots_immediately() {
        let h = TableFn::new(2, ints(&[0, 0, 0, 0])).unwrap();
        let out = parametric_sfm(&h, &ints(&[1, -1]), &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::int(0));
        assert_eq!(out.iterations, 1);
        assert_eq!(out.sfm_calls, 1);
    }

    #[test]
    fn direction_must_have_a_positive_coordinate() {
        let h = two_point();
        let err = parametric_sfm(&h, &ints(&[-1]), &NewtonConfig::default());
        assert!(matches!(err, Err(SfmError::PreconditionViolation(_))));
    }

    fn random_function(rng: &mut ChaCha8Rng, n: usize) -> Box<dyn SubmodularFn> {
        match rng.gen_range(0..4) {
            0 => {
                let mut edges = Vec::new();
                for u in 0..n {
                    for v in (u + 1)..n {
                        if rng.gen_bool(0.6) {
                            edges.push((u, v, Scalar::int(rng.gen_range(0..=4))));
                        }
                    }
                }
                Box::new(CutFn::new(n, edges).unwrap())
            }
            1 => Box::new(UniformMatroidRank { n, k: rng.gen_range(1..=n) }),
            2 => {
                let mut blocks = Vec::new();
                let mut rest: SetMask = (1 << n) - 1;
                while rest != 0 {
                    let mut mask = 0;
                    let mut bits = rest;
                    while bits != 0 {
                        let low = bits & bits.wrapping_neg();
                        if mask == 0 || rng.gen_bool(0.5) {
                            mask |= low;
                        }
                        bits &= bits - 1;
                    }
                    blocks.push((mask, rng.gen_range(1..=2)));
                    rest &= !mask;
                }
                Box::new(PartitionMatroidRank::new(n, blocks).unwrap())
            }
            _ => {
                let points = rng.gen_range(1..=5);
                let weights: Vec<Scalar> =
                    (0..points).map(|_| Scalar::int(rng.gen_range(0..=3))).collect();
                let covers: Vec<Vec<usize>> = (0..n)
                    .map(|_| (0..points).filter(|_| rng.gen_bool(0.5)).collect())
                    .collect();
                Box::new(WeightedCoverage::new(covers, weights).unwrap())
            }
        }
    }

    #[test]
    fn random_runs_match_brute_force_with_bounded_work() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5f3a_11bc);
        for round in 0..120 {
            let n = rng.gen_range(1..=6);
            let h = random_function(&mut rng, n);
            verify_submodular(h.as_ref()).unwrap();
            let mut a: Vec<Scalar> =
                (0..n).map(|_| Scalar::int(rng.gen_range(-3..=5))).collect();
            let zero = Scalar::int(0);
            if !a.iter().any(|ai| ai.total_cmp(&zero) == Ordering::Greater) {
                a[0] = Scalar::int(1);
            }
            let out = parametric_sfm(h.as_ref(), &a, &NewtonConfig::default()).unwrap();
            let expected = bruteforce_delta_star(h.as_ref(), &a).unwrap();
            assert_eq!(out.delta_star, expected, "round {round}");
            let bound = 2 * n * n + 2 * n + 4;
            assert!(
                out.iterations <= bound,
                "round {round}: {} iterates exceeds {bound}",
                out.iterations
            );
            assert!(out.sfm_calls <= 2 * out.iterations + 2, "round {round}");
            assert_eq!(out.iterate_sets.len(), out.result.trace.len());

            // Distance-to-root identity and geometric decay along the trace:
            // the gap f_i + g_i·(δ* − δ_i) equals the shifted value of the
            // iterate's minimizer and at least halves every other step.
            let mut gaps = Vec::new();
            for (rec, &mask) in out.result.trace.iter().zip(&out.iterate_sets) {
                let gap = &rec.value + &(&rec.gradient * &(&out.delta_star - &rec.delta));
                let shifted =
                    &h.eval(mask) - &(&out.delta_star * &set_sum(&a, mask));
                assert_eq!(gap.total_cmp(&shifted), Ordering::Equal, "round {round}");
                gaps.push(gap);
            }
            for i in 2..gaps.len() {
                let doubled = &gaps[i] + &gaps[i];
                assert_eq!(
                    doubled.total_cmp(&gaps[i - 2]),
                    Ordering::Less,
                    "round {round}: decay fails at iterate {i}"
                );
            }
        }
    }
}
