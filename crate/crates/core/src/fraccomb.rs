//! Minimize a ratio of linear functions over a finite 0/1 domain.
//!
//! Given vectors `c`, `d` and a domain `D ⊆ {0,1}^m` reachable only through
//! a linear-minimization oracle, find `min cᵀx/dᵀx` over `x ∈ D`, assuming
//! `dᵀx > 0` throughout. The ratio question is flattened into root-finding:
//! `f(δ) = min{(c − δd)ᵀx : x ∈ D}` is concave, piecewise linear and
//! strictly decreasing, and its unique root is the optimal ratio. Each
//! oracle call yields both the value and a supergradient `−dᵀx`, which is
//! exactly what the root-finding engine wants.

use std::cmp::Ordering;

use thiserror::Error;

use crate::newton::{
    solve_root, ConcaveOracle, NewtonConfig, NewtonError, NewtonOutcome, NewtonResult, OracleReply,
};
use crate::numerics::{sign, ArithMode, Scalar, Sign};

#[derive(Debug, Error)]
pub enum FracError {
    #[error("the domain is empty")]
    EmptyDomain,
    #[error("the enumeration oracle is capped at 20 coordinates, got {m}")]
    DomainTooLarge { m: usize },
    #[error("domain vector has the wrong number of coordinates")]
    DimensionMismatch,
    #[error("oracle returned a point with nonpositive denominator: {0}")]
    DomainViolation(String),
    #[error("no root found: {0}")]
    NoRootUnexpected(String),
    #[error(transparent)]
    Engine(#[from] NewtonError),
}

/// Linear minimization over a fixed 0/1 domain.
///
/// `argmin(w, tie)` returns a domain point minimizing `wᵀx`; among
/// minimizers it must prefer larger `tieᵀx` (the ratio solver passes the
/// denominator vector there, which pins the steepest supergradient and
/// makes runs reproducible).
pub trait DiscreteDomainOracle {
    fn dimension(&self) -> usize;
    fn argmin(&self, w: &[Scalar], tie: &[Scalar]) -> Vec<bool>;
}

/// A domain stored as an explicit list of points; `argmin` scans it.
/// Ties on `tieᵀx` break toward the lexicographically smallest point
/// (coordinate 0 weighs heaviest), so replies never depend on list order.
pub struct ExplicitDomain {
    m: usize,
    members: Vec<Vec<bool>>,
}

impl ExplicitDomain {
    pub fn new(m: usize, members: Vec<Vec<bool>>) -> Result<Self, FracError> {
        if members.is_empty() {
            return Err(FracError::EmptyDomain);
        }
        if members.iter().any(|x| x.len() != m) {
            return Err(FracError::DimensionMismatch);
        }
        Ok(ExplicitDomain { m, members })
    }

    pub fn members(&self) -> &[Vec<bool>] {
        &self.members
    }
}

impl DiscreteDomainOracle for ExplicitDomain {
    fn dimension(&self) -> usize {
        self.m
    }

    fn argmin(&self, w: &[Scalar], tie: &[Scalar]) -> Vec<bool> {
        let mut best: Option<(Scalar, Scalar, &Vec<bool>)> = None;
        for x in &self.members {
            let value = dot(w, x);
            let tie_value = dot(tie, x);
            let replace = match &best {
                None => true,
                Some((bv, bt, bx)) => match value.total_cmp(bv) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => match tie_value.total_cmp(bt) {
                        Ordering::Greater => true,
                        Ordering::Less => false,
                        Ordering::Equal => x < *bx,
                    },
                },
            };
            if replace {
                best = Some((value, tie_value, x));
            }
        }
        best.expect("domains are nonempty by construction").2.clone()
    }
}

/// Build an enumeration-backed domain from a membership predicate over
/// `{0,1}^m`, scanning all `2^m` points once. Desk-scale only: `m ≤ 20`.
pub fn make_subset_oracle(
    m: usize,
    membership: impl Fn(&[bool]) -> bool,
) -> Result<ExplicitDomain, FracError> {
    if m > 20 {
        return Err(FracError::DomainTooLarge { m });
    }
    let mut members = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let x: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
        if membership(&x) {
            members.push(x);
        }
    }
    ExplicitDomain::new(m, members)
}

fn dot(w: &[Scalar], x: &[bool]) -> Scalar {
    let mode = w.first().map(|s| s.mode()).unwrap_or(ArithMode::Rational);
    let mut acc = Scalar::zero(mode);
    for (wi, &xi) in w.iter().zip(x) {
        if xi {
            acc = &acc + wi;
        }
    }
    acc
}

/// Result of a ratio minimization: the optimal ratio, a point attaining it,
/// and the full engine trace with the minimizer behind each iterate.
pub struct MinRatioResult {
    pub delta_star: Scalar,
    pub witness: Vec<bool>,
    pub iterations: usize,
    pub result: NewtonResult,
    /// The domain point behind each trace record, index-aligned.
    pub iterate_minimizers: Vec<Vec<bool>>,
}

struct RatioStep {
    x: Vec<bool>,
    reply: OracleReply,
}

struct RatioOracle<'a, O: ?Sized> {
    oracle: &'a O,
    c: &'a [Scalar],
    d: &'a [Scalar],
    cfg: &'a NewtonConfig,
    history: Vec<RatioStep>,
    initial: Option<(Scalar, RatioStep)>,
    violation: Option<String>,
}

impl<O: DiscreteDomainOracle + ?Sized> RatioOracle<'_, O> {
    /// One raw evaluation: query the oracle at `c − δd` and validate the
    /// denominator. `f = wᵀx` and the supergradient is `−dᵀx`.
    fn probe(&self, delta: &Scalar) -> Result<RatioStep, FracError> {
        let w: Vec<Scalar> = self
            .c
            .iter()
            .zip(self.d)
            .map(|(ci, di)| ci - &(delta * di))
            .collect();
        let x = self.oracle.argmin(&w, self.d);
        if x.len() != self.c.len() {
            return Err(FracError::DimensionMismatch);
        }
        let denom = dot(self.d, &x);
        if sign(&denom, &self.cfg.tol) != Sign::Pos {
            return Err(FracError::DomainViolation(format!(
                "denominator value {denom} at trial ratio {delta}"
            )));
        }
        let value = dot(&w, &x);
        Ok(RatioStep { x, reply: OracleReply::Finite { value, supergradient: -denom } })
    }
}

impl<O: DiscreteDomainOracle + ?Sized> ConcaveOracle for RatioOracle<'_, O> {
    fn eval(&mut self, delta: &Scalar) -> Result<OracleReply, NewtonError> {
        if let Some((at, step)) = self.initial.take() {
            debug_assert_eq!(at.total_cmp(delta), Ordering::Equal);
            let reply = step.reply.clone();
            self.history.push(step);
            return Ok(reply);
        }
        match self.probe(delta) {
            Ok(step) => {
                let reply = step.reply.clone();
                self.history.push(step);
                Ok(reply)
            }
            Err(e) => {
                let msg = e.to_string();
                self.violation = Some(msg.clone());
                Err(NewtonError::OracleFailure(msg))
            }
        }
    }

    fn discard_last(&mut self) {
        self.history.pop();
    }
}

/// Minimize `cᵀx/dᵀx` over the oracle's domain.
///
/// The first trial ratio is `(max|c_i|·m)/(min positive d_j) + 1`, which
/// already forces a negative value when every coordinate of `d` is
/// positive; for mixed-sign `d` the bound can fall short, so it is doubled
/// until the value goes negative (each attempt is one extra oracle call,
/// not an engine iterate).
pub fn min_ratio<O: DiscreteDomainOracle + ?Sized>(
    c: &[Scalar],
    d: &[Scalar],
    oracle: &O,
    cfg: &NewtonConfig,
) -> Result<MinRatioResult, FracError> {
    let m = oracle.dimension();
    if m == 0 {
        return Err(FracError::EmptyDomain);
    }
    if c.len() != m || d.len() != m {
        return Err(FracError::DimensionMismatch);
    }
    let mode = c[0].mode();
    let one = Scalar::one(mode);

    let max_abs_c = c
        .iter()
        .map(|ci| ci.abs())
        .max_by(|a, b| a.total_cmp(b))
        .expect("m ≥ 1");
    let min_pos_d = d
        .iter()
        .filter(|di| di.total_cmp(&Scalar::zero(mode)) == Ordering::Greater)
        .min_by(|a, b| a.total_cmp(b))
        .cloned()
        .unwrap_or_else(|| one.clone());
    let mut delta1 = &(&(&max_abs_c * &Scalar::from_int(m as i64, mode)) / &min_pos_d) + &one;

    let mut ro = RatioOracle {
        oracle,
        c,
        d,
        cfg,
        history: Vec::new(),
        initial: None,
        violation: None,
    };

    let mut first = ro.probe(&delta1)?;
    let mut widenings = 0;
    while matches!(&first.reply, OracleReply::Finite { value, .. } if sign(value, &cfg.tol) == Sign::Pos)
    {
        widenings += 1;
        if widenings > 200 {
            return Err(FracError::NoRootUnexpected(
                "the value stayed positive under repeated widening of the trial ratio".into(),
            ));
        }
        delta1 = &delta1 + &delta1;
        first = ro.probe(&delta1)?;
    }
    let g1 = match &first.reply {
        OracleReply::Finite { supergradient, .. } => supergradient.clone(),
        OracleReply::NegInf => unreachable!("probe always returns finite replies"),
    };
    ro.initial = Some((delta1.clone(), first));

    let result = solve_root(&mut ro, &delta1, &g1, cfg).map_err(|e| {
        match ro.violation.take() {
            Some(msg) => FracError::DomainViolation(msg),
            None => FracError::Engine(e),
        }
    })?;

    let mut history = ro.history;
    match result.outcome.clone() {
        NewtonOutcome::Root { delta } => {
            assert_eq!(history.len(), result.trace.len(), "oracle steps must match the trace");
            let witness = history.last().expect("a root has a final iterate").x.clone();
            if mode == ArithMode::Rational {
                let num = dot(c, &witness);
                let den = dot(d, &witness);
                assert_eq!(
                    num.total_cmp(&(&delta * &den)),
                    Ordering::Equal,
                    "the witness attains the optimal ratio exactly"
                );
            }
            Ok(MinRatioResult {
                delta_star: delta,
                witness,
                iterations: result.iterations(),
                iterate_minimizers: history.iter().map(|s| s.x.clone()).collect(),
                result,
            })
        }
        NewtonOutcome::NoRoot { witness_delta, .. } => {
            if history.len() > result.trace.len() {
                history.pop();
            }
            Err(FracError::NoRootUnexpected(format!(
                "stalled at trial ratio {witness_delta}; the domain oracle is not behaving \
                 like a linear minimizer"
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use crate::newton::Method;

    fn ints(vals: &[i64]) -> Vec<Scalar> {
        vals.iter().map(|&v| Scalar::int(v)).collect()
    }

    fn brute_force(domain: &ExplicitDomain, c: &[Scalar], d: &[Scalar]) -> Scalar {
        domain
            .members()
            .iter()
            .map(|x| &dot(c, x) / &dot(d, x))
            .min_by(|a, b| a.total_cmp(b))
            .expect("domain nonempty")
    }

    #[test]
    fn subset_oracle_scans_with_tie_breaks() {
        let dom = make_subset_oracle(2, |x| x.iter().any(|&b| b)).unwrap();
        let pick = dom.argmin(&ints(&[1, 1]), &ints(&[1, 2]));
        assert_eq!(pick, vec![false, true]);

        let dom = make_subset_oracle(1, |x| x[0]).unwrap();
        assert_eq!(dom.argmin(&ints(&[7]), &ints(&[1])), vec![true]);

        let family = [vec![true, true, false], vec![true, false, true], vec![false, true, true]];
        let dom = ExplicitDomain::new(3, family.to_vec()).unwrap();
        assert_eq!(dom.argmin(&ints(&[0, 0, 1]), &ints(&[1, 1, 1])), vec![true, true, false]);
    }

    #[test]
    fn oracle_construction_guards() {
        assert!(matches!(make_subset_oracle(3, |_| false), Err(FracError::EmptyDomain)));
        assert!(matches!(make_subset_oracle(21, |_| true), Err(FracError::DomainTooLarge { m: 21 })));
        assert!(matches!(
            ExplicitDomain::new(2, vec![vec![true]]),
            Err(FracError::DimensionMismatch)
        ));
    }

    #[test]
    fn two_point_domain() {
        let dom = ExplicitDomain::new(2, vec![vec![true, false], vec![false, true]]).unwrap();
        let out =
            min_ratio(&ints(&[3, 2]), &ints(&[1, 2]), &dom, &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::int(1));
        assert_eq!(out.witness, vec![false, true]);
        // The engine stops exactly on the root.
        let last = out.result.trace.last().unwrap();
        assert_eq!(last.value, Scalar::int(0));
    }

    #[test]
    fn singleton_domain() {
        let dom = ExplicitDomain::new(1, vec![vec![true]]).unwrap();
        let out = min_ratio(&ints(&[5]), &ints(&[2]), &dom, &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::ratio(5, 2));
    }

    #[test]
    fn nonempty_subsets_domain() {
        let dom = make_subset_oracle(3, |x| x.iter().any(|&b| b)).unwrap();
        let out =
            min_ratio(&ints(&[1, 2, 6]), &ints(&[1, 1, 1]), &dom, &NewtonConfig::default())
                .unwrap();
        assert_eq!(out.delta_star, Scalar::int(1));
        assert_eq!(out.witness, vec![true, false, false]);
    }

    #[test]
    fn nonpositive_denominator_is_reported() {
        let dom = ExplicitDomain::new(1, vec![vec![true]]).unwrap();
        let err = min_ratio(&ints(&[5]), &ints(&[0]), &dom, &NewtonConfig::default());
        assert!(matches!(err, Err(FracError::DomainViolation(_))));
    }

    #[test]
    fn mixed_sign_denominator_still_converges() {
        // dᵀx > 0 on the domain even though d has a negative coordinate, so
        // the first trial ratio may need widening.
        let dom = ExplicitDomain::new(2, vec![vec![true, true]]).unwrap();
        let out =
            min_ratio(&ints(&[7, 0]), &ints(&[3, -2]), &dom, &NewtonConfig::default()).unwrap();
        assert_eq!(out.delta_star, Scalar::int(7));
    }

    #[test]
    fn matches_brute_force_on_random_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f12a);
        for round in 0..120 {
            let m = rng.gen_range(1..=6);
            let mut members = Vec::new();
            for mask in 1u32..(1 << m) {
                if rng.gen_bool(0.5) {
                    members.push((0..m).map(|i| mask >> i & 1 == 1).collect::<Vec<bool>>());
                }
            }
            if members.is_empty() {
                members.push(vec![true; m]);
            }
            let dom = ExplicitDomain::new(m, members).unwrap();
            let c: Vec<Scalar> = (0..m).map(|_| Scalar::int(rng.gen_range(-9..=9))).collect();
            let d: Vec<Scalar> = (0..m).map(|_| Scalar::int(rng.gen_range(1..=5))).collect();

            let fast = min_ratio(&c, &d, &dom, &NewtonConfig::default()).unwrap();
            let slow = min_ratio(
                &c,
                &d,
                &dom,
                &NewtonConfig::with_method(Method::Standard),
            )
            .unwrap();
            let expected = brute_force(&dom, &c, &d);
            assert_eq!(fast.delta_star, expected, "round {round}");
            assert_eq!(slow.delta_star, expected, "round {round}");
            assert!(
                fast.iterations <= slow.iterations,
                "round {round}: look-ahead took {} iterates, plain took {}",
                fast.iterations,
                slow.iterations
            );
            let bound = 8.0 * m as f64 * (1.0 + (m as f64).log2());
            assert!(
                (fast.iterations as f64) <= bound,
                "round {round}: {} iterates exceeds {bound}",
                fast.iterations
            );
            assert_eq!(fast.iterate_minimizers.len(), fast.result.trace.len());
        }
    }

    #[test]
    fn residual_identity_along_the_trace() {
        // At every iterate, the gap between the current model and the root
        // equals the optimal-ratio residual of that iterate's minimizer:
        // f_i + g_i·(δ* − δ_i) = (c − δ*d)ᵀx_i.
        let dom = make_subset_oracle(4, |x| x.iter().any(|&b| b)).unwrap();
        let c = ints(&[3, -1, 4, 2]);
        let d = ints(&[2, 1, 3, 1]);
        let out = min_ratio(&c, &d, &dom, &NewtonConfig::default()).unwrap();
        let delta_star = &out.delta_star;
        for (rec, x) in out.result.trace.iter().zip(&out.iterate_minimizers) {
            let lhs = &rec.value + &(&rec.gradient * &(delta_star - &rec.delta));
            let rhs = &dot(&c, x) - &(delta_star * &dot(&d, x));
            assert_eq!(lhs.total_cmp(&rhs), Ordering::Equal);
        }
    }
}
