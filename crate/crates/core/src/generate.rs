//! Seeded random instance generators for differential testing.
//!
//! Every generator takes a caller-owned RNG so suites are reproducible from
//! a single seed. Sizes and value ranges default to "desk scale": small
//! enough for exhaustive reference oracles (variable elimination, policy
//! enumeration, subset scans) to stay fast, rich enough to hit the
//! interesting regimes (unit-gain cycles, unbounded coordinates, ties).

use rand::Rng;

use crate::dmdp::DmdpInstance;
use crate::fraccomb::ExplicitDomain;
use crate::gaingraph::GainGraph;
use crate::m2vpi::Tvpi2System;
use crate::numerics::{ArithMode, Scalar};
use crate::sfm::{
    CutFn, PartitionMatroidRank, SetMask, SubmodularFn, UniformMatroidRank, WeightedCoverage,
};

fn gamma_choices() -> [Scalar; 5] {
    [
        Scalar::ratio(1, 3),
        Scalar::ratio(1, 2),
        Scalar::int(1),
        Scalar::int(2),
        Scalar::int(3),
    ]
}

/// Random monotone two-variable system: up to `max_n` nodes, up to `max_m`
/// arcs, factors from {1/3, 1/2, 1, 2, 3}, integer costs in [−5, 5].
pub fn random_m2vpi(rng: &mut impl Rng, max_n: usize, max_m: usize) -> GainGraph {
    let n = rng.gen_range(1..=max_n);
    let m = rng.gen_range(0..=max_m);
    let gammas = gamma_choices();
    let mut g = GainGraph::new(ArithMode::Rational, n);
    for _ in 0..m {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let gamma = gammas[rng.gen_range(0..gammas.len())].clone();
        let cost = Scalar::int(rng.gen_range(-5..=5));
        g.add_arc(u, v, gamma, cost).expect("factors are positive");
    }
    g
}

/// Random general two-variable system with small integer coefficients.
/// Mixes two-variable, single-variable, and constant rows (the latter are
/// occasionally infeasible on their own), plus repeated-variable rows.
pub fn random_2vpi(rng: &mut impl Rng, max_n: usize) -> Tvpi2System {
    let n = rng.gen_range(1..=max_n);
    let rows = rng.gen_range(0..=2 * n + 1);
    let mut sys = Tvpi2System::new(ArithMode::Rational, n);
    for _ in 0..rows {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let c = Scalar::int(rng.gen_range(-5..=5));
        let nonzero = |rng: &mut dyn rand::RngCore| {
            let x: i64 = rng.gen_range(1..=3);
            if rng.gen_bool(0.5) {
                x
            } else {
                -x
            }
        };
        match rng.gen_range(0..10) {
            0 => sys.add_row(Scalar::int(0), u, Scalar::int(0), v, c),
            1 | 2 => sys.add_row(Scalar::int(nonzero(rng)), u, Scalar::int(0), v, c),
            _ => sys.add_row(Scalar::int(nonzero(rng)), u, Scalar::int(nonzero(rng)), v, c),
        }
    }
    sys
}

fn discount_choices() -> [Scalar; 6] {
    [
        Scalar::ratio(1, 4),
        Scalar::ratio(1, 3),
        Scalar::ratio(1, 2),
        Scalar::ratio(2, 3),
        Scalar::ratio(3, 4),
        Scalar::int(1),
    ]
}

/// Random deterministic MDP: up to `max_n` nodes, out-degrees in
/// `1..=max_out`, discounts from a small rational menu including 1,
/// integer costs in [−5, 5]. Unit-discount negative cycles arise naturally,
/// so both verdicts occur.
pub fn random_dmdp(rng: &mut impl Rng, max_n: usize, max_out: usize) -> DmdpInstance {
    let n = rng.gen_range(1..=max_n);
    let discounts = discount_choices();
    let mut g = GainGraph::new(ArithMode::Rational, n);
    for u in 0..n {
        let degree = rng.gen_range(1..=max_out);
        for _ in 0..degree {
            let v = rng.gen_range(0..n);
            let gamma = discounts[rng.gen_range(0..discounts.len())].clone();
            let cost = Scalar::int(rng.gen_range(-5..=5));
            g.add_arc(u, v, gamma, cost).expect("discounts are positive");
        }
    }
    DmdpInstance::new(g).expect("every node was given an action")
}

/// Deterministic MDP with a planted unit-discount cycle of negative total
/// cost, padded with random arcs so every node keeps an action.
pub fn dmdp_with_negative_unit_cycle(
    rng: &mut impl Rng,
    max_n: usize,
    max_out: usize,
) -> DmdpInstance {
    let n = rng.gen_range(1..=max_n);
    let len = rng.gen_range(1..=n);
    // Cycle over a random selection of `len` distinct nodes.
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let j = rng.gen_range(i..n);
        nodes.swap(i, j);
    }
    nodes.truncate(len);
    let mut g = GainGraph::new(ArithMode::Rational, n);
    let mut total = 0i64;
    for i in 0..len {
        let last = i + 1 == len;
        let cost = if last {
            -total - rng.gen_range(1..=3)
        } else {
            let c = rng.gen_range(-3..=3);
            total += c;
            c
        };
        g.add_arc(nodes[i], nodes[(i + 1) % len], Scalar::int(1), Scalar::int(cost))
            .expect("unit discounts are positive");
    }
    let discounts = discount_choices();
    for u in 0..n {
        let extra = if nodes.contains(&u) { rng.gen_range(0..max_out) } else { rng.gen_range(1..=max_out) };
        for _ in 0..extra {
            let v = rng.gen_range(0..n);
            let gamma = discounts[rng.gen_range(0..discounts.len())].clone();
            let cost = Scalar::int(rng.gen_range(-5..=5));
            g.add_arc(u, v, gamma, cost).expect("discounts are positive");
        }
    }
    DmdpInstance::new(g).expect("every node was given an action")
}

/// Random ratio-minimization instance: an explicit nonempty 0/1 domain of
/// at most `max_points` nonzero vectors over `max_m` coordinates, integer
/// numerator weights in [−9, 9], positive integer denominator weights.
pub fn random_min_ratio(
    rng: &mut impl Rng,
    max_m: usize,
    max_points: usize,
) -> (ExplicitDomain, Vec<Scalar>, Vec<Scalar>) {
    let m = rng.gen_range(1..=max_m);
    let count = rng.gen_range(1..=max_points);
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let mask = rng.gen_range(1u32..(1u32 << m));
        members.push((0..m).map(|i| mask >> i & 1 == 1).collect::<Vec<bool>>());
    }
    let domain = ExplicitDomain::new(m, members).expect("at least one point");
    let c: Vec<Scalar> = (0..m).map(|_| Scalar::int(rng.gen_range(-9..=9))).collect();
    let d: Vec<Scalar> = (0..m).map(|_| Scalar::int(rng.gen_range(1..=5))).collect();
    (domain, c, d)
}

/// Random nonnegative submodular function from the stock families (cut,
/// uniform/partition matroid rank, weighted coverage) plus a direction
/// vector with at least one positive coordinate.
pub fn random_sfm(rng: &mut impl Rng, max_n: usize) -> (Box<dyn SubmodularFn>, Vec<Scalar>) {
    let n = rng.gen_range(1..=max_n);
    let h: Box<dyn SubmodularFn> = match rng.gen_range(0..4) {
        0 => {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.6) {
                        edges.push((u, v, Scalar::int(rng.gen_range(0..=4))));
                    }
                }
            }
            Box::new(CutFn::new(n, edges).expect("weights are nonnegative"))
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
            Box::new(PartitionMatroidRank::new(n, blocks).expect("blocks partition the ground set"))
        }
        _ => {
            let points = rng.gen_range(1..=5);
            let weights: Vec<Scalar> =
                (0..points).map(|_| Scalar::int(rng.gen_range(0..=3))).collect();
            let covers: Vec<Vec<usize>> = (0..n)
                .map(|_| (0..points).filter(|_| rng.gen_bool(0.5)).collect())
                .collect();
            Box::new(WeightedCoverage::new(covers, weights).expect("weights are nonnegative"))
        }
    };
    let mut a: Vec<Scalar> = (0..n).map(|_| Scalar::int(rng.gen_range(-3..=5))).collect();
    let zero = Scalar::int(0);
    if !a.iter().any(|ai| ai.total_cmp(&zero) == std::cmp::Ordering::Greater) {
        a[0] = Scalar::int(1);
    }
    (h, a)
}
