//! Exact linear-inequality feasibility by variable elimination.
//!
//! This is the independent referee for the graph-based solvers: a dense
//! system `A·y ≤ b` over exact rationals, decided by eliminating one
//! variable at a time (combining every positive-coefficient row with every
//! negative-coefficient one). Rows are normalized by their largest absolute
//! coefficient and deduplicated keeping the tightest right-hand side, which
//! keeps the method comfortably small on the two-variable-per-row systems it
//! referees — combinations of such rows never involve more than two
//! variables.
//!
//! Besides the verdict, the module projects single coordinates to exact
//! intervals and constructs explicit feasible points by back-substitution
//! through the elimination stages, so callers can cross-check not only
//! "feasible?" but also claimed optima and recovered assignments.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug, PartialEq)]
struct FmRow {
    coeffs: Vec<BigRational>,
    rhs: BigRational,
}

#[derive(Clone, Debug)]
pub struct FmSystem {
    num_vars: usize,
    rows: Vec<FmRow>,
    /// Set when a contradictory constant row (`0 ≤ rhs < 0`) was added.
    sterile: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FmProjection {
    Infeasible,
    /// Exact bounds on the coordinate; `None` means unbounded on that side.
    Interval { lower: Option<BigRational>, upper: Option<BigRational> },
}

impl FmSystem {
    pub fn new(num_vars: usize) -> Self {
        FmSystem { num_vars, rows: Vec::new(), sterile: false }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Add `coeffs·y ≤ rhs`.
    pub fn add_row(&mut self, coeffs: Vec<BigRational>, rhs: BigRational) {
        assert_eq!(coeffs.len(), self.num_vars, "row width must match variable count");
        if coeffs.iter().all(|c| c.is_zero()) {
            if rhs.is_negative() {
                self.sterile = true;
            }
            return;
        }
        self.rows.push(FmRow { coeffs, rhs });
    }

    /// Convenience for sparse rows: `(var, coeff)` pairs.
    pub fn add_sparse_row(&mut self, entries: &[(usize, BigRational)], rhs: BigRational) {
        let mut coeffs = vec![BigRational::zero(); self.num_vars];
        for (var, c) in entries {
            coeffs[*var] = &coeffs[*var] + c;
        }
        self.add_row(coeffs, rhs);
    }

    pub fn is_feasible(&self) -> bool {
        if self.sterile {
            return false;
        }
        let mut sys = self.normalized();
        for var in 0..self.num_vars {
            sys = match sys.eliminated(var) {
                Some(next) => next,
                None => return false,
            };
        }
        true
    }

    /// Exact range of `y[var]` over the feasible region.
    pub fn project(&self, var: usize) -> FmProjection {
        assert!(var < self.num_vars, "projected variable out of range");
        if self.sterile {
            return FmProjection::Infeasible;
        }
        let mut sys = self.normalized();
        for other in 0..self.num_vars {
            if other == var {
                continue;
            }
            sys = match sys.eliminated(other) {
                Some(next) => next,
                None => return FmProjection::Infeasible,
            };
        }
        let (lower, upper) = sys.single_var_bounds(var);
        if let (Some(lo), Some(hi)) = (&lower, &upper) {
            if lo > hi {
                return FmProjection::Infeasible;
            }
        }
        FmProjection::Interval { lower, upper }
    }

    /// An explicit feasible point, or `None` when the system is infeasible.
    ///
    /// Variables are fixed in reverse elimination order, each to its upper
    /// bound when finite, else its lower bound, else zero.
    pub fn sample_point(&self) -> Option<Vec<BigRational>> {
        if self.sterile {
            return None;
        }
        let mut stages = Vec::with_capacity(self.num_vars);
        let mut sys = self.normalized();
        for var in 0..self.num_vars {
            stages.push(sys.clone());
            sys = sys.eliminated(var)?;
        }
        let mut point = vec![BigRational::zero(); self.num_vars];
        for var in (0..self.num_vars).rev() {
            // In stage `var`, variables 0..var are gone; var+1.. are fixed.
            let stage = &stages[var];
            let mut lower: Option<BigRational> = None;
            let mut upper: Option<BigRational> = None;
            for row in &stage.rows {
                let a = &row.coeffs[var];
                if a.is_zero() {
                    continue;
                }
                let mut rest = row.rhs.clone();
                for later in var + 1..self.num_vars {
                    rest -= &row.coeffs[later] * &point[later];
                }
                let bound = rest / a;
                if a.is_positive() {
                    upper = Some(match upper {
                        Some(u) if u <= bound => u,
                        _ => bound,
                    });
                } else {
                    lower = Some(match lower {
                        Some(l) if l >= bound => l,
                        _ => bound,
                    });
                }
            }
            if let (Some(lo), Some(hi)) = (&lower, &upper) {
                assert!(lo <= hi, "elimination guarantees a nonempty interval");
            }
            point[var] = upper.or(lower).unwrap_or_else(BigRational::zero);
        }
        Some(point)
    }

    /// Check a candidate assignment against every stored row.
    pub fn satisfied_by(&self, point: &[BigRational]) -> bool {
        assert_eq!(point.len(), self.num_vars);
        !self.sterile
            && self.rows.iter().all(|row| {
                let lhs: BigRational = row
                    .coeffs
                    .iter()
                    .zip(point)
                    .map(|(c, y)| c * y)
                    .fold(BigRational::zero(), |acc, t| acc + t);
                lhs <= row.rhs
            })
    }

    /// Scale every row so its largest absolute coefficient is one, then drop
    /// duplicates keeping the smallest right-hand side.
    fn normalized(&self) -> FmSystem {
        let mut best: BTreeMap<Vec<BigRational>, BigRational> = BTreeMap::new();
        let mut sterile = self.sterile;
        for row in &self.rows {
            let scale = row
                .coeffs
                .iter()
                .map(|c| c.abs())
                .max()
                .expect("rows are nonempty");
            if scale.is_zero() {
                if row.rhs.is_negative() {
                    sterile = true;
                }
                continue;
            }
            let coeffs: Vec<BigRational> = row.coeffs.iter().map(|c| c / &scale).collect();
            let rhs = &row.rhs / &scale;
            best.entry(coeffs)
                .and_modify(|cur| {
                    if rhs < *cur {
                        *cur = rhs.clone();
                    }
                })
                .or_insert(rhs);
        }
        FmSystem {
            num_vars: self.num_vars,
            rows: best.into_iter().map(|(coeffs, rhs)| FmRow { coeffs, rhs }).collect(),
            sterile,
        }
    }

    /// Eliminate one variable; `None` signals a contradictory constant row.
    fn eliminated(&self, var: usize) -> Option<FmSystem> {
        let mut next = FmSystem::new(self.num_vars);
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for row in &self.rows {
            let a = &row.coeffs[var];
            if a.is_zero() {
                next.add_row(row.coeffs.clone(), row.rhs.clone());
            } else if a.is_positive() {
                pos.push(row);
            } else {
                neg.push(row);
            }
        }
        for p in &pos {
            let pa = &p.coeffs[var];
            for n in &neg {
                let na = &n.coeffs[var]; // negative
                let coeffs: Vec<BigRational> = p
                    .coeffs
                    .iter()
                    .zip(&n.coeffs)
                    .map(|(pc, nc)| pc / pa - nc / na)
                    .collect();
                let rhs = &p.rhs / pa - &n.rhs / na;
                next.add_row(coeffs, rhs);
            }
        }
        if next.sterile {
            return None;
        }
        Some(next.normalized())
    }

    fn single_var_bounds(&self, var: usize) -> (Option<BigRational>, Option<BigRational>) {
        let mut lower: Option<BigRational> = None;
        let mut upper: Option<BigRational> = None;
        for row in &self.rows {
            let a = &row.coeffs[var];
            debug_assert!(
                row.coeffs.iter().enumerate().all(|(i, c)| i == var || c.is_zero()),
                "all other variables must be eliminated"
            );
            if a.is_zero() {
                continue;
            }
            let bound = &row.rhs / a;
            if a.is_positive() {
                upper = Some(match upper {
                    Some(u) if u <= bound => u,
                    _ => bound,
                });
            } else {
                lower = Some(match lower {
                    Some(l) if l >= bound => l,
                    _ => bound,
                });
            }
        }
        (lower, upper)
    }
}

/// Rational from an integer, for terse test and caller code.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational `n/d`.
pub fn ratq(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}
