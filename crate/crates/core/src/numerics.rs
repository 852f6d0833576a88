//! Arithmetic substrate shared by every solver in this crate.
//!
//! All solver code is written against [`Scalar`], which is either an exact
//! arbitrary-precision rational (the reference mode: comparisons are exact and
//! runs are bit-for-bit reproducible) or an `f64` governed by an explicit
//! [`Tolerance`]. The two modes never mix inside one computation; mixing them
//! in an arithmetic operation is a programming error and panics.
//!
//! [`ExtScalar`] adjoins `+∞` to the scalar field for node labels. `−∞` never
//! appears in labels; where the root-finding engine needs "value is −∞" it is
//! encoded structurally in the oracle reply instead. `PosInf − PosInf` is
//! likewise unrepresentable here on purpose: the only extended operations
//! provided are the ones the solvers actually need (`c + γ·y` and order
//! comparisons), each with an explicit rule for the infinite case.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Which arithmetic backend a computation runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithMode {
    /// Exact normalized rationals (arbitrary precision). Deterministic.
    Rational,
    /// IEEE-754 doubles, compared through [`Tolerance`].
    Float,
}

/// Sign of a scalar under the active tolerance regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

/// Comparison tolerances. Both fields are ignored in rational mode.
///
/// `eps_zero` drives zero tests of function values (`sign`); `eps_cmp` drives
/// label comparisons such as the violated-arc test. Defaults are `1e-9`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub eps_zero: f64,
    pub eps_cmp: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { eps_zero: 1e-9, eps_cmp: 1e-9 }
    }
}

impl Tolerance {
    pub fn new(eps_zero: f64, eps_cmp: f64) -> Self {
        Tolerance { eps_zero, eps_cmp }
    }

    /// Tolerance with both epsilons set to `eps`.
    pub fn uniform(eps: f64) -> Self {
        Tolerance { eps_zero: eps, eps_cmp: eps }
    }
}

/// A number in one of the two arithmetic modes.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Float(f64),
}

impl Scalar {
    /// Exact integer in rational mode.
    pub fn int(v: i64) -> Self {
        Scalar::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    /// Exact ratio `p/q` in rational mode. Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Scalar::Rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn float(v: f64) -> Self {
        Scalar::Float(v)
    }

    /// Additive identity of `mode`.
    pub fn zero(mode: ArithMode) -> Self {
        match mode {
            ArithMode::Rational => Scalar::Rational(BigRational::zero()),
            ArithMode::Float => Scalar::Float(0.0),
        }
    }

    /// Multiplicative identity of `mode`.
    pub fn one(mode: ArithMode) -> Self {
        match mode {
            ArithMode::Rational => Scalar::Rational(BigRational::one()),
            ArithMode::Float => Scalar::Float(1.0),
        }
    }

    pub fn from_int(v: i64, mode: ArithMode) -> Self {
        match mode {
            ArithMode::Rational => Scalar::int(v),
            ArithMode::Float => Scalar::Float(v as f64),
        }
    }

    pub fn mode(&self) -> ArithMode {
        match self {
            Scalar::Rational(_) => ArithMode::Rational,
            Scalar::Float(_) => ArithMode::Float,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Float(_) => None,
        }
    }

    /// Approximate f64 value (exact in float mode).
    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or_else(|| {
                // Fall back to a quotient of approximations for huge operands.
                let n = r.numer().to_f64().unwrap_or(f64::MAX);
                let d = r.denom().to_f64().unwrap_or(f64::MAX);
                n / d
            }),
            Scalar::Float(v) => *v,
        }
    }

    /// Total order on same-mode scalars. Panics on mixed modes or NaN.
    pub fn total_cmp(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => {
                a.partial_cmp(b).expect("NaN in scalar comparison")
            }
            _ => panic!("mixed-mode scalar comparison"),
        }
    }

    pub fn min_of(self, other: Scalar) -> Scalar {
        if self.total_cmp(&other) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Float(v) => Scalar::Float(v.abs()),
        }
    }

    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => {
                assert!(!r.is_zero(), "reciprocal of zero");
                Scalar::Rational(r.recip())
            }
            Scalar::Float(v) => Scalar::Float(1.0 / v),
        }
    }

    /// Parse a literal: `p/q` or integer `p` (rational mode), any decimal or
    /// `p/q` (float mode; the quotient is evaluated in floating point).
    /// Decimal literals are accepted in rational mode and converted exactly.
    pub fn parse(text: &str, mode: ArithMode) -> Result<Scalar, String> {
        let text = text.trim();
        match mode {
            ArithMode::Rational => {
                if let Some((p, q)) = text.split_once('/') {
                    let p: BigInt =
                        p.trim().parse().map_err(|_| format!("bad numerator `{p}`"))?;
                    let q: BigInt =
                        q.trim().parse().map_err(|_| format!("bad denominator `{q}`"))?;
                    if q.is_zero() {
                        return Err(format!("zero denominator in `{text}`"));
                    }
                    Ok(Scalar::Rational(BigRational::new(p, q)))
                } else if let Some((int, frac)) = text.split_once('.') {
                    // Exact decimal (e.g. `-0.25` → -1/4).
                    let neg = int.trim_start().starts_with('-');
                    let int_part: BigInt = if int.is_empty() || int == "-" {
                        BigInt::zero()
                    } else {
                        int.parse().map_err(|_| format!("bad decimal `{text}`"))?
                    };
                    if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(format!("bad decimal `{text}`"));
                    }
                    let frac_num: BigInt =
                        frac.parse().map_err(|_| format!("bad decimal `{text}`"))?;
                    let den = BigInt::from(10u32).pow(frac.len() as u32);
                    let mag = int_part.abs() * &den + frac_num;
                    let signed = if neg { -mag } else { mag };
                    Ok(Scalar::Rational(BigRational::new(signed, den)))
                } else {
                    let p: BigInt = text.parse().map_err(|_| format!("bad integer `{text}`"))?;
                    Ok(Scalar::Rational(BigRational::from_integer(p)))
                }
            }
            ArithMode::Float => {
                if let Some((p, q)) = text.split_once('/') {
                    let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator `{p}`"))?;
                    let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator `{q}`"))?;
                    if q == 0.0 {
                        return Err(format!("zero denominator in `{text}`"));
                    }
                    Ok(Scalar::Float(p / q))
                } else {
                    let v: f64 = text.parse().map_err(|_| format!("bad number `{text}`"))?;
                    Ok(Scalar::Float(v))
                }
            }
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(v) => write!(f, "{v}"),
        }
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Rational(a), Scalar::Rational(b)) => {
                        Scalar::Rational(a.$method(b))
                    }
                    (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a.$method(b)),
                    _ => panic!("mixed-mode scalar arithmetic"),
                }
            }
        }

        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }

        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(v) => Scalar::Float(-v),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

/// Sign of `x` with an explicit epsilon (float mode only; exact otherwise).
///
/// In float mode `x` counts as zero iff `|x| ≤ eps·max(1, |x|)`: absolute
/// tolerance for small magnitudes, never-zero for magnitudes above 1.
pub fn sign_eps(x: &Scalar, eps: f64) -> Sign {
    match x {
        Scalar::Rational(r) => {
            if r.is_zero() {
                Sign::Zero
            } else if r.is_positive() {
                Sign::Pos
            } else {
                Sign::Neg
            }
        }
        Scalar::Float(v) => {
            let a = v.abs();
            if a <= eps * a.max(1.0) {
                Sign::Zero
            } else if *v > 0.0 {
                Sign::Pos
            } else {
                Sign::Neg
            }
        }
    }
}

/// Sign of `x` under `tol.eps_zero`.
pub fn sign(x: &Scalar, tol: &Tolerance) -> Sign {
    sign_eps(x, tol.eps_zero)
}

/// A scalar extended with `+∞`, used for node labels.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtScalar {
    Finite(Scalar),
    PosInf,
}

impl ExtScalar {
    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            ExtScalar::Finite(s) => Some(s),
            ExtScalar::PosInf => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtScalar::Finite(_))
    }

    /// Clones the finite value; panics on `+∞` (programming error at the call
    /// sites that use it).
    pub fn expect_finite(&self) -> Scalar {
        match self {
            ExtScalar::Finite(s) => s.clone(),
            ExtScalar::PosInf => panic!("expected finite label, found +inf"),
        }
    }

    /// Total order with `+∞` greatest.
    pub fn total_cmp(&self, other: &ExtScalar) -> Ordering {
        match (self, other) {
            (ExtScalar::PosInf, ExtScalar::PosInf) => Ordering::Equal,
            (ExtScalar::PosInf, ExtScalar::Finite(_)) => Ordering::Greater,
            (ExtScalar::Finite(_), ExtScalar::PosInf) => Ordering::Less,
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for ExtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtScalar::Finite(s) => write!(f, "{s}"),
            ExtScalar::PosInf => write!(f, "inf"),
        }
    }
}

impl From<Scalar> for ExtScalar {
    fn from(s: Scalar) -> Self {
        ExtScalar::Finite(s)
    }
}

/// `c + γ·y` in extended arithmetic. Requires `γ > 0`; absorbs `+∞`.
pub fn ext_add_mul(c: &Scalar, gamma: &Scalar, y: &ExtScalar) -> ExtScalar {
    debug_assert!(
        sign_eps(gamma, 0.0) == Sign::Pos,
        "gain factors must be strictly positive"
    );
    match y {
        ExtScalar::PosInf => ExtScalar::PosInf,
        ExtScalar::Finite(v) => ExtScalar::Finite(c + &(gamma * v)),
    }
}

/// Sign of `a − b` in extended arithmetic without ever forming `∞ − ∞`:
/// two infinities compare equal, an infinity dominates any finite value.
pub fn ext_sign_diff(a: &ExtScalar, b: &ExtScalar, eps: f64) -> Sign {
    match (a, b) {
        (ExtScalar::PosInf, ExtScalar::PosInf) => Sign::Zero,
        (ExtScalar::PosInf, ExtScalar::Finite(_)) => Sign::Pos,
        (ExtScalar::Finite(_), ExtScalar::PosInf) => Sign::Neg,
        (ExtScalar::Finite(x), ExtScalar::Finite(y)) => sign_eps(&(x - y), eps),
    }
}
