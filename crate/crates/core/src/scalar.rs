//! Scalar field abstraction shared by every module.
//!
//! Two concrete fields are supported: [`Rational`] (arbitrary precision, exact
//! comparisons) and `f64` (comparisons against an absolute tolerance that the
//! caller supplies). Everything above this module is generic over [`Scalar`],
//! so classical and hand-built rational theories run exactly while polygon
//! theories, whose coordinates involve cos/sin, run in floating point.

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary precision rational number used in exact mode.
pub type Rational = BigRational;

/// Default absolute tolerance for float-mode comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Which arithmetic a value (or a whole theory) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    Exact,
    Float,
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: ScalarMode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// `num / den`; panics on a zero denominator.
    fn from_ratio(num: i64, den: i64) -> Self;
    /// Exact conversion of the binary value of `v` in exact mode.
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Sign of `self` where anything within `tol` of zero counts as zero.
    /// Exact scalars ignore `tol`.
    fn sign_tol(&self, tol: f64) -> Ordering;

    fn is_zero_tol(&self, tol: f64) -> bool {
        self.sign_tol(tol) == Ordering::Equal
    }

    fn is_exact() -> bool {
        Self::MODE == ScalarMode::Exact
    }

    /// Parses either a decimal literal or a `p/q` rational literal.
    fn parse_literal(s: &str) -> Option<Self>;
}

/// `a` compared with `b` under tolerance.
pub fn cmp_tol<S: Scalar>(a: &S, b: &S, tol: f64) -> Ordering {
    (a.clone() - b.clone()).sign_tol(tol)
}

pub fn approx_eq<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) == Ordering::Equal
}

/// `a <= b` up to tolerance.
pub fn approx_le<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) != Ordering::Greater
}

/// `a >= b` up to tolerance.
pub fn approx_ge<S: Scalar>(a: &S, b: &S, tol: f64) -> bool {
    cmp_tol(a, b, tol) != Ordering::Less
}

/// Larger of two scalars (exact order for rationals, plain order for floats).
pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if (b.clone() - a.clone()).sign_tol(0.0) == Ordering::Greater {
        b
    } else {
        a
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if (b.clone() - a.clone()).sign_tol(0.0) == Ordering::Less {
        b
    } else {
        a
    }
}

impl Scalar for f64 {
    const MODE: ScalarMode = ScalarMode::Float;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sign_tol(&self, tol: f64) -> Ordering {
        if *self > tol {
            Ordering::Greater
        } else if *self < -tol {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            if q == 0.0 {
                return None;
            }
            Some(p / q)
        } else {
            s.parse().ok()
        }
    }
}

impl Scalar for Rational {
    const MODE: ScalarMode = ScalarMode::Exact;

    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("finite float")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn sign_tol(&self, _tol: f64) -> Ordering {
        if self.is_positive() {
            Ordering::Greater
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
    fn parse_literal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            return Some(BigRational::new(p, q));
        }
        if let Ok(i) = s.parse::<BigInt>() {
            return Some(BigRational::from_integer(i));
        }
        // Finite decimal literal, read exactly: "0.25" -> 1/4.
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (int_part, frac_part) = body.split_once('.')?;
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac_part.len());
        let r = BigRational::new(digits, den);
        Some(if neg { -r } else { r })
    }
}

/// Converts between scalar fields (rational -> float is lossy).
pub fn convert<A: Scalar, B: Scalar>(a: &A) -> B {
    if A::MODE == B::MODE {
        // Same field: route through the exact literal to avoid precision loss.
        B::parse_literal(&a.to_string()).unwrap_or_else(|| B::from_f64(a.to_f64()))
    } else {
        B::from_f64(a.to_f64())
    }
}

pub fn convert_vec<A: Scalar, B: Scalar>(v: &[A]) -> Vec<B> {
    v.iter().map(convert).collect()
}
