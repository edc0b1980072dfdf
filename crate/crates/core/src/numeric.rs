//! Exact scalars.
//!
//! Three layers are provided:
//!
//! * [`Rational`], arbitrary-precision rationals (always in lowest terms),
//! * [`QuadScalar`], elements `a + b·√r` of a real quadratic field `Q(√r)`,
//! * [`Dual`], first-order infinitesimal extensions `v + e·ε` over either of
//!   the above, ordered lexicographically.
//!
//! Every predicate in the crate is decided with these types; floating point
//! only ever appears in `to_f64` display helpers.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Arbitrary-precision rational, normalized after every operation.
pub type Rational = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumericError {
    #[error("square root of negative integer {0}")]
    NegativeSqrt(BigInt),
    #[error("cannot parse {0:?} as a rational (expected \"p\" or \"p/q\")")]
    ParseRational(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
    #[error("radicand must be positive, got {0}")]
    NonPositiveRadicand(String),
}

/// Largest `s` with `s² ≤ m`.
pub fn isqrt(m: &BigInt) -> Result<BigInt, NumericError> {
    if m.is_negative() {
        return Err(NumericError::NegativeSqrt(m.clone()));
    }
    Ok(m.sqrt())
}

/// `floor(sqrt(q))` for a nonnegative rational.
pub(crate) fn floor_sqrt(q: &Rational) -> BigInt {
    debug_assert!(!q.is_negative());
    // floor(sqrt(q)) == floor(sqrt(floor(q))) for q >= 0.
    q.floor().to_integer().sqrt()
}

/// Rational square root when `q` is a perfect square of a rational.
pub(crate) fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| Rational::new(n, d))
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p"` or `"p/q"` (optional leading minus on `p`).
pub fn parse_rational(s: &str) -> Result<Rational, NumericError> {
    let t = s.trim();
    let bad = || NumericError::ParseRational(s.to_string());
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(NumericError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(n, d))
}

/// `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Only reached for magnitudes outside f64 range.
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Serde adapter carrying a [`Rational`] as a `"p/q"` string.
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(de::Error::custom)
    }
}

/// Ordered field operations needed by the grid and placement code.
///
/// Implemented by [`Rational`] (L1 and L∞ grids, where the grid unit is
/// rational) and by [`QuadScalar`] (L2 grids, unit `√(δ²/2)`).
pub trait Field:
    Clone
    + Ord
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(q: &Rational) -> Self;
    fn signum(&self) -> Ordering;
    fn floor_int(&self) -> BigInt;
    fn approx(&self) -> f64;
    fn to_quad(&self) -> QuadScalar;

    fn zero_value() -> Self {
        Self::from_rational(&Rational::zero())
    }

    fn from_int(v: i64) -> Self {
        Self::from_rational(&int(v))
    }

    fn scale(&self, k: i64) -> Self {
        self.clone() * Self::from_int(k)
    }

    fn magnitude(&self) -> Self {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Field for Rational {
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn signum(&self) -> Ordering {
        match self.numer().sign() {
            Sign::Minus => Ordering::Less,
            Sign::NoSign => Ordering::Equal,
            Sign::Plus => Ordering::Greater,
        }
    }

    fn floor_int(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    fn approx(&self) -> f64 {
        rational_to_f64(self)
    }

    fn to_quad(&self) -> QuadScalar {
        QuadScalar::from_rational(self.clone())
    }

    fn scale(&self, k: i64) -> Self {
        self * BigInt::from(k)
    }
}

/// The positive rational `r` of a field `Q(√r)`.
///
/// Perfect-square radicands are recognized up front so that values over them
/// collapse to plain rationals and `a + b√r = 0` iff `a = b = 0`.
#[derive(Clone)]
pub struct Radicand(Arc<RadicandInner>);

struct RadicandInner {
    value: Rational,
    sqrt: Option<Rational>,
}

impl Radicand {
    pub fn new(value: Rational) -> Result<Self, NumericError> {
        if !value.is_positive() {
            return Err(NumericError::NonPositiveRadicand(format_rational(&value)));
        }
        let sqrt = exact_sqrt(&value);
        Ok(Radicand(Arc::new(RadicandInner { value, sqrt })))
    }

    /// The radicand 2, i.e. the field Q(√2).
    pub fn two() -> Self {
        static TWO: OnceLock<Radicand> = OnceLock::new();
        TWO.get_or_init(|| Radicand::new(int(2)).expect("2 > 0")).clone()
    }

    pub fn value(&self) -> &Rational {
        &self.0.value
    }

    pub fn is_perfect_square(&self) -> bool {
        self.0.sqrt.is_some()
    }

    fn same_field(&self, other: &Radicand) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.value == other.0.value
    }
}

impl fmt::Debug for Radicand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "√({})", format_rational(&self.0.value))
    }
}

/// `a + b·√r`, exact.
///
/// Values with `b = 0` are plain rationals and combine with any field.
/// Combining two irrational values over different radicands is a contract
/// violation and panics.
#[derive(Clone)]
pub struct QuadScalar {
    a: Rational,
    b: Rational,
    radicand: Radicand,
}

impl QuadScalar {
    /// `a + b√2`.
    pub fn new(a: Rational, b: Rational) -> Self {
        Self::with_radicand(a, b, Radicand::two())
    }

    pub fn with_radicand(a: Rational, b: Rational, radicand: Radicand) -> Self {
        match &radicand.0.sqrt {
            Some(s) if !b.is_zero() => {
                let a = a + b * s;
                QuadScalar { a, b: Rational::zero(), radicand }
            }
            _ => QuadScalar { a, b, radicand },
        }
    }

    pub fn from_rational(a: Rational) -> Self {
        QuadScalar { a, b: Rational::zero(), radicand: Radicand::two() }
    }

    /// `√r` itself.
    pub fn sqrt_of(radicand: &Radicand) -> Self {
        Self::with_radicand(Rational::zero(), Rational::one(), radicand.clone())
    }

    pub fn a(&self) -> &Rational {
        &self.a
    }

    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn radicand(&self) -> &Radicand {
        &self.radicand
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// The rational value when the surd part vanishes.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.is_rational().then_some(&self.a)
    }

    pub fn sign(&self) -> i32 {
        quad_sign(self)
    }

    fn field_for(&self, other: &QuadScalar) -> Radicand {
        if self.b.is_zero() {
            other.radicand.clone()
        } else if other.b.is_zero() || self.radicand.same_field(&other.radicand) {
            self.radicand.clone()
        } else {
            panic!(
                "mixing values of Q({:?}) and Q({:?})",
                self.radicand, other.radicand
            );
        }
    }

    fn conj(&self) -> QuadScalar {
        QuadScalar { a: self.a.clone(), b: -self.b.clone(), radicand: self.radicand.clone() }
    }

    /// `a² − b²r`, the field norm.
    fn norm(&self) -> Rational {
        &self.a * &self.a - &self.b * &self.b * self.radicand.value()
    }
}

/// Exact sign of `a + b√r`: compares `a²` with `b²r` when the two parts
/// disagree in sign.
pub fn quad_sign(x: &QuadScalar) -> i32 {
    let sa = x.a.signum_i32();
    let sb = x.b.signum_i32();
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    // Opposite signs: the part with the larger square wins.
    let a2 = &x.a * &x.a;
    let b2r = &x.b * &x.b * x.radicand.value();
    match a2.cmp(&b2r) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

trait SignumI32 {
    fn signum_i32(&self) -> i32;
}

impl SignumI32 for Rational {
    fn signum_i32(&self) -> i32 {
        match self.numer().sign() {
            Sign::Minus => -1,
            Sign::NoSign => 0,
            Sign::Plus => 1,
        }
    }
}

impl fmt::Debug for QuadScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", format_rational(&self.a))
        } else {
            write!(
                f,
                "{} + {}·√{}",
                format_rational(&self.a),
                format_rational(&self.b),
                format_rational(self.radicand.value())
            )
        }
    }
}

impl fmt::Display for QuadScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl PartialEq for QuadScalar {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QuadScalar {}

impl PartialOrd for QuadScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.b.is_zero() && other.b.is_zero() {
            return self.a.cmp(&other.a);
        }
        quad_sign(&(self.clone() - other.clone())).cmp(&0)
    }
}

impl Add for QuadScalar {
    type Output = QuadScalar;
    fn add(self, o: QuadScalar) -> QuadScalar {
        let radicand = self.field_for(&o);
        QuadScalar { a: self.a + o.a, b: self.b + o.b, radicand }
    }
}

impl Sub for QuadScalar {
    type Output = QuadScalar;
    fn sub(self, o: QuadScalar) -> QuadScalar {
        let radicand = self.field_for(&o);
        QuadScalar { a: self.a - o.a, b: self.b - o.b, radicand }
    }
}

impl Neg for QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        QuadScalar { a: -self.a, b: -self.b, radicand: self.radicand }
    }
}

impl Mul for QuadScalar {
    type Output = QuadScalar;
    fn mul(self, o: QuadScalar) -> QuadScalar {
        let radicand = self.field_for(&o);
        if self.b.is_zero() {
            return QuadScalar { a: &self.a * &o.a, b: &self.a * &o.b, radicand };
        }
        if o.b.is_zero() {
            return QuadScalar { a: &self.a * &o.a, b: &self.b * &o.a, radicand };
        }
        let a = &self.a * &o.a + &self.b * &o.b * radicand.value();
        let b = &self.a * &o.b + &self.b * &o.a;
        QuadScalar { a, b, radicand }
    }
}

impl Div for QuadScalar {
    type Output = QuadScalar;
    fn div(self, o: QuadScalar) -> QuadScalar {
        assert!(o.sign() != 0, "division by zero in Q(√r)");
        if o.b.is_zero() {
            let radicand = self.radicand.clone();
            return QuadScalar { a: self.a / &o.a, b: self.b / &o.a, radicand };
        }
        // Non-square radicand, so the norm of a nonzero value is nonzero.
        let n = o.norm();
        let num = self * o.conj();
        QuadScalar { a: num.a / &n, b: num.b / &n, radicand: num.radicand }
    }
}

impl Field for QuadScalar {
    fn from_rational(q: &Rational) -> Self {
        QuadScalar::from_rational(q.clone())
    }

    fn signum(&self) -> Ordering {
        self.sign().cmp(&0)
    }

    fn floor_int(&self) -> BigInt {
        if self.b.is_zero() {
            return self.a.floor().to_integer();
        }
        // s = floor(b√r), then floor(a + b√r) ∈ {floor(a+s), floor(a+s)+1}.
        let b2r = &self.b * &self.b * self.radicand.value();
        let root = floor_sqrt(&b2r);
        let s = if self.b.is_positive() {
            root
        } else if Rational::from_integer(&root * &root) == b2r {
            -root
        } else {
            -root - 1
        };
        let k: BigInt = (&self.a + Rational::from_integer(s)).floor().to_integer() + 1;
        let probe = self.clone() - QuadScalar::from_rational(Rational::from_integer(k.clone()));
        if probe.sign() >= 0 {
            k
        } else {
            k - 1
        }
    }

    fn approx(&self) -> f64 {
        let a = rational_to_f64(&self.a);
        if self.b.is_zero() {
            return a;
        }
        let s = self.b.signum_i32() as f64 * rational_to_f64(&(&self.b * &self.b * self.radicand.value())).sqrt();
        if (a >= 0.0) == (s >= 0.0) {
            a + s
        } else {
            // Cancellation-free: (a² − b²r) / (a − b√r).
            rational_to_f64(&self.norm()) / (a - s)
        }
    }

    fn to_quad(&self) -> QuadScalar {
        self.clone()
    }
}

impl Serialize for QuadScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(4))?;
        m.serialize_entry("a", &format_rational(&self.a))?;
        m.serialize_entry("b", &format_rational(&self.b))?;
        m.serialize_entry("radicand", &format_rational(self.radicand.value()))?;
        m.serialize_entry("approx", &self.approx())?;
        m.end()
    }
}

impl<'de> Deserialize<'de> for QuadScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct QuadVisitor;

        impl<'de> Visitor<'de> for QuadVisitor {
            type Value = QuadScalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a rational string or an object {a, b, radicand}")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<QuadScalar, E> {
                parse_rational(v).map(QuadScalar::from_rational).map_err(E::custom)
            }

            fn visit_map<M: MapAccess<'de>>(self, mut map: M) -> Result<QuadScalar, M::Error> {
                let (mut a, mut b, mut r) = (None, None, None);
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "a" => a = Some(map.next_value::<String>()?),
                        "b" => b = Some(map.next_value::<String>()?),
                        "radicand" => r = Some(map.next_value::<String>()?),
                        _ => {
                            map.next_value::<de::IgnoredAny>()?;
                        }
                    }
                }
                let a = parse_rational(&a.ok_or_else(|| de::Error::missing_field("a"))?)
                    .map_err(de::Error::custom)?;
                let b = match b {
                    Some(b) => parse_rational(&b).map_err(de::Error::custom)?,
                    None => Rational::zero(),
                };
                let radicand = match r {
                    Some(r) => parse_rational(&r)
                        .map_err(de::Error::custom)
                        .and_then(|r| Radicand::new(r).map_err(de::Error::custom))?,
                    None => Radicand::two(),
                };
                Ok(QuadScalar::with_radicand(a, b, radicand))
            }
        }

        d.deserialize_any(QuadVisitor)
    }
}

/// `value + eps·ε` for a positive infinitesimal `ε`, truncated at first order.
///
/// The derived ordering is lexicographic on `(value, eps)`, which is exactly
/// the order of the two functions of `ε` for all sufficiently small `ε > 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Dual<B> {
    pub value: B,
    pub eps: B,
}

impl<B: Field> Dual<B> {
    pub fn new(value: B, eps: B) -> Self {
        Dual { value, eps }
    }

    pub fn constant(value: B) -> Self {
        Dual { value, eps: B::zero_value() }
    }

    pub fn from_rational(q: &Rational) -> Self {
        Dual::constant(B::from_rational(q))
    }

    pub fn scale(&self, k: i64) -> Self {
        Dual { value: self.value.scale(k), eps: self.eps.scale(k) }
    }

    pub fn mul_base(&self, k: &B) -> Self {
        Dual { value: self.value.clone() * k.clone(), eps: self.eps.clone() * k.clone() }
    }

    pub fn abs(&self) -> Self {
        if *self < Dual::constant(B::zero_value()) {
            -self.clone()
        } else {
            self.clone()
        }
    }

    pub fn is_perturbed(&self) -> bool {
        self.eps.signum() != Ordering::Equal
    }
}

impl<B: Field> Add for Dual<B> {
    type Output = Dual<B>;
    fn add(self, o: Dual<B>) -> Dual<B> {
        Dual { value: self.value + o.value, eps: self.eps + o.eps }
    }
}

impl<B: Field> Sub for Dual<B> {
    type Output = Dual<B>;
    fn sub(self, o: Dual<B>) -> Dual<B> {
        Dual { value: self.value - o.value, eps: self.eps - o.eps }
    }
}

impl<B: Field> Neg for Dual<B> {
    type Output = Dual<B>;
    fn neg(self) -> Dual<B> {
        Dual { value: -self.value, eps: -self.eps }
    }
}

impl<B: Field> Mul for Dual<B> {
    type Output = Dual<B>;
    fn mul(self, o: Dual<B>) -> Dual<B> {
        let eps = self.value.clone() * o.eps + o.value.clone() * self.eps;
        Dual { value: self.value * o.value, eps }
    }
}

/// Largest integer `i` with `i·unit ≤ x` in the dual order.
///
/// Equals `floor(x.value / unit)` unless `x.value / unit` is an exact
/// integer, in which case a negative `eps` drops the boundary index.
pub fn dual_floor_index<B: Field>(x: &Dual<B>, unit: &B) -> BigInt {
    assert!(unit.signum() == Ordering::Greater, "grid unit must be positive");
    let ratio = x.value.clone() / unit.clone();
    let i = ratio.floor_int();
    let on_line = ratio == B::from_rational(&Rational::from_integer(i.clone()));
    if on_line && x.eps.signum() == Ordering::Less {
        i - 1
    } else {
        i
    }
}
