//! Exact scalar arithmetic: arbitrary-precision rationals and the
//! quadratic extension Q(sqrt 2).
//!
//! Every probability, measure, and Haar coefficient in this crate lives in
//! one of these two types. `sqrt 2` is a formal symbol with the rewrite
//! `r2 * r2 -> 2`; no floating point enters any exact path. Float renditions
//! are produced only on demand for reports.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision rational in canonical form: positive denominator,
/// gcd(|numerator|, denominator) = 1. The canonical form is maintained by
/// the backing `BigRational` on every operation.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let d: BigInt = denom.into();
        if d.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Rational(BigRational::new(numer.into(), d)))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// 2^exp for exp possibly negative.
    pub fn pow2(exp: i64) -> Self {
        let two = BigInt::from(2);
        if exp >= 0 {
            Rational(BigRational::from_integer(two.pow(exp as u32)))
        } else {
            Rational(BigRational::new(BigInt::one(), two.pow((-exp) as u32)))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn square(&self) -> Self {
        Rational(&self.0 * &self.0)
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for Rational {
    /// Canonical serialization `n/d` ("0/1" for zero).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer = BigInt::from_str(n.trim()).map_err(|e| Error::Parse(e.to_string()))?;
        let denom = BigInt::from_str(d.trim()).map_err(|e| Error::Parse(e.to_string()))?;
        Rational::new(numer, denom)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! rational_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
    };
}

rational_binop!(Add, add, +);
rational_binop!(Sub, sub, -);
rational_binop!(Mul, mul, *);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 = &self.0 + &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 = &self.0 - &rhs.0;
    }
}

/// Element of Q(sqrt 2), stored as `a + b*r2` with `a`, `b` rational and
/// `r2` the formal square root of two. The representation is unique, so
/// equality is componentwise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ExactScalar {
    a: Rational,
    b: Rational,
}

impl ExactScalar {
    pub fn new(a: Rational, b: Rational) -> Self {
        ExactScalar { a, b }
    }

    /// Canonical scalar from raw fraction parts `n1/d1 + (n2/d2)*r2`.
    pub fn from_parts(
        n1: impl Into<BigInt>,
        d1: impl Into<BigInt>,
        n2: impl Into<BigInt>,
        d2: impl Into<BigInt>,
    ) -> Result<Self> {
        Ok(ExactScalar {
            a: Rational::new(n1, d1)?,
            b: Rational::new(n2, d2)?,
        })
    }

    pub fn from_rational(a: Rational) -> Self {
        ExactScalar {
            a,
            b: Rational::zero(),
        }
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Self::from_rational(Rational::from_int(n))
    }

    pub fn zero() -> Self {
        Self::from_rational(Rational::zero())
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn sqrt2() -> Self {
        ExactScalar {
            a: Rational::zero(),
            b: Rational::one(),
        }
    }

    /// 2^(j/2), exact: integer power for even j, `2^((j-1)/2) * r2` for odd j.
    pub fn pow2_half(j: i64) -> Self {
        if j.rem_euclid(2) == 0 {
            Self::from_rational(Rational::pow2(j / 2))
        } else {
            ExactScalar {
                a: Rational::zero(),
                b: Rational::pow2((j - 1).div_euclid(2)),
            }
        }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &Rational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// The rational value when the sqrt-2 component vanishes.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.b.is_zero() {
            Some(self.a.clone())
        } else {
            None
        }
    }

    pub fn conjugate(&self) -> Self {
        ExactScalar {
            a: self.a.clone(),
            b: -&self.b,
        }
    }

    /// Field norm a^2 - 2 b^2; zero exactly at the zero scalar.
    pub fn norm(&self) -> Rational {
        &self.a.square() - &(&Rational::from_int(2) * &self.b.square())
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn cube(&self) -> Self {
        &(self * self) * self
    }

    pub fn recip(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let inv = n.recip()?;
        Ok(ExactScalar {
            a: &self.a * &inv,
            b: -&(&self.b * &inv),
        })
    }

    pub fn checked_div(&self, rhs: &ExactScalar) -> Result<Self> {
        Ok(self * &rhs.recip()?)
    }

    pub fn scale(&self, r: &Rational) -> Self {
        ExactScalar {
            a: &self.a * r,
            b: &self.b * r,
        }
    }

    pub fn abs(&self) -> Self {
        if self.sign() == Ordering::Less {
            -self
        } else {
            self.clone()
        }
    }

    /// Sign of a + b*r2 as a real number, decided exactly.
    pub fn sign(&self) -> Ordering {
        let sa = if self.a.is_zero() {
            Ordering::Equal
        } else if self.a.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        let sb = if self.b.is_zero() {
            Ordering::Equal
        } else if self.b.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        match (sa, sb) {
            (Ordering::Equal, s) | (s, Ordering::Equal) => s,
            (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
            (Ordering::Less, Ordering::Less) => Ordering::Less,
            // Mixed signs: compare a^2 against 2 b^2. Equality would force
            // sqrt 2 rational, so it cannot occur for nonzero components.
            (sa, _) => {
                let lhs = self.a.square();
                let rhs = &Rational::from_int(2) * &self.b.square();
                match lhs.cmp(&rhs) {
                    Ordering::Greater => sa,
                    Ordering::Less => sa.reverse(),
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64() + self.b.to_f64() * std::f64::consts::SQRT_2
    }
}

impl PartialOrd for ExactScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExactScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).sign()
    }
}

impl Add<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar {
            a: &self.a + &rhs.a,
            b: &self.b + &rhs.b,
        }
    }
}

impl Sub<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar {
            a: &self.a - &rhs.a,
            b: &self.b - &rhs.b,
        }
    }
}

impl Mul<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        // (a1 + b1 r2)(a2 + b2 r2) = a1 a2 + 2 b1 b2 + (a1 b2 + b1 a2) r2
        ExactScalar {
            a: &(&self.a * &rhs.a) + &(&Rational::from_int(2) * &(&self.b * &rhs.b)),
            b: &(&self.a * &rhs.b) + &(&self.b * &rhs.a),
        }
    }
}

macro_rules! scalar_binop_forward {
    ($trait:ident, $method:ident) => {
        impl $trait for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                self.$method(&rhs)
            }
        }
    };
}

scalar_binop_forward!(Add, add);
scalar_binop_forward!(Sub, sub);
scalar_binop_forward!(Mul, mul);

impl Div<&ExactScalar> for &ExactScalar {
    type Output = ExactScalar;
    /// Panics on division by zero; use `checked_div` where the divisor is
    /// not known to be nonzero.
    fn div(self, rhs: &ExactScalar) -> ExactScalar {
        self.checked_div(rhs).expect("division by zero scalar")
    }
}

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar {
            a: -&self.a,
            b: -&self.b,
        }
    }
}

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl SubAssign<&ExactScalar> for ExactScalar {
    fn sub_assign(&mut self, rhs: &ExactScalar) {
        self.a -= &rhs.a;
        self.b -= &rhs.b;
    }
}

impl fmt::Display for ExactScalar {
    /// Canonical serialization: `n/d` when the sqrt-2 component is zero,
    /// else `n1/d1+n2/d2*r2` (with `-` replacing `+` for negative n2).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.b.is_negative() {
            write!(f, "{}-{}*r2", self.a, self.b.abs())
        } else {
            write!(f, "{}+{}*r2", self.a, self.b)
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for ExactScalar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, has_r2) = match s.strip_suffix("*r2") {
            Some(head) => (head, true),
            None => (s, false),
        };
        if !has_r2 {
            return Ok(ExactScalar::from_rational(head.parse()?));
        }
        // head is either "b" or "a+b" / "a-b" with the split at a sign that
        // follows a digit (so leading minus signs stay with their numerator).
        let bytes = head.as_bytes();
        let mut split = None;
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1].is_ascii_digit() {
                split = Some(i);
            }
        }
        match split {
            Some(i) => {
                let a: Rational = head[..i].parse()?;
                let sign = if bytes[i] == b'-' { -1 } else { 1 };
                let b: Rational = head[i + 1..].parse()?;
                Ok(ExactScalar::new(a, &Rational::from_int(sign) * &b))
            }
            None => Ok(ExactScalar::new(Rational::zero(), head.parse()?)),
        }
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
