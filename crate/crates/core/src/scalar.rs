//! Numeric backends for distance values.
//!
//! Two backends implement [`Scalar`]: exact [`Rational`] numbers for
//! rational-valued distance data, and `f64` for data involving roots or
//! transcendental values. Exact comparisons are equality; float comparisons
//! use a relative tolerance, so an exact `0` only ever matches another `0`.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational numbers.
pub type Rational = BigRational;

/// Default relative tolerance for float comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    /// `true` for backends where arithmetic is exact.
    const EXACT: bool;

    /// Short name used in reports (`exact` or `float`).
    const MODE: &'static str;

    fn from_i64(v: i64) -> Self;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Self::from_i64(numer) / Self::from_i64(denom)
    }

    /// Converts a float. Rationals take the exact binary value.
    fn from_f64(v: f64) -> Option<Self>;

    /// Parses `"p/q"`, integers and decimal literals (with optional exponent).
    fn parse(text: &str) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Real cube root when the backend can represent it.
    fn cube_root(&self) -> Option<Self>;

    fn abs(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }

    /// Equality for exact backends, relative closeness otherwise.
    fn close(&self, other: &Self, tol: f64) -> bool;

    fn to_json(&self) -> serde_json::Value;
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        v.is_finite().then_some(v)
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p: f64 = p.trim().parse().ok()?;
            let q: f64 = q.trim().parse().ok()?;
            return (q != 0.0).then(|| p / q).filter(|v| v.is_finite());
        }
        text.parse::<f64>().ok().filter(|v| v.is_finite())
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn cube_root(&self) -> Option<Self> {
        Some(self.cbrt())
    }

    fn close(&self, other: &Self, tol: f64) -> bool {
        self == other || f64::abs(self - other) <= tol * f64::abs(*self).max(f64::abs(*other))
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Number::from_f64(*self)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE: &'static str = "exact";

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_f64(v: f64) -> Option<Self> {
        Rational::from_float(v)
    }

    fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((p, q)) = text.split_once('/') {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            return (!q.is_zero()).then(|| Rational::new(p, q));
        }
        parse_decimal(text)
    }

    fn to_f64(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => ToPrimitive::to_f64(self).unwrap_or(f64::NAN),
        }
    }

    fn cube_root(&self) -> Option<Self> {
        None
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn close(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

/// Exact decimal parsing: `-12.375`, `3e-2`, `7`.
fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Rational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Some(value)
}

/// Shorthand for building exact rationals in tests and fixtures.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}
