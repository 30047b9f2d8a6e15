//! Extended nonnegative arithmetic where infinite distances cancel in ratios.
//!
//! Distances live in `[0, ∞]` ([`ExtScalar`]). Products of distances are kept
//! as [`FormalProduct`]s, a coefficient together with the number of infinite
//! factors, so that a ratio of two products can cancel the common powers of
//! `∞` before dividing. Logarithms of distances live in `[-∞, ∞]`
//! ([`ExtLog`]).

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A value in `[0, ∞]`.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtScalar<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> ExtScalar<S> {
    /// Wraps a finite value, rejecting negatives.
    pub fn finite(value: S) -> Result<Self> {
        if value < S::zero() {
            return Err(Error::InvalidInput(format!("negative distance {value}")));
        }
        Ok(ExtScalar::Finite(value))
    }

    pub fn zero() -> Self {
        ExtScalar::Finite(S::zero())
    }

    pub fn one() -> Self {
        ExtScalar::Finite(S::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ExtScalar::Finite(v) if v.is_zero())
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtScalar::Infinite)
    }

    pub fn as_finite(&self) -> Option<&S> {
        match self {
            ExtScalar::Finite(v) => Some(v),
            ExtScalar::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtScalar::Finite(v) => v.to_f64(),
            ExtScalar::Infinite => f64::INFINITY,
        }
    }

    /// Structural match on `∞` and `0`, [`Scalar::close`] otherwise.
    pub fn close(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (ExtScalar::Infinite, ExtScalar::Infinite) => true,
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => a.close(b, tol),
            _ => false,
        }
    }

    /// `1/x` with `1/0 = ∞` and `1/∞ = 0`.
    pub fn recip(&self) -> Self {
        match self {
            ExtScalar::Infinite => Self::zero(),
            ExtScalar::Finite(v) if v.is_zero() => ExtScalar::Infinite,
            ExtScalar::Finite(v) => ExtScalar::Finite(S::one() / v.clone()),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => ExtScalar::Finite(a.clone() + b.clone()),
            _ => ExtScalar::Infinite,
        }
    }

    /// Product where `0·∞` is ill-posed. This is the multiplicative image of
    /// adding extended logarithms, so `None` mirrors `∞ + (-∞)`.
    pub fn checked_mul(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => Some(ExtScalar::Finite(a.clone() * b.clone())),
            (ExtScalar::Infinite, x) | (x, ExtScalar::Infinite) => {
                (!x.is_zero()).then_some(ExtScalar::Infinite)
            }
        }
    }

    /// Quotient where `0/0` and `∞/∞` are ill-posed.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        match (self, other) {
            (ExtScalar::Infinite, ExtScalar::Infinite) => None,
            (ExtScalar::Infinite, _) => Some(ExtScalar::Infinite),
            (_, ExtScalar::Infinite) => Some(Self::zero()),
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => match (a.is_zero(), b.is_zero()) {
                (true, true) => None,
                (false, true) => Some(ExtScalar::Infinite),
                _ => Some(ExtScalar::Finite(a.clone() / b.clone())),
            },
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            ExtScalar::Finite(v) => v.to_json(),
            ExtScalar::Infinite => serde_json::Value::String("inf".into()),
        }
    }
}

impl<S: Scalar> PartialOrd for ExtScalar<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtScalar::Infinite, ExtScalar::Infinite) => Some(Ordering::Equal),
            (ExtScalar::Infinite, _) => Some(Ordering::Greater),
            (_, ExtScalar::Infinite) => Some(Ordering::Less),
            (ExtScalar::Finite(a), ExtScalar::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<S: Scalar> fmt::Display for ExtScalar<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtScalar::Finite(v) => write!(f, "{v}"),
            ExtScalar::Infinite => f.write_str("inf"),
        }
    }
}

/// A product `coeff · ∞^infdeg` of extended distances.
///
/// `coeff = 0` is absolute zero and always carries `infdeg = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalProduct<S> {
    coeff: S,
    infdeg: u32,
}

impl<S: Scalar> FormalProduct<S> {
    pub fn new(coeff: S, infdeg: u32) -> Self {
        let infdeg = if coeff.is_zero() { 0 } else { infdeg };
        FormalProduct { coeff, infdeg }
    }

    pub fn zero() -> Self {
        FormalProduct::new(S::zero(), 0)
    }

    pub fn coeff(&self) -> &S {
        &self.coeff
    }

    pub fn infdeg(&self) -> u32 {
        self.infdeg
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn mul(&self, other: &Self) -> Self {
        FormalProduct::new(self.coeff.clone() * other.coeff.clone(), self.infdeg + other.infdeg)
    }
}

impl<S: Scalar> From<&ExtScalar<S>> for FormalProduct<S> {
    fn from(value: &ExtScalar<S>) -> Self {
        match value {
            ExtScalar::Finite(v) => FormalProduct::new(v.clone(), 0),
            ExtScalar::Infinite => FormalProduct::new(S::one(), 1),
        }
    }
}

/// Product of two extended distances; a zero factor wins over `∞`.
pub fn fp_mul<S: Scalar>(a: &ExtScalar<S>, b: &ExtScalar<S>) -> FormalProduct<S> {
    FormalProduct::from(a).mul(&FormalProduct::from(b))
}

/// Ratio of two formal products after cancelling common powers of `∞`.
pub fn fp_ratio<S: Scalar>(a: &FormalProduct<S>, b: &FormalProduct<S>) -> Result<ExtScalar<S>> {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => return Err(Error::IndeterminateRatio),
        (true, false) => return Ok(ExtScalar::zero()),
        (false, true) => return Ok(ExtScalar::Infinite),
        (false, false) => {}
    }
    Ok(match a.infdeg.cmp(&b.infdeg) {
        Ordering::Greater => ExtScalar::Infinite,
        Ordering::Less => ExtScalar::zero(),
        Ordering::Equal => ExtScalar::Finite(a.coeff.clone() / b.coeff.clone()),
    })
}

/// An extended real in `[-∞, ∞]`; never NaN.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ExtLog(f64);

impl ExtLog {
    pub const ZERO: ExtLog = ExtLog(0.0);
    pub const POS_INF: ExtLog = ExtLog(f64::INFINITY);
    pub const NEG_INF: ExtLog = ExtLog(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Option<Self> {
        (!value.is_nan()).then_some(ExtLog(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }

    pub fn neg(self) -> Self {
        ExtLog(-self.0)
    }

    pub fn checked_add(self, other: Self) -> Result<Self> {
        ExtLog::new(self.0 + other.0)
            .ok_or_else(|| Error::IndeterminateSum(format!("{} + {}", self, other)))
    }

    pub fn checked_sub(self, other: Self) -> Result<Self> {
        self.checked_add(other.neg())
    }

    /// Infinities match structurally; finite values within
    /// `tol · max(1, |a|, |b|)`.
    pub fn close(self, other: Self, tol: f64) -> bool {
        if !self.is_finite() || !other.is_finite() {
            return self.0 == other.0;
        }
        (self.0 - other.0).abs() <= tol * 1f64.max(self.0.abs()).max(other.0.abs())
    }
}

impl fmt::Display for ExtLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            v if v == f64::INFINITY => f.write_str("inf"),
            v if v == f64::NEG_INFINITY => f.write_str("-inf"),
            v => write!(f, "{v}"),
        }
    }
}

impl serde::Serialize for ExtLog {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        if self.0.is_finite() {
            serializer.serialize_f64(self.0)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

/// `ln` extended by `ln 0 = -∞` and `ln ∞ = ∞`.
pub fn ext_ln<S: Scalar>(a: &ExtScalar<S>) -> ExtLog {
    match a {
        ExtScalar::Infinite => ExtLog::POS_INF,
        ExtScalar::Finite(v) if v.is_zero() => ExtLog::NEG_INF,
        ExtScalar::Finite(v) => ExtLog(v.to_f64().ln()),
    }
}

/// Inverse of [`ext_ln`]; overflow to `∞` is reported as `∞`.
pub fn ext_exp(a: ExtLog) -> ExtScalar<f64> {
    let v = a.0.exp();
    if v.is_infinite() {
        ExtScalar::Infinite
    } else {
        ExtScalar::Finite(v)
    }
}
