//! The three encodings of a cross-ratio value and the conversions between them.
//!
//! * [`ProjTriple`]: a point `(a : b : c)` of the closed positive projective
//!   triangle, stored as its representative with `a + b + c = 1`.
//! * [`RatioTriple`]: `(α, β, γ)` with `αβγ = 1`, or one of the three
//!   extended points `(1,∞,0)`, `(0,1,∞)`, `(∞,0,1)`.
//! * [`LogTriple`]: `(x, y, z)` with `x + y + z = 0`, or one of
//!   `(0,∞,-∞)`, `(-∞,0,∞)`, `(∞,-∞,0)`.
//!
//! The three boundary points are indexed by the slot `k` holding the zero of
//! the projective representative. In every encoding slot `k` holds the
//! neutral value (`1` resp. `0`), slot `k+1` the upper extreme and slot `k+2`
//! the lower one.

use std::fmt;

use crate::error::{Error, Result};
use crate::ext::{ext_exp, ext_ln, ExtLog, ExtScalar, FormalProduct};
use crate::scalar::{Scalar, DEFAULT_TOL};

/// Canonical representative of a point of the closed projective triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjTriple<S> {
    entries: [S; 3],
}

impl<S: Scalar> ProjTriple<S> {
    /// Projectivizes three nonnegative finite entries.
    pub fn from_entries(entries: [S; 3]) -> Result<Self> {
        normalize_delta(entries.map(|e| FormalProduct::new(e, 0)))
    }

    /// The boundary point with a zero in slot `k`.
    pub fn boundary(k: usize) -> Self {
        let half = S::one() / S::from_i64(2);
        let mut entries = [half.clone(), half.clone(), half];
        entries[k % 3] = S::zero();
        ProjTriple { entries }
    }

    pub fn entries(&self) -> &[S; 3] {
        &self.entries
    }

    /// Slot of the zero entry for boundary points.
    pub fn boundary_index(&self) -> Option<usize> {
        self.entries.iter().position(|e| e.is_zero())
    }

    pub fn is_interior(&self) -> bool {
        self.boundary_index().is_none()
    }

    /// Equality of canonical representatives, up to tolerance in float mode.
    pub fn close(&self, other: &Self, tol: f64) -> bool {
        self.entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| a == b || (!a.is_zero() && !b.is_zero() && a.close(b, tol)))
    }
}

impl<S: Scalar> fmt::Display for ProjTriple<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.entries;
        write!(f, "({a} : {b} : {c})")
    }
}

/// Cancels the common power of `∞` from three formal products and scales the
/// result to sum 1.
pub fn normalize_delta<S: Scalar>(raw: [FormalProduct<S>; 3]) -> Result<ProjTriple<S>> {
    let top = raw
        .iter()
        .filter(|p| !p.is_zero())
        .map(FormalProduct::infdeg)
        .max()
        .ok_or_else(|| Error::DegenerateTriple("all entries are zero".into()))?;
    let kept: [S; 3] = std::array::from_fn(|i| {
        let p = &raw[i];
        if !p.is_zero() && p.infdeg() == top {
            p.coeff().clone()
        } else {
            S::zero()
        }
    });
    if kept.iter().filter(|e| e.is_zero()).count() > 1 {
        return Err(Error::DegenerateTriple(format!(
            "more than one entry vanishes: ({} : {} : {})",
            kept[0], kept[1], kept[2]
        )));
    }
    if kept.iter().any(|e| *e < S::zero()) {
        return Err(Error::InvalidInput("negative projective entry".into()));
    }
    if let Some(k) = kept.iter().position(|e| e.is_zero()) {
        // A single zero is only canonical with equal companions.
        let (u, v) = (&kept[(k + 1) % 3], &kept[(k + 2) % 3]);
        if !u.close(v, DEFAULT_TOL) {
            return Err(Error::DegenerateTriple(format!(
                "boundary entry with unequal companions: ({} : {} : {})",
                kept[0], kept[1], kept[2]
            )));
        }
        return Ok(ProjTriple::boundary(k));
    }
    let sum = kept[0].clone() + kept[1].clone() + kept[2].clone();
    Ok(ProjTriple {
        entries: kept.map(|e| e / sum.clone()),
    })
}

/// Multiplicative encoding `(α, β, γ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioTriple<S> {
    entries: [ExtScalar<S>; 3],
}

impl<S: Scalar> RatioTriple<S> {
    /// Validates the product-one or extended-point invariant; float products
    /// are checked to `tol` relative.
    pub fn new(entries: [ExtScalar<S>; 3], tol: f64) -> Result<Self> {
        let t = RatioTriple { entries };
        if t.boundary_index().is_some() {
            return Ok(t);
        }
        let finite: Option<Vec<&S>> = t.entries.iter().map(ExtScalar::as_finite).collect();
        match finite {
            Some(v) if v.iter().all(|e| **e > S::zero()) => {
                let product = v[0].clone() * v[1].clone() * v[2].clone();
                if product.close(&S::one(), tol) {
                    Ok(t)
                } else {
                    Err(Error::InvalidInput(format!("ratio triple {t} has product {product}, not 1")))
                }
            }
            _ => Err(Error::InvalidInput(format!("ratio triple {t} is neither interior nor an extended point"))),
        }
    }

    /// Interior point from finite positive entries, unchecked.
    pub(crate) fn interior_unchecked(entries: [S; 3]) -> Self {
        RatioTriple {
            entries: entries.map(ExtScalar::Finite),
        }
    }

    /// The extended point paired with boundary slot `k`.
    pub fn boundary(k: usize) -> Self {
        let mut entries = [ExtScalar::zero(), ExtScalar::zero(), ExtScalar::zero()];
        entries[k % 3] = ExtScalar::one();
        entries[(k + 1) % 3] = ExtScalar::Infinite;
        RatioTriple { entries }
    }

    pub fn identity() -> Self {
        RatioTriple::interior_unchecked([S::one(), S::one(), S::one()])
    }

    pub fn entries(&self) -> &[ExtScalar<S>; 3] {
        &self.entries
    }

    pub fn boundary_index(&self) -> Option<usize> {
        (0..3).find(|&k| {
            let e = &self.entries;
            e[k] == ExtScalar::one() && e[(k + 1) % 3].is_infinite() && e[(k + 2) % 3].is_zero()
        })
    }

    pub fn is_interior(&self) -> bool {
        self.entries.iter().all(|e| matches!(e, ExtScalar::Finite(v) if !v.is_zero()))
    }

    /// Componentwise reciprocal; the multiplicative form of negation.
    pub fn recip(&self) -> Self {
        RatioTriple {
            entries: [self.entries[0].recip(), self.entries[1].recip(), self.entries[2].recip()],
        }
    }

    /// Reorders components so that slot `k` receives `self[src[k]]`.
    pub fn reorder(&self, src: [usize; 3]) -> Self {
        RatioTriple {
            entries: src.map(|i| self.entries[i].clone()),
        }
    }

    pub fn close(&self, other: &Self, tol: f64) -> bool {
        self.entries.iter().zip(&other.entries).all(|(a, b)| a.close(b, tol))
    }

    pub fn to_f64(&self) -> RatioTriple<f64> {
        RatioTriple {
            entries: [0, 1, 2].map(|i| match &self.entries[i] {
                ExtScalar::Finite(v) => ExtScalar::Finite(v.to_f64()),
                ExtScalar::Infinite => ExtScalar::Infinite,
            }),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.entries.iter().map(ExtScalar::to_json).collect())
    }
}

impl<S: Scalar> fmt::Display for RatioTriple<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.entries;
        write!(f, "({a}, {b}, {c})")
    }
}

/// Additive encoding `(x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogTriple {
    entries: [ExtLog; 3],
}

impl LogTriple {
    /// Validates the sum-zero or extended-point invariant; finite sums are
    /// checked to `tol · max(1, |x|, |y|, |z|)`.
    pub fn new(entries: [ExtLog; 3], tol: f64) -> Result<Self> {
        let t = LogTriple { entries };
        if t.boundary_index().is_some() {
            return Ok(t);
        }
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("log triple {t} is neither finite nor an extended point")));
        }
        let v = entries.map(ExtLog::value);
        let scale = v.iter().fold(1f64, |m, x| m.max(x.abs()));
        if (v[0] + v[1] + v[2]).abs() > tol * scale {
            return Err(Error::InvalidInput(format!("log triple {t} does not sum to zero")));
        }
        Ok(t)
    }

    pub fn from_f64(entries: [f64; 3], tol: f64) -> Result<Self> {
        let logs = entries.map(ExtLog::new);
        match logs {
            [Some(a), Some(b), Some(c)] => LogTriple::new([a, b, c], tol),
            _ => Err(Error::InvalidInput("NaN in log triple".into())),
        }
    }

    pub fn boundary(k: usize) -> Self {
        let mut entries = [ExtLog::NEG_INF; 3];
        entries[k % 3] = ExtLog::ZERO;
        entries[(k + 1) % 3] = ExtLog::POS_INF;
        LogTriple { entries }
    }

    pub fn zero() -> Self {
        LogTriple {
            entries: [ExtLog::ZERO; 3],
        }
    }

    pub fn entries(&self) -> &[ExtLog; 3] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }

    pub fn boundary_index(&self) -> Option<usize> {
        (0..3).find(|&k| {
            let e = &self.entries;
            e[k] == ExtLog::ZERO && e[(k + 1) % 3] == ExtLog::POS_INF && e[(k + 2) % 3] == ExtLog::NEG_INF
        })
    }

    pub fn neg(&self) -> Self {
        LogTriple {
            entries: self.entries.map(ExtLog::neg),
        }
    }

    pub fn reorder(&self, src: [usize; 3]) -> Self {
        LogTriple {
            entries: src.map(|i| self.entries[i]),
        }
    }

    pub fn close(&self, other: &Self, tol: f64) -> bool {
        self.entries.iter().zip(&other.entries).all(|(a, b)| a.close(*b, tol))
    }
}

impl fmt::Display for LogTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.entries;
        write!(f, "({a}, {b}, {c})")
    }
}

impl serde::Serialize for LogTriple {
    fn serialize<Ser: serde::Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        self.entries.serialize(serializer)
    }
}

/// `(a : b : c) ↦ (b/c, c/a, a/b)`, with boundary points sent to the
/// extended points.
pub fn to_ratio<S: Scalar>(t: &ProjTriple<S>) -> RatioTriple<S> {
    if let Some(k) = t.boundary_index() {
        return RatioTriple::boundary(k);
    }
    let [a, b, c] = t.entries.clone();
    RatioTriple::interior_unchecked([b.clone() / c.clone(), c / a.clone(), a / b])
}

/// Inverse of [`to_ratio`].
///
/// Exact backends use the representative `(1/β : α : 1)`; float backends use
/// the symmetric cube-root representative. Both normalize to the same point.
pub fn to_proj<S: Scalar>(t: &RatioTriple<S>) -> Result<ProjTriple<S>> {
    if let Some(k) = t.boundary_index() {
        return Ok(ProjTriple::boundary(k));
    }
    let finite: Option<Vec<S>> = t.entries.iter().map(|e| e.as_finite().cloned()).collect();
    let [alpha, beta, gamma]: [S; 3] = finite
        .and_then(|v| v.try_into().ok())
        .ok_or_else(|| Error::InvalidInput(format!("ratio triple {t} is not interior")))?;
    let roots = (alpha.cube_root(), beta.cube_root(), gamma.cube_root());
    let rep = match roots {
        (Some(ra), Some(rb), Some(rc)) => [rc.clone() / rb.clone(), ra.clone() / rc, rb / ra],
        _ => [S::one() / beta, alpha, S::one()],
    };
    ProjTriple::from_entries(rep)
}

/// Componentwise logarithm.
pub fn to_log<S: Scalar>(t: &RatioTriple<S>) -> LogTriple {
    if let Some(k) = t.boundary_index() {
        return LogTriple::boundary(k);
    }
    LogTriple {
        entries: [0, 1, 2].map(|i| ext_ln(&t.entries[i])),
    }
}

/// Componentwise exponential.
pub fn from_log(t: &LogTriple) -> RatioTriple<f64> {
    if let Some(k) = t.boundary_index() {
        return RatioTriple::boundary(k);
    }
    RatioTriple {
        entries: t.entries.map(ext_exp),
    }
}

/// Convenience: the log triple of a projective triple.
pub fn proj_to_log<S: Scalar>(t: &ProjTriple<S>) -> LogTriple {
    to_log(&to_ratio(t))
}

/// Parses a log-triple component: a decimal, `inf` or `-inf`.
pub fn parse_ext_log(text: &str) -> Option<ExtLog> {
    match text.trim() {
        "inf" | "+inf" | "∞" => Some(ExtLog::POS_INF),
        "-inf" | "-∞" => Some(ExtLog::NEG_INF),
        other => other.parse::<f64>().ok().filter(|v| v.is_finite()).and_then(ExtLog::new),
    }
}

/// Default tolerance for validating float triples.
pub const TRIPLE_TOL: f64 = DEFAULT_TOL;
