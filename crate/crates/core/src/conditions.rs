//! Quantitative condition estimators on finite data.
//!
//! * [`quasi_constant`]: the least `K` with `d(x,z) ≤ K·max(d(x,y), d(y,z))`.
//! * [`corner_margin`]: how far cross-ratio triples stay from the corners of
//!   the projective triangle; a `K`-quasi-metric keeps it at least `1/K²`.
//! * [`infinity_corner_k`]: the corner bound read off quadruples through the
//!   point at infinity; equals the quasi constant.
//! * [`symmetry_margin`]: distance of cross-ratio triples from the boundary
//!   of the triangle. A finite scan is evidence only; the condition itself
//!   concerns the closure of the image.
//! * [`boundedify`]: a bounded quasi-metric with the same cross ratios.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::ExtScalar;
use crate::scalar::Scalar;
use crate::scan::{nondegenerate_tuples, ScanPlan};
use crate::space::FiniteSpace;
use crate::structure::{crt_of, involute, MoebiusStructure};
use crate::triples::to_proj;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Quasi,
    Corner,
    InfinityCorner,
    Symmetry,
}

/// Serializable summary of a condition scan.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    #[serde(serialize_with = "ser_ext_f64")]
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin_exact: Option<String>,
    #[serde(rename = "K_estimate", serialize_with = "ser_opt_ext_f64")]
    pub k_estimate: Option<f64>,
    pub witnesses: Vec<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn ser_ext_f64<Ser: serde::Serializer>(v: &f64, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn ser_opt_ext_f64<Ser: serde::Serializer>(v: &Option<f64>, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    match v {
        Some(v) => ser_ext_f64(v, s),
        None => s.serialize_none(),
    }
}

fn plan_fields(plan: ScanPlan) -> (Option<usize>, Option<u64>) {
    match plan {
        ScanPlan::Exhaustive => (None, None),
        ScanPlan::Sampled { budget, seed } => (Some(budget), Some(seed)),
    }
}

/// The least quasi constant of a finite space and an extremal triple
/// `(x, y, z)` with `d(x,z) = K·max(d(x,y), d(y,z))`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiConstant<S> {
    pub k: ExtScalar<S>,
    pub witness: Option<[usize; 3]>,
}

/// Least `K ≥ 1` over ordered triples of distinct points other than the
/// point at infinity; `∞` when a positive distance is not dominated at all.
pub fn quasi_constant<S: Scalar>(sp: &FiniteSpace<S>) -> QuasiConstant<S> {
    let n = sp.len();
    let pts: Vec<usize> = (0..n).filter(|&i| Some(i) != sp.infinity()).collect();
    let dist = |i: usize, j: usize| sp.d(i, j).as_finite().expect("finite away from infinity");
    // For each ordered pair the best middle point minimizes max(d(x,y), d(y,z)).
    let per_x: Vec<Option<(ExtScalar<S>, [usize; 3])>> = pts
        .par_iter()
        .map(|&x| {
            let mut best: Option<(ExtScalar<S>, [usize; 3])> = None;
            for &z in pts.iter().filter(|&&z| z != x) {
                let mut low: Option<(&S, usize)> = None;
                for &y in pts.iter().filter(|&&y| y != x && y != z) {
                    let (a, b) = (dist(x, y), dist(y, z));
                    let m = if a > b { a } else { b };
                    if low.is_none_or(|(l, _)| m < l) {
                        low = Some((m, y));
                    }
                }
                let Some((low, y)) = low else { continue };
                let ratio = ExtScalar::Finite(dist(x, z).clone())
                    .checked_div(&ExtScalar::Finite(low.clone()))
                    .unwrap_or_else(ExtScalar::zero);
                if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                    best = Some((ratio, [x, y, z]));
                }
            }
            best
        })
        .collect();
    let mut out = QuasiConstant {
        k: ExtScalar::one(),
        witness: None,
    };
    for (k, w) in per_x.into_iter().flatten() {
        if k > out.k {
            out = QuasiConstant { k, witness: Some(w) };
        }
    }
    out
}

impl<S: Scalar> QuasiConstant<S> {
    pub fn report(&self, sp: &FiniteSpace<S>) -> ConditionReport {
        ConditionReport {
            kind: ConditionKind::Quasi,
            margin: self.k.recip().to_f64(),
            margin_exact: S::EXACT.then(|| self.k.recip().to_string()),
            k_estimate: Some(self.k.to_f64()),
            witnesses: self.witness.iter().map(|w| sp.labels_of(w)).collect(),
            budget: None,
            seed: None,
            note: None,
        }
    }
}

/// Least corner ratio over non-degenerate quadruples: at corner `k` the
/// triple is rescaled so its `k`-th entry is 1 and the larger of the other two
/// is measured.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerMargin<S> {
    pub margin: ExtScalar<S>,
    pub witness: Option<([usize; 4], usize)>,
    pub plan: ScanPlan,
}

impl<S: Scalar> CornerMargin<S> {
    /// `1/√margin`, the quasi constant the margin certifies; never below 1,
    /// and 1 when there is no non-degenerate quadruple.
    pub fn k_estimate(&self) -> f64 {
        (1.0 / self.margin.to_f64().sqrt()).max(1.0)
    }

    pub fn report<M: MoebiusStructure<Scalar = S>>(&self, m: &M) -> ConditionReport {
        let (budget, seed) = plan_fields(self.plan);
        ConditionReport {
            kind: ConditionKind::Corner,
            margin: self.margin.to_f64(),
            margin_exact: S::EXACT.then(|| self.margin.to_string()),
            k_estimate: Some(self.k_estimate()),
            witnesses: self.witness.iter().map(|(q, _)| m.point_labels(q)).collect(),
            budget,
            seed,
            note: self.witness.map(|(_, k)| format!("extremal corner {}", k + 1)),
        }
    }
}

pub fn corner_margin<M: MoebiusStructure>(m: &M, plan: ScanPlan) -> Result<CornerMargin<M::Scalar>> {
    let quads = nondegenerate_tuples::<4>(m.size(), plan);
    let values = quads
        .par_iter()
        .map(|&q| {
            let t = to_proj(&m.evaluate(q)?)?;
            let e = t.entries();
            let mut best: Option<(ExtScalar<M::Scalar>, usize)> = None;
            for k in 0..3 {
                let (u, v) = (&e[(k + 1) % 3], &e[(k + 2) % 3]);
                let top = if u > v { u } else { v };
                let r = ExtScalar::Finite(top.clone())
                    .checked_div(&ExtScalar::Finite(e[k].clone()))
                    .ok_or(Error::IndeterminateRatio)?;
                if best.as_ref().is_none_or(|(b, _)| r < *b) {
                    best = Some((r, k));
                }
            }
            Ok(best.map(|(r, k)| (r, q, k)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CornerMargin {
        margin: ExtScalar::Infinite,
        witness: None,
        plan,
    };
    for (r, q, k) in values.into_iter().flatten() {
        if r < out.margin {
            out.margin = r;
            out.witness = Some((q, k));
        }
    }
    Ok(out)
}

/// Corner bound through the point at infinity: with
/// `crt(x,y,z,ω) = (d(x,y) : d(x,z) : d(y,z))`, `ε` is the least
/// `max(d(x,z), d(y,z))/d(x,y)` and `K = 1/ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfinityCorner<S> {
    pub epsilon: ExtScalar<S>,
    pub k: ExtScalar<S>,
    pub witness: Option<[usize; 4]>,
}

impl<S: Scalar> InfinityCorner<S> {
    pub fn report(&self, sp: &FiniteSpace<S>) -> ConditionReport {
        ConditionReport {
            kind: ConditionKind::InfinityCorner,
            margin: self.epsilon.to_f64(),
            margin_exact: S::EXACT.then(|| self.epsilon.to_string()),
            k_estimate: Some(self.k.to_f64()),
            witnesses: self.witness.iter().map(|w| sp.labels_of(w)).collect(),
            budget: None,
            seed: None,
            note: None,
        }
    }
}

pub fn infinity_corner_k<S: Scalar>(sp: &FiniteSpace<S>) -> Result<InfinityCorner<S>> {
    let w = sp
        .infinity()
        .ok_or_else(|| Error::InvalidInput("space has no point at infinity".into()))?;
    let pts: Vec<usize> = (0..sp.len()).filter(|&i| i != w).collect();
    let triples: Vec<[usize; 3]> = nondegenerate_tuples::<3>(pts.len(), ScanPlan::Exhaustive)
        .into_iter()
        .map(|t| t.map(|i| pts[i]))
        .collect();
    let values = triples
        .par_iter()
        .map(|&[x, y, z]| {
            let q = [x, y, z, w];
            let e = crt_of(sp, q)?.entries().clone();
            let top = if e[1] > e[2] { &e[1] } else { &e[2] };
            let r = ExtScalar::Finite(top.clone())
                .checked_div(&ExtScalar::Finite(e[0].clone()))
                .ok_or(Error::IndeterminateRatio)?;
            Ok((r, q))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut epsilon = ExtScalar::Infinite;
    let mut witness = None;
    for (r, q) in values {
        if r < epsilon {
            epsilon = r;
            witness = Some(q);
        }
    }
    // No triple: the inequality holds vacuously with K = 1.
    let k = if witness.is_none() { ExtScalar::one() } else { epsilon.recip() };
    Ok(InfinityCorner { epsilon, k, witness })
}

/// Least entry of the canonical triple over non-degenerate quadruples: the
/// max-norm distance to the boundary of the triangle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryMargin<S> {
    pub margin: ExtScalar<S>,
    pub witness: Option<[usize; 4]>,
    pub plan: ScanPlan,
}

impl<S: Scalar> SymmetryMargin<S> {
    pub fn report<M: MoebiusStructure<Scalar = S>>(&self, m: &M) -> ConditionReport {
        let (budget, seed) = plan_fields(self.plan);
        ConditionReport {
            kind: ConditionKind::Symmetry,
            margin: self.margin.to_f64(),
            margin_exact: S::EXACT.then(|| self.margin.to_string()),
            k_estimate: None,
            witnesses: self.witness.iter().map(|q| m.point_labels(q)).collect(),
            budget,
            seed,
            note: Some("empirical scan of finitely many quadruples; not a proof of the closure condition".into()),
        }
    }
}

pub fn symmetry_margin<M: MoebiusStructure>(m: &M, plan: ScanPlan) -> Result<SymmetryMargin<M::Scalar>> {
    let quads = nondegenerate_tuples::<4>(m.size(), plan);
    let values = quads
        .par_iter()
        .map(|&q| {
            let t = to_proj(&m.evaluate(q)?)?;
            let e = t.entries();
            let low = e.iter().fold(&e[0], |a, b| if b < a { b } else { a });
            Ok((low.clone(), q))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SymmetryMargin {
        margin: ExtScalar::Infinite,
        witness: None,
        plan,
    };
    for (v, q) in values {
        let v = ExtScalar::Finite(v);
        if v < out.margin {
            out.margin = v;
            out.witness = Some(q);
        }
    }
    Ok(out)
}

/// Adjoins `ζ` with `d(ζ,x) = d(x,ζ₀) + 1`, involutes at `ζ` and drops it:
/// `d̃(x,y) = d(x,y)/((d(x,ζ₀)+1)(d(y,ζ₀)+1))`. The old point at infinity
/// becomes an ordinary point at distance `1/(d(x,ζ₀)+1)`.
pub fn boundedify<S: Scalar>(sp: &FiniteSpace<S>, zeta0: usize) -> Result<FiniteSpace<S>> {
    if zeta0 >= sp.len() {
        return Err(Error::InvalidInput(format!("point index {zeta0} out of range")));
    }
    if sp.infinity() == Some(zeta0) {
        return Err(Error::InvalidInput("ζ₀ must not be the point at infinity".into()));
    }
    let n = sp.len();
    let mut label = "zeta".to_string();
    while sp.index_of(&label).is_some() {
        label.push('\'');
    }
    let to_zeta: Vec<ExtScalar<S>> = (0..n).map(|x| sp.d(x, zeta0).add(&ExtScalar::one())).collect();
    // ζ temporarily shares the role of an ordinary point; the old ∞ stays marked.
    let augmented = sp.with_point(label, &to_zeta, false)?;
    let inv = involute(&augmented, n)?;
    let restricted = inv.restrict(&(0..n).collect::<Vec<_>>());
    Ok(restricted)
}
