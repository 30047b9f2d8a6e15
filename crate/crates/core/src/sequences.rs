//! Cauchy diagnostics for sequences and desk-scale completion.
//!
//! Every verdict here is a finite-horizon diagnostic: it reports margins for
//! explicit `(horizon, δ, τ, window)` parameters and says nothing about the
//! asymptotics beyond them.
//!
//! * A pair `(y, z)` is good when `d(x_n, y)` and `d(x_n, z)` stay `≥ δ` on
//!   the tail window `[H/2, H]`.
//! * Condition 3 asks `d(x_n,x_m)d(y,z) / (d(x_n,y)d(x_m,z)) → 0`.
//! * Condition 2 asks the normalized `crt(x_n,x_m,y,z) → (0, ½, ½)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ext::{fp_mul, fp_ratio, ExtScalar};
use crate::fixtures::sample_indices;
use crate::scalar::Scalar;
use crate::scan::{admissible_tuples, ScanPlan};
use crate::space::{materialize, FiniteSpace, Space};
use crate::structure::crt_of;

/// Closed-form limit attached to a sequence; bypasses tail estimation.
#[derive(Clone, Debug, PartialEq)]
pub enum Limit<P> {
    Point(P),
    Infinity,
}

/// A sequence `n ↦ x_n`, `n ≥ 1`, with the horizon used by diagnostics.
#[derive(Clone)]
pub struct SequenceHandle<P> {
    label: String,
    horizon: usize,
    gen: Arc<dyn Fn(usize) -> P + Send + Sync>,
    limit: Option<Limit<P>>,
}

impl<P> fmt::Debug for SequenceHandle<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SequenceHandle({}, horizon {})", self.label, self.horizon)
    }
}

impl<P: Clone + Send + Sync + 'static> SequenceHandle<P> {
    pub fn new(label: impl Into<String>, horizon: usize, gen: impl Fn(usize) -> P + Send + Sync + 'static) -> Self {
        assert!(horizon >= 8, "horizon must be at least 8");
        SequenceHandle {
            label: label.into(),
            horizon,
            gen: Arc::new(gen),
            limit: None,
        }
    }

    pub fn with_limit(mut self, limit: Limit<P>) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        assert!(horizon >= 8, "horizon must be at least 8");
        self.horizon = horizon;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn limit(&self) -> Option<&Limit<P>> {
        self.limit.as_ref()
    }

    pub fn at(&self, n: usize) -> P {
        (self.gen)(n)
    }

    /// The image sequence `f(x_n)`.
    pub fn map<Q: Clone + Send + Sync + 'static>(&self, f: impl Fn(P) -> Q + Send + Sync + 'static) -> SequenceHandle<Q> {
        let f = Arc::new(f);
        let gen = self.gen.clone();
        let g = f.clone();
        SequenceHandle {
            label: self.label.clone(),
            horizon: self.horizon,
            gen: Arc::new(move |n| g(gen(n))),
            limit: self.limit.clone().map(|l| match l {
                Limit::Point(p) => Limit::Point(f(p)),
                Limit::Infinity => Limit::Infinity,
            }),
        }
    }

    /// `x_1, …, x_N` from a table, then constantly the last entry.
    pub fn table(label: impl Into<String>, entries: Vec<P>, horizon: usize) -> Result<Self>
    where
        P: PartialEq,
    {
        let last = entries
            .last()
            .cloned()
            .ok_or_else(|| Error::InvalidInput("empty sequence table".into()))?;
        let entries = Arc::new(entries);
        Ok(SequenceHandle::new(label, horizon, move |n| {
            entries.get(n.max(1) - 1).cloned().unwrap_or_else(|| entries[entries.len() - 1].clone())
        })
        .with_limit(Limit::Point(last)))
    }
}

/// Named closed-form scalar sequences.
#[derive(Clone, Debug, PartialEq)]
pub enum Family<S> {
    /// `1/n`
    Reciprocal,
    /// `(-1)ⁿ/n`
    AlternatingReciprocal,
    /// `slope·n + offset`
    Linear { slope: S, offset: S },
    Constant(S),
}

impl<S: Scalar> Family<S> {
    pub fn value(&self, n: usize) -> S {
        let n = n as i64;
        match self {
            Family::Reciprocal => S::from_ratio(1, n),
            Family::AlternatingReciprocal => S::from_ratio(if n % 2 == 0 { 1 } else { -1 }, n),
            Family::Linear { slope, offset } => slope.clone() * S::from_i64(n) + offset.clone(),
            Family::Constant(c) => c.clone(),
        }
    }

    pub fn limit(&self) -> Limit<S> {
        match self {
            Family::Reciprocal | Family::AlternatingReciprocal => Limit::Point(S::zero()),
            Family::Linear { slope, offset } if slope.is_zero() => Limit::Point(offset.clone()),
            Family::Linear { .. } => Limit::Infinity,
            Family::Constant(c) => Limit::Point(c.clone()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Family::Reciprocal => "1/n".into(),
            Family::AlternatingReciprocal => "(-1)^n/n".into(),
            Family::Linear { slope, offset } => format!("{slope}*n+{offset}"),
            Family::Constant(c) => format!("const {c}"),
        }
    }

    /// The sequence `to_point(value(n))`; with `with_limit` the closed-form
    /// limit is attached when `to_point` accepts it.
    pub fn handle<P: Clone + Send + Sync + 'static>(
        &self,
        horizon: usize,
        to_point: impl Fn(S) -> Option<P> + Send + Sync + 'static,
        with_limit: bool,
    ) -> SequenceHandle<P> {
        let fam = self.clone();
        let to_point = Arc::new(to_point);
        let tp = to_point.clone();
        let seq = SequenceHandle::new(self.name(), horizon, move |n| {
            tp(fam.value(n)).expect("sequence value outside the space")
        });
        if !with_limit {
            return seq;
        }
        match self.limit() {
            Limit::Point(p) => match to_point(p) {
                Some(p) => seq.with_limit(Limit::Point(p)),
                None => seq,
            },
            Limit::Infinity => seq.with_limit(Limit::Infinity),
        }
    }
}

/// Explicit parameters of every diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticParams {
    /// Floor for good-pair tail minima.
    pub delta: f64,
    /// Threshold for the condition 3 ratio and condition 2 residuals.
    pub tau: f64,
    /// Indices sampled from the tail window for `(n, m)` grids.
    pub grid: usize,
    /// Dyadic blocks `[H/2^(j+1), H/2^j]` used for trend slopes.
    pub blocks: usize,
    /// A trend counts as decaying when its log-log slope is below
    /// `-min_decay`; flatter trends are read as non-decaying.
    pub min_decay: f64,
    /// Size of the seeded candidate sample.
    pub candidates: usize,
    pub seed: u64,
}

impl Default for DiagnosticParams {
    fn default() -> Self {
        DiagnosticParams {
            delta: 1e-6,
            tau: 1e-3,
            grid: 64,
            blocks: 5,
            min_decay: 0.1,
            candidates: 32,
            seed: 0,
        }
    }
}

/// `[H/2, H]`
pub fn tail_window(horizon: usize) -> [usize; 2] {
    [(horizon / 2).max(1), horizon]
}

fn early_window(horizon: usize) -> [usize; 2] {
    [(horizon / 8).max(1), (horizon / 4).max(2)]
}

/// Up to `count` indices spread evenly over `[lo, hi]`, endpoints included.
fn spread(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    if hi <= lo || count < 2 {
        return vec![hi];
    }
    let mut out: Vec<usize> = (0..count)
        .map(|k| lo + ((hi - lo) as f64 * k as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

fn dyadic_blocks(horizon: usize, blocks: usize) -> Vec<[usize; 2]> {
    (0..blocks)
        .map(|j| [(horizon >> (j + 1)).max(1), horizon >> j])
        .filter(|[lo, hi]| lo < hi)
        .collect()
}

/// Least-squares slope of `ln v` against `ln n`; zeros count as the smallest
/// positive float. `None` when every value is zero.
fn log_slope(points: &[(usize, f64)]) -> Option<f64> {
    if points.iter().all(|&(_, v)| v == 0.0) {
        return None;
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, v)| ((n as f64).ln(), v.max(f64::MIN_POSITIVE).ln()))
        .collect();
    if xy.len() < 2 {
        return Some(0.0);
    }
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(if sxx == 0.0 { 0.0 } else { sxy / sxx })
}

fn d64<Sp: Space>(sp: &Sp, a: &Sp::Point, b: &Sp::Point) -> ExtScalar<f64> {
    match sp.dist(a, b) {
        ExtScalar::Finite(v) => ExtScalar::Finite(v.to_f64()),
        ExtScalar::Infinite => ExtScalar::Infinite,
    }
}

/// `(a·b)/(c·d)` with infinite distances cancelling; `0/0` reads as `∞` so
/// that an undefined ratio never passes a threshold.
fn ratio4(a: &ExtScalar<f64>, b: &ExtScalar<f64>, c: &ExtScalar<f64>, d: &ExtScalar<f64>) -> f64 {
    fp_ratio(&fp_mul(a, b), &fp_mul(c, d)).map_or(f64::INFINITY, |v| v.to_f64())
}

fn ser_f64<Ser: serde::Serializer>(v: &f64, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn ser_opt_f64<Ser: serde::Serializer>(v: &Option<f64>, s: Ser) -> std::result::Result<Ser::Ok, Ser::Error> {
    match v {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodPairReport {
    pub pair: [String; 2],
    /// Positions in the candidate list.
    pub indices: [usize; 2],
    /// Smaller of the two tail minima.
    #[serde(serialize_with = "ser_f64")]
    pub floor: f64,
    pub window: [usize; 2],
}

/// Tail minimum of `d(x_n, c)` for each candidate.
fn tail_minima<Sp: Space>(seq: &SequenceHandle<Sp::Point>, sp: &Sp, candidates: &[Sp::Point]) -> Vec<f64> {
    let [lo, hi] = tail_window(seq.horizon());
    let tail: Vec<Sp::Point> = (lo..=hi).map(|n| seq.at(n)).collect();
    candidates
        .par_iter()
        .map(|c| {
            tail.iter()
                .map(|x| d64(sp, x, c).to_f64())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Unordered candidate pairs whose tail minima both stay `≥ δ`, by
/// decreasing floor.
pub fn good_pairs<Sp: Space>(
    seq: &SequenceHandle<Sp::Point>,
    sp: &Sp,
    candidates: &[Sp::Point],
    params: &DiagnosticParams,
) -> Vec<GoodPairReport> {
    let minima = tail_minima(seq, sp, candidates);
    pairs_from_minima(&minima, sp, candidates, params.delta, tail_window(seq.horizon()))
}

fn pairs_from_minima<Sp: Space>(
    minima: &[f64],
    sp: &Sp,
    candidates: &[Sp::Point],
    delta: f64,
    window: [usize; 2],
) -> Vec<GoodPairReport> {
    let mut out = Vec::new();
    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            if minima[i] >= delta && minima[j] >= delta && candidates[i] != candidates[j] {
                out.push(GoodPairReport {
                    pair: [sp.label(&candidates[i]), sp.label(&candidates[j])],
                    indices: [i, j],
                    floor: minima[i].min(minima[j]),
                    window,
                });
            }
        }
    }
    out.sort_by(|a, b| b.floor.total_cmp(&a.floor).then(a.indices.cmp(&b.indices)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition3Report {
    pub pair: [String; 2],
    /// Largest ratio over the tail grid.
    #[serde(serialize_with = "ser_f64")]
    pub max_tail: f64,
    /// Log-log slope of block maxima; `None` when the ratio vanishes
    /// identically.
    #[serde(serialize_with = "ser_opt_f64")]
    pub slope: Option<f64>,
    pub tau: f64,
    pub satisfied: bool,
    pub window: [usize; 2],
}

impl Condition3Report {
    fn decays(&self, min_decay: f64) -> bool {
        self.slope.is_none_or(|s| s < -min_decay)
    }
}

fn grid_max<P>(xs: &[(usize, P)], value: impl Fn(&P, &P) -> f64 + Sync) -> f64
where
    P: Sync,
{
    xs.par_iter()
        .map(|(n, a)| {
            xs.iter()
                .filter(|(m, _)| m != n)
                .map(|(_, b)| value(a, b))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn points_at<P: Clone + Send + Sync + 'static>(seq: &SequenceHandle<P>, idx: &[usize]) -> Vec<(usize, P)> {
    idx.iter().map(|&n| (n, seq.at(n))).collect()
}

/// Condition 3 on the pair `(y, z)`: satisfied at the horizon when the tail
/// maximum is `≤ τ` and the block maxima decay (slope below `-min_decay`).
pub fn condition3<Sp: Space>(
    seq: &SequenceHandle<Sp::Point>,
    y: &Sp::Point,
    z: &Sp::Point,
    sp: &Sp,
    params: &DiagnosticParams,
) -> Condition3Report {
    let dyz = d64(sp, y, z);
    let value = |a: &Sp::Point, b: &Sp::Point| ratio4(&d64(sp, a, b), &dyz, &d64(sp, a, y), &d64(sp, b, z));
    let window = tail_window(seq.horizon());
    let max_tail = grid_max(&points_at(seq, &spread(window[0], window[1], params.grid)), value);
    let blocks: Vec<(usize, f64)> = dyadic_blocks(seq.horizon(), params.blocks)
        .into_iter()
        .map(|[lo, hi]| (lo, grid_max(&points_at(seq, &spread(lo, hi, 16)), value)))
        .collect();
    let mut r = Condition3Report {
        pair: [sp.label(y), sp.label(z)],
        max_tail,
        slope: log_slope(&blocks),
        tau: params.tau,
        satisfied: false,
        window,
    };
    r.satisfied = r.max_tail <= params.tau && r.decays(params.min_decay);
    r
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition2Report {
    pub pair: [String; 2],
    /// Largest max-norm distance of the normalized `crt(x_n,x_m,y,z)` from
    /// `(0, ½, ½)` over the tail grid.
    #[serde(serialize_with = "ser_f64")]
    pub residual: f64,
    /// Largest `|d(x_n,y)d(x_m,z) / (d(x_n,z)d(x_m,y)) − 1|`.
    #[serde(serialize_with = "ser_f64")]
    pub middle_ratio_deviation: f64,
    pub tau: f64,
    pub satisfied: bool,
    pub window: [usize; 2],
}

/// Condition 2 on the pair `(y, z)`; satisfied when both residuals are `≤ τ`.
pub fn condition2<Sp: Space>(
    seq: &SequenceHandle<Sp::Point>,
    y: &Sp::Point,
    z: &Sp::Point,
    sp: &Sp,
    params: &DiagnosticParams,
) -> Condition2Report {
    let window = tail_window(seq.horizon());
    let xs = points_at(seq, &spread(window[0], window[1], params.grid));
    let residual = grid_max(&xs, |a, b| match crt_points_f64(sp, [a, b, y, z]) {
        Some([p, q, r]) => p.abs().max((q - 0.5).abs()).max((r - 0.5).abs()),
        None => f64::INFINITY,
    });
    let middle = grid_max(&xs, |a, b| {
        let r = ratio4(&d64(sp, a, y), &d64(sp, b, z), &d64(sp, a, z), &d64(sp, b, y));
        (r - 1.0).abs()
    });
    Condition2Report {
        pair: [sp.label(y), sp.label(z)],
        residual,
        middle_ratio_deviation: middle,
        tau: params.tau,
        satisfied: residual <= params.tau && middle <= params.tau,
        window,
    }
}

/// Normalized cross-ratio triple in float; `None` when degenerate.
fn crt_points_f64<Sp: Space>(sp: &Sp, q: [&Sp::Point; 4]) -> Option<[f64; 3]> {
    let [w, x, y, z] = q;
    let raw = [
        fp_mul(&d64(sp, w, x), &d64(sp, y, z)),
        fp_mul(&d64(sp, w, y), &d64(sp, z, x)),
        fp_mul(&d64(sp, w, z), &d64(sp, x, y)),
    ];
    let t = crate::triples::normalize_delta(raw).ok()?;
    Some(*t.entries())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    BoundedCauchy,
    Divergent,
    Inconclusive,
    /// Condition 3 fails with a non-decaying tail.
    NotCauchy,
}

impl Classification {
    pub fn is_cauchy(self) -> bool {
        matches!(self, Classification::BoundedCauchy | Classification::Divergent)
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::BoundedCauchy => "bounded-cauchy",
            Classification::Divergent => "divergent",
            Classification::Inconclusive => "inconclusive",
            Classification::NotCauchy => "not-cauchy",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyVerdict {
    pub sequence: String,
    pub horizon: usize,
    pub params: DiagnosticParams,
    pub classification: Classification,
    pub good_pair_count: usize,
    pub condition3: Condition3Report,
    pub condition2: Condition2Report,
    /// Reference point certifying boundedness.
    pub reference: Option<String>,
}

/// Seeded sample of `params.candidates` points of `pool` plus `anchors`.
pub fn default_candidates<P: Clone + PartialEq>(pool: &[P], anchors: &[P], params: &DiagnosticParams) -> Vec<P> {
    let mut out: Vec<P> = sample_indices(pool.len(), params.candidates, params.seed)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect();
    for a in anchors {
        if !out.contains(a) {
            out.push(a.clone());
        }
    }
    out
}

fn window_extrema<Sp: Space>(
    seq: &SequenceHandle<Sp::Point>,
    sp: &Sp,
    r: &Sp::Point,
    [lo, hi]: [usize; 2],
) -> (f64, f64) {
    (lo..=hi)
        .map(|n| d64(sp, &seq.at(n), r).to_f64())
        .fold((f64::INFINITY, 0.0), |(a, b), v| (a.min(v), b.max(v)))
}

/// Condition 3 on the widest good pair, then the bounded/divergent split:
///
/// * bounded: some reference keeps `max d(x_n, r)` on `[H/2, H]` within twice
///   its value on `[H/8, H/4]`, and the tail diameter is `≤ τ·max(1, that bound)`;
/// * divergent: for every reference `min d(x_n, r)` on `[H/2, H]` is at least
///   twice its value on `[H/8, H/4]`;
/// * otherwise inconclusive. A failing condition 3 whose block maxima do not
///   decay is reported as not Cauchy.
pub fn classify<Sp: Space>(
    seq: &SequenceHandle<Sp::Point>,
    sp: &Sp,
    candidates: &[Sp::Point],
    params: &DiagnosticParams,
) -> Result<CauchyVerdict> {
    let pairs = good_pairs(seq, sp, candidates, params);
    let best = pairs.first().ok_or(Error::NoGoodPair)?;
    let [i, j] = best.indices;
    let (y, z) = (&candidates[i], &candidates[j]);
    let c3 = condition3(seq, y, z, sp, params);
    let c2 = condition2(seq, y, z, sp, params);
    let h = seq.horizon();
    let (late, early) = (tail_window(h), early_window(h));
    let refs: Vec<&Sp::Point> = candidates
        .iter()
        .filter(|c| sp.infinity_point().as_ref() != Some(*c))
        .collect();
    let mut reference = None;
    let classification = if c3.satisfied {
        let mut bounded: Option<(f64, &Sp::Point)> = None;
        let mut divergent = !refs.is_empty();
        for r in &refs {
            let (emin, emax) = window_extrema(seq, sp, r, early);
            let (lmin, lmax) = window_extrema(seq, sp, r, late);
            if lmax.is_finite() && lmax <= 2.0 * emax && bounded.is_none_or(|(b, _)| lmax < b) {
                bounded = Some((lmax, *r));
            }
            if !(lmin >= 2.0 * emin) {
                divergent = false;
            }
        }
        let xs = points_at(seq, &spread(late[0], late[1], params.grid));
        let diam = grid_max(&xs, |a, b| d64(sp, a, b).to_f64());
        match bounded {
            Some((b, r)) if diam <= params.tau * b.max(1.0) => {
                reference = Some(sp.label(r));
                Classification::BoundedCauchy
            }
            _ if divergent => Classification::Divergent,
            _ => Classification::Inconclusive,
        }
    } else if c3.decays(params.min_decay) {
        Classification::Inconclusive
    } else {
        Classification::NotCauchy
    };
    Ok(CauchyVerdict {
        sequence: seq.label().to_string(),
        horizon: h,
        params: *params,
        classification,
        good_pair_count: pairs.len(),
        condition3: c3,
        condition2: c2,
        reference,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub first: String,
    pub second: String,
    pub equivalent: bool,
    pub common_pairs: usize,
    /// Per-pair diagnostics of `d(x_n,x'_n)d(y,z) / (d(x_n,y)d(x'_n,z))`;
    /// failing pairs first, truncated to 50.
    pub pairs: Vec<Condition3Report>,
}

/// Equivalent at the horizon when the single-index ratio
/// `d(x_n,x'_n)d(y,z) / (d(x_n,y)d(x'_n,z))` passes the condition 3 test on
/// every pair good for both sequences.
pub fn cauchy_equivalent<Sp: Space>(
    s1: &SequenceHandle<Sp::Point>,
    s2: &SequenceHandle<Sp::Point>,
    sp: &Sp,
    candidates: &[Sp::Point],
    params: &DiagnosticParams,
) -> Result<EquivalenceReport> {
    let h = s1.horizon().min(s2.horizon());
    let (s1, s2) = (s1.clone().with_horizon(h), s2.clone().with_horizon(h));
    let g1 = good_pairs(&s1, sp, candidates, params);
    let g2: std::collections::HashSet<[usize; 2]> =
        good_pairs(&s2, sp, candidates, params).into_iter().map(|g| g.indices).collect();
    let common: Vec<&GoodPairReport> = g1.iter().filter(|g| g2.contains(&g.indices)).collect();
    if common.is_empty() {
        return Err(Error::NoCommonGoodPair);
    }
    let window = tail_window(h);
    let tail: Vec<(usize, Sp::Point, Sp::Point)> = spread(window[0], window[1], params.grid)
        .into_iter()
        .map(|n| (n, s1.at(n), s2.at(n)))
        .collect();
    let blocks: Vec<(usize, Vec<(Sp::Point, Sp::Point)>)> = dyadic_blocks(h, params.blocks)
        .into_iter()
        .map(|[lo, hi]| (lo, spread(lo, hi, 16).into_iter().map(|n| (s1.at(n), s2.at(n))).collect()))
        .collect();
    let mut reports: Vec<Condition3Report> = common
        .par_iter()
        .map(|g| {
            let [i, j] = g.indices;
            let (y, z) = (&candidates[i], &candidates[j]);
            let dyz = d64(sp, y, z);
            let value = |a: &Sp::Point, b: &Sp::Point| ratio4(&d64(sp, a, b), &dyz, &d64(sp, a, y), &d64(sp, b, z));
            let max_tail = tail.iter().map(|(_, a, b)| value(a, b)).fold(0.0, f64::max);
            let pts: Vec<(usize, f64)> = blocks
                .iter()
                .map(|(lo, xs)| (*lo, xs.iter().map(|(a, b)| value(a, b)).fold(0.0, f64::max)))
                .collect();
            let mut r = Condition3Report {
                pair: g.pair.clone(),
                max_tail,
                slope: log_slope(&pts),
                tau: params.tau,
                satisfied: false,
                window,
            };
            r.satisfied = r.max_tail <= params.tau && r.decays(params.min_decay);
            r
        })
        .collect();
    let equivalent = reports.iter().all(|r| r.satisfied);
    reports.sort_by_key(|r| r.satisfied);
    let common_pairs = reports.len();
    reports.truncate(crate::report::MAX_WITNESSES);
    Ok(EquivalenceReport {
        first: s1.label().to_string(),
        second: s2.label().to_string(),
        equivalent,
        common_pairs,
        pairs: reports,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum AdjoinOutcome {
    /// Added as an ordinary point.
    New { index: usize },
    /// Added as the point at infinity.
    Infinity { index: usize },
    /// The limit is already a point of the space.
    Existing { label: String },
    /// Equivalent to an earlier sequence.
    Duplicate { of: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjoinedPoint {
    pub label: String,
    pub classification: Classification,
    #[serde(flatten)]
    pub outcome: AdjoinOutcome,
    /// Largest tail oscillation among the estimated distances; 0 for
    /// closed-form limits.
    #[serde(serialize_with = "ser_f64")]
    pub estimation_error: f64,
    /// Largest `d(x_n, limit)` over the tail grid.
    #[serde(serialize_with = "ser_opt_f64")]
    pub d_limit_residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdjoinReport {
    pub points: Vec<AdjoinedPoint>,
    pub crt_checked: u64,
    pub crt_mismatches: u64,
    pub valid: bool,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct Adjoined<S> {
    pub space: FiniteSpace<S>,
    pub report: AdjoinReport,
}

/// What a new point is measured against: an old point, or another new point.
enum Anchor<'a, P> {
    Old(&'a P),
    Seq(&'a SequenceHandle<P>),
}

fn anchor_at<P: Clone + Send + Sync + 'static>(a: &Anchor<'_, P>, n: usize) -> P {
    match a {
        Anchor::Old(p) => (*p).clone(),
        Anchor::Seq(s) => match s.limit() {
            Some(Limit::Point(p)) => p.clone(),
            _ => s.at(n),
        },
    }
}

/// Limit of `d(x_n, a_n)`: exact from closed-form limits, otherwise the value
/// at the horizon with oscillation `max − min` over `[H/2, H]`.
fn limit_distance<Sp: Space>(
    sp: &Sp,
    seq: &SequenceHandle<Sp::Point>,
    other: &Anchor<'_, Sp::Point>,
    tau: f64,
) -> Result<(ExtScalar<Sp::Scalar>, f64)> {
    let hint = |s: &SequenceHandle<Sp::Point>| match s.limit() {
        Some(Limit::Point(p)) => Some(p.clone()),
        _ => None,
    };
    let other_hint = match other {
        Anchor::Old(p) => Some((*p).clone()),
        Anchor::Seq(s) => hint(s),
    };
    if let (Some(p), Some(q)) = (hint(seq), other_hint) {
        return Ok((sp.dist(&p, &q), 0.0));
    }
    let h = seq.horizon();
    let [lo, hi] = tail_window(h);
    let xs = hint(seq);
    let at = |n: usize| xs.clone().unwrap_or_else(|| seq.at(n));
    let value = sp.dist(&at(h), &anchor_at(other, h));
    let (mn, mx) = (lo..=hi)
        .into_par_iter()
        .map(|n| sp.dist(&at(n), &anchor_at(other, n)).to_f64())
        .fold(|| (f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)));
    let oscillation = if mn.is_infinite() && mx.is_infinite() { 0.0 } else { mx - mn };
    let scale = value.to_f64().abs().max(1.0);
    if !(oscillation <= tau * scale) {
        return Err(Error::NonConvergentTail {
            what: format!("d({}, {})", seq.label(), anchor_label(sp, other)),
            oscillation,
            tolerance: tau * scale,
        });
    }
    Ok((value, oscillation))
}

fn anchor_label<Sp: Space>(sp: &Sp, a: &Anchor<'_, Sp::Point>) -> String {
    match a {
        Anchor::Old(p) => sp.label(p),
        Anchor::Seq(s) => s.label().to_string(),
    }
}

/// Adjoins the limits of Cauchy sequences to the finite sample `old` of `sp`.
///
/// Each sequence must classify as Cauchy against `default_candidates(old)`.
/// Sequences equivalent to an earlier one, limits at distance zero from an
/// old point, and divergent sequences when `old` already holds the point at
/// infinity add nothing. The output is checked for validity, for unchanged
/// cross ratios on old quadruples (all of them up to 12 old points, a seeded
/// sample beyond), and for each new point being a `d`-limit of its sequence.
pub fn adjoin_limits<Sp: Space>(
    sp: &Sp,
    old: &[Sp::Point],
    seqs: &[SequenceHandle<Sp::Point>],
    params: &DiagnosticParams,
) -> Result<Adjoined<Sp::Scalar>> {
    let base = materialize(sp, old)?;
    let candidates = default_candidates(old, &[], params);
    let mut points: Vec<AdjoinedPoint> = Vec::new();
    let mut kept: Vec<&SequenceHandle<Sp::Point>> = Vec::new();
    let mut new_rows: Vec<Vec<ExtScalar<Sp::Scalar>>> = Vec::new();
    let mut infinity = base.infinity();
    let n_old = old.len();
    for seq in seqs {
        let verdict = classify(seq, sp, &candidates, params)?;
        let class = verdict.classification;
        let divergent = class == Classification::Divergent || matches!(seq.limit(), Some(Limit::Infinity));
        if !class.is_cauchy() {
            return Err(Error::InvalidInput(format!(
                "sequence {} is not Cauchy at the horizon ({class})",
                seq.label()
            )));
        }
        let mut entry = AdjoinedPoint {
            label: seq.label().to_string(),
            classification: class,
            outcome: AdjoinOutcome::New { index: 0 },
            estimation_error: 0.0,
            d_limit_residual: None,
        };
        if divergent {
            entry.outcome = match infinity {
                Some(w) if w < n_old => AdjoinOutcome::Existing {
                    label: base.label(w).to_string(),
                },
                Some(w) => AdjoinOutcome::Duplicate {
                    of: points.iter().find(|p| p.outcome == AdjoinOutcome::Infinity { index: w }).map_or_else(String::new, |p| p.label.clone()),
                },
                None => {
                    let index = n_old + kept.len();
                    infinity = Some(index);
                    kept.push(seq);
                    new_rows.push(Vec::new());
                    AdjoinOutcome::Infinity { index }
                }
            };
            points.push(entry);
            continue;
        }
        if let Some(dup) = kept
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(n_old + i) != infinity)
            .find_map(|(_, k)| match cauchy_equivalent(seq, k, sp, &candidates, params) {
                Ok(r) if r.equivalent => Some(Ok(k.label().to_string())),
                Ok(_) => None,
                Err(e) => Some(Err(e)),
            })
        {
            entry.outcome = AdjoinOutcome::Duplicate { of: dup? };
            points.push(entry);
            continue;
        }
        let mut row = Vec::with_capacity(n_old + kept.len());
        let mut err: f64 = 0.0;
        for p in old {
            let (v, e) = limit_distance(sp, seq, &Anchor::Old(p), params.tau)?;
            err = err.max(e);
            row.push(v);
        }
        if let Some(y) = row.iter().position(|v| v.to_f64() <= err.max(params.delta)) {
            entry.outcome = AdjoinOutcome::Existing {
                label: base.label(y).to_string(),
            };
            points.push(entry);
            continue;
        }
        for (k, other) in kept.iter().enumerate() {
            if Some(n_old + k) == infinity {
                row.push(ExtScalar::Infinite);
                continue;
            }
            let (v, e) = limit_distance(sp, seq, &Anchor::Seq(other), params.tau)?;
            err = err.max(e);
            row.push(v);
        }
        let [lo, hi] = tail_window(seq.horizon());
        let limit = match seq.limit() {
            Some(Limit::Point(p)) => p.clone(),
            _ => seq.at(hi),
        };
        let residual = spread(lo, hi, params.grid)
            .into_iter()
            .map(|n| d64(sp, &seq.at(n), &limit).to_f64())
            .fold(0.0, f64::max);
        entry.estimation_error = err;
        entry.d_limit_residual = Some(residual);
        entry.outcome = AdjoinOutcome::New {
            index: n_old + kept.len(),
        };
        kept.push(seq);
        new_rows.push(row);
        points.push(entry);
    }

    let total = n_old + kept.len();
    let mut labels: Vec<String> = base.labels().to_vec();
    labels.extend(kept.iter().map(|s| s.label().to_string()));
    // Rows of new points hold distances to old points and earlier new points.
    let space = FiniteSpace::from_fn(labels, infinity, |i, j| {
        if i == j {
            return ExtScalar::zero();
        }
        let (a, b) = if i > j { (i, j) } else { (j, i) };
        if a < n_old {
            base.d(a, b).clone()
        } else if Some(a) == infinity || Some(b) == infinity {
            ExtScalar::Infinite
        } else {
            new_rows[a - n_old][b].clone()
        }
    })?;
    let space = if Sp::Scalar::EXACT { space } else { space.with_tol(base.tol()) };
    debug_assert_eq!(space.len(), total);

    let plan = ScanPlan::auto(n_old, 12, 20_000, params.seed);
    let quads = admissible_tuples::<4>(n_old, plan);
    let mismatches = quads
        .par_iter()
        .filter(|&&q| match (crt_of(&base, q), crt_of(&space, q)) {
            (Ok(a), Ok(b)) => !a.close(&b, space.tol()),
            (Err(_), Err(_)) => false,
            _ => true,
        })
        .count() as u64;
    let valid = space.validate().passed();
    let limits_ok = points.iter().all(|p| p.d_limit_residual.is_none_or(|r| r <= params.tau));
    let report = AdjoinReport {
        points,
        crt_checked: quads.len() as u64,
        crt_mismatches: mismatches,
        valid,
        passed: valid && mismatches == 0 && limits_ok,
    };
    Ok(Adjoined { space, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{circle_points, punctured_interval, Circle, Line, LinePoint};
    use crate::scalar::{ratio, Rational};
    use crate::structure::{check_axioms, check_equivalence, AxiomPlan};

    fn at(x: f64) -> LinePoint<f64> {
        LinePoint::At(x)
    }

    fn line_seq(label: &str, h: usize, f: impl Fn(usize) -> f64 + Send + Sync + 'static) -> SequenceHandle<LinePoint<f64>> {
        SequenceHandle::new(label, h, move |n| LinePoint::At(f(n)))
    }

    fn grid(k: usize) -> Vec<LinePoint<f64>> {
        (1..=k).map(|i| at(i as f64 / k as f64)).collect()
    }

    #[test]
    fn good_pairs_examples() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let cands = [at(0.0), at(1.0), at(2.0)];
        let constant = line_seq("c", 1000, |_| 5.0);
        assert_eq!(good_pairs(&constant, &sp, &cands, &p).len(), 3);
        let to_zero = line_seq("t", 1000, |n| 1e-9 / n as f64);
        let g = good_pairs(&to_zero, &sp, &cands, &p);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].pair, ["1".to_string(), "2".to_string()]);
    }

    #[test]
    fn condition3_closed_form() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let seq = line_seq("1/n", 10_000, |n| 1.0 / n as f64);
        let r = condition3(&seq, &at(1.0 / 3.0), &at(2.0 / 3.0), &sp, &p);
        assert!(r.satisfied, "{r:?}");
        // The largest ratio on the tail grid is at n = H/2, m = H.
        let (n, m) = (5000.0, 10_000.0);
        let want = (1.0 / n - 1.0 / m) * (1.0 / 3.0) / ((1.0 / 3.0 - 1.0 / n) * (2.0 / 3.0 - 1.0 / m));
        assert!((r.max_tail - want).abs() < 1e-12, "{} vs {want}", r.max_tail);
        let constant = line_seq("c", 10_000, |_| 0.5);
        let r = condition3(&constant, &at(0.1), &at(0.9), &sp, &p);
        assert_eq!(r.max_tail, 0.0);
        assert_eq!(r.slope, None);
        assert!(r.satisfied);
    }

    #[test]
    fn condition2_metric_and_divergent() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let seq = line_seq("1/n", 10_000, |n| 1.0 / n as f64);
        assert!(condition2(&seq, &at(0.25), &at(0.75), &sp, &p).satisfied);
        let up = line_seq("n", 10_000, |n| n as f64);
        let r = condition2(&up, &at(0.0), &at(3.0), &sp, &p);
        assert!(r.residual < 1e-3, "{r:?}");
    }

    #[test]
    fn circle_pairs_match_the_narrative() {
        let sp = Circle::<f64>::new();
        let p = DiagnosticParams::default();
        let seq = Family::AlternatingReciprocal.handle(10_000, Circle::<f64>::point, false);
        let bad = (1.5, 2.5);
        let c3 = condition3(&seq, &bad.0, &bad.1, &sp, &p);
        let c2 = condition2(&seq, &bad.0, &bad.1, &sp, &p);
        assert!(c3.satisfied && !c2.satisfied, "{c3:?} {c2:?}");
        let c3 = condition3(&seq, &1.0, &2.0, &sp, &p);
        let c2 = condition2(&seq, &1.0, &2.0, &sp, &p);
        assert!(c3.satisfied && c2.satisfied, "{c3:?} {c2:?}");
        let cands = default_candidates(&circle_points::<f64>(64), &[1.0, 2.0, 1.5, 2.5], &p);
        let g = good_pairs(&seq, &sp, &cands, &p);
        assert!(g.iter().any(|g| g.pair == ["1.5".to_string(), "2.5".to_string()]));
    }

    #[test]
    fn classify_examples() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let cands = grid(20);
        let v = classify(&line_seq("1/n", 10_000, |n| 1.0 / n as f64), &sp, &cands, &p).unwrap();
        assert_eq!(v.classification, Classification::BoundedCauchy);
        let ints: Vec<_> = (0..20).map(|k| at(k as f64)).collect();
        let v = classify(&line_seq("n", 10_000, |n| n as f64), &sp, &ints, &p).unwrap();
        assert_eq!(v.classification, Classification::Divergent);
        let v = classify(&line_seq("0/1", 10_000, |n| (n % 2) as f64), &sp, &ints, &p).unwrap();
        assert_eq!(v.classification, Classification::NotCauchy);
        let lonely = [at(0.0)];
        assert!(matches!(
            classify(&line_seq("c", 100, |_| 1.0), &sp, &lonely, &p),
            Err(Error::NoGoodPair)
        ));
    }

    #[test]
    fn condition3_propagates_to_other_pairs() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let seq = line_seq("1/n", 10_000, |n| 1.0 / n as f64);
        let cands = grid(10);
        let pairs = good_pairs(&seq, &sp, &cands, &p);
        let first = &pairs[0];
        let r0 = condition3(&seq, &cands[first.indices[0]], &cands[first.indices[1]], &sp, &p);
        assert!(r0.satisfied);
        let k2 = 4.0;
        let d0 = (first.indices[0] as f64 - first.indices[1] as f64).abs();
        for g in &pairs {
            let r = condition3(&seq, &cands[g.indices[0]], &cands[g.indices[1]], &sp, &p);
            let d = (g.indices[0] as f64 - g.indices[1] as f64).abs();
            let slack = (k2 * d / d0).max(1.0);
            // Pairs near the limit need the floor ratio as well.
            let floor = first.floor / g.floor;
            assert!(r.max_tail <= p.tau * slack * floor, "{g:?} {r:?}");
        }
    }

    #[test]
    fn classify_is_moebius_invariant() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let cands = grid(20);
        let scale = |q: LinePoint<f64>| match q {
            LinePoint::At(x) => LinePoint::At(3.0 * x + 1.0),
            q => q,
        };
        let image: Vec<_> = cands.iter().cloned().map(scale).collect();
        for seq in [
            line_seq("1/n", 10_000, |n| 1.0 / n as f64),
            line_seq("n", 10_000, |n| n as f64),
            line_seq("alt", 10_000, |n| 0.25 + 0.5 * (n % 2) as f64),
        ] {
            let a = classify(&seq, &sp, &cands, &p).unwrap().classification;
            let b = classify(&seq.map(scale), &sp, &image, &p).unwrap().classification;
            assert_eq!(a, b, "{}", seq.label());
        }
    }

    #[test]
    fn equivalence_examples() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let cands = grid(20)[2..18].to_vec();
        let a = line_seq("1/n", 10_000, |n| 1.0 / n as f64);
        let b = line_seq("1/(n+1)", 10_000, |n| 1.0 / (n + 1) as f64);
        let c = line_seq("1-1/n", 10_000, |n| 1.0 - 1.0 / n as f64);
        assert!(cauchy_equivalent(&a, &b, &sp, &cands, &p).unwrap().equivalent);
        assert!(cauchy_equivalent(&a, &a, &sp, &cands, &p).unwrap().equivalent);
        assert!(!cauchy_equivalent(&a, &c, &sp, &cands, &p).unwrap().equivalent);
        let two = [at(0.0), at(1.0)];
        let d = line_seq("c", 100, |_| 0.0);
        assert!(matches!(
            cauchy_equivalent(&d, &d, &sp, &two, &p),
            Err(Error::NoCommonGoodPair)
        ));
    }

    fn rational_grid(n: i64) -> Vec<LinePoint<Rational>> {
        (1..=n).map(|k| LinePoint::At(ratio(k, n))).collect()
    }

    #[test]
    fn adjoin_reciprocal_to_punctured_interval() {
        let sp = Line::<Rational>::new();
        let p = DiagnosticParams::default();
        let old = rational_grid(20);
        let seq = Family::Reciprocal.handle(10_000, |x| Some(LinePoint::At(x)), true);
        let out = adjoin_limits(&sp, &old, &[seq], &p).unwrap();
        assert!(out.report.passed, "{:?}", out.report);
        assert_eq!(out.space.len(), 21);
        assert_eq!(out.space.d(20, 3), &ExtScalar::Finite(ratio(4, 20)));
        let axioms = check_axioms(&out.space, AxiomPlan::for_size(21, 3000, 1));
        assert!(axioms.passed());
        assert_eq!(out.space, punctured_interval(20).with_point("1/n".into(), &(1..=20).map(|k| ExtScalar::Finite(ratio(k, 20))).collect::<Vec<_>>(), false).unwrap());
    }

    #[test]
    fn adjoin_estimates_without_closed_form() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let old = grid(10);
        let seq = line_seq("1/n", 10_000, |n| 1.0 / n as f64);
        let out = adjoin_limits(&sp, &old, &[seq.clone(), seq.map(|q| q)], &p).unwrap();
        assert!(out.report.passed, "{:?}", out.report);
        assert_eq!(out.space.len(), 11);
        assert!(matches!(out.report.points[1].outcome, AdjoinOutcome::Duplicate { .. }));
        let e = out.report.points[0].estimation_error;
        assert!((out.space.d(10, 0).to_f64() - 0.1).abs() <= e + 1e-12);
    }

    #[test]
    fn adjoin_divergent_gives_infinity() {
        let sp = Line::<Rational>::new();
        let p = DiagnosticParams::default();
        let old: Vec<_> = (0..6).map(|k| LinePoint::At(ratio(k, 1))).collect();
        let seq = Family::Linear {
            slope: ratio(1, 1),
            offset: ratio(0, 1),
        }
        .handle(10_000, |x| Some(LinePoint::At(x)), false);
        let out = adjoin_limits(&sp, &old, &[seq], &p).unwrap();
        assert!(out.report.passed);
        assert_eq!(out.space.infinity(), Some(6));
        assert!(out.space.d(6, 2).is_infinite());
    }

    #[test]
    fn adjoin_eventually_constant_is_a_no_op() {
        let sp = crate::fixtures::random_metric(6, 3);
        let p = DiagnosticParams::default();
        let old: Vec<usize> = (0..6).collect();
        let seq = SequenceHandle::table("t", vec![0, 4, 1, 2, 2], 1000).unwrap();
        let out = adjoin_limits(&sp, &old, &[seq], &p).unwrap();
        assert_eq!(out.space, sp);
        assert_eq!(
            out.report.points[0].outcome,
            AdjoinOutcome::Existing { label: "p2".into() }
        );
        let r = check_equivalence(&sp, &out.space, &old, ScanPlan::Exhaustive, ScanPlan::Exhaustive);
        assert!(r.passed());
    }

    #[test]
    fn non_cauchy_is_refused() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let old: Vec<_> = (0..6).map(|k| at(k as f64)).collect();
        let seq = line_seq("0/1", 1000, |n| (n % 2) as f64);
        assert!(matches!(adjoin_limits(&sp, &old, &[seq], &p), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn reports_serialize() {
        let sp = Line::<f64>::new();
        let p = DiagnosticParams::default();
        let v = classify(&line_seq("1/n", 1000, |n| 1.0 / n as f64), &sp, &grid(8), &p).unwrap();
        let j = serde_json::to_value(&v).unwrap();
        assert_eq!(j["classification"], "bounded-cauchy");
        assert_eq!(j["params"]["tau"], 1e-3);
    }
}
