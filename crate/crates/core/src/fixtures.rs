//! Fixture spaces: procedural presentations and finite generators.
//!
//! Procedural spaces ([`Circle`], [`DoubledZeroLine`], [`Line`]) implement
//! [`Space`] on their own point types; the `*_space` functions sample them on
//! grids. Random generators are deterministic in their seed.

use std::fmt;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ext::ExtScalar;
use crate::scalar::{ratio, Rational, Scalar};
use crate::space::{materialize, FiniteSpace, Space};
use crate::structure::involute;

/// The circle `ℝ/4ℤ` with the class of `0` removed, points given by their
/// representative in `(0, 4)`.
///
/// Points on the same or adjacent quarter segments are at arc distance;
/// points on opposite open segments `(0,1)|(2,3)` and `(1,2)|(3,4)` are at
/// twice the difference of representatives. Pairs on segment boundaries use
/// the first case that matches in the order: both in `(0,2]`, both in
/// `[1,3]`, both in `[2,4)`, both in `[-1,1]` after shifting `[3,4)` down by 4.
#[derive(Clone, Copy, Debug, Default)]
pub struct Circle<S>(std::marker::PhantomData<S>);

impl<S: Scalar> Circle<S> {
    pub fn new() -> Self {
        Circle(std::marker::PhantomData)
    }

    /// Representative in `(0, 4)` of a real number; `None` for the removed
    /// point.
    pub fn point(t: S) -> Option<S> {
        let four = S::from_i64(4);
        let mut t = t;
        while t < S::zero() {
            t = t + four.clone();
        }
        while t >= four {
            t = t - four.clone();
        }
        (!t.is_zero()).then_some(t)
    }

    pub fn distance(s: &S, t: &S) -> S {
        let [zero, one, two, three, four] = [0, 1, 2, 3, 4].map(S::from_i64);
        let within = |x: &S, lo: &S, hi: &S, lo_open: bool, hi_open: bool| {
            (if lo_open { x > lo } else { x >= lo }) && (if hi_open { x < hi } else { x <= hi })
        };
        let both = |lo: &S, hi: &S, lo_open: bool, hi_open: bool| {
            within(s, lo, hi, lo_open, hi_open) && within(t, lo, hi, lo_open, hi_open)
        };
        let diff = |a: &S, b: &S| (a.clone() - b.clone()).abs();
        if both(&zero, &two, true, false) || both(&one, &three, false, false) || both(&two, &four, false, true) {
            return diff(s, t);
        }
        let shift = |x: &S| if *x >= three { x.clone() - four.clone() } else { x.clone() };
        let near_zero = |x: &S| *x <= one || *x >= three;
        if near_zero(s) && near_zero(t) {
            return diff(&shift(s), &shift(t));
        }
        // Remaining pairs lie on opposite open segments.
        S::from_i64(2) * diff(s, t)
    }
}

impl<S: Scalar> Space for Circle<S> {
    type Point = S;
    type Scalar = S;

    fn dist(&self, x: &S, y: &S) -> ExtScalar<S> {
        ExtScalar::Finite(Circle::distance(x, y))
    }

    fn label(&self, x: &S) -> String {
        x.to_string()
    }
}

/// Grid sample `{4k/N : 1 ≤ k < N}` of the circle.
pub fn circle_points<S: Scalar>(grid: usize) -> Vec<S> {
    (1..grid as i64).map(|k| S::from_ratio(4 * k, grid as i64)).collect()
}

pub fn circle_space<S: Scalar>(grid: usize) -> FiniteSpace<S> {
    assert!(grid >= 8, "circle grid must have at least 8 points");
    materialize(&Circle::<S>::new(), &circle_points(grid)).expect("grid labels are distinct")
}

/// A point of the real line with doubled zero.
#[derive(Clone, Debug, PartialEq)]
pub enum DzPoint<S> {
    /// `0⁽¹⁾` or `0⁽²⁾`.
    Zero(u8),
    Real(S),
}

impl<S: Scalar> fmt::Display for DzPoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DzPoint::Zero(i) => write!(f, "0({i})"),
            DzPoint::Real(x) => write!(f, "{x}"),
        }
    }
}

/// The real line with doubled zero: the zeros are at distance 1 from each
/// other and at distance `|y|` from every other point.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubledZeroLine<S>(std::marker::PhantomData<S>);

impl<S: Scalar> DoubledZeroLine<S> {
    pub fn new() -> Self {
        DoubledZeroLine(std::marker::PhantomData)
    }
}

impl<S: Scalar> Space for DoubledZeroLine<S> {
    type Point = DzPoint<S>;
    type Scalar = S;

    fn dist(&self, x: &DzPoint<S>, y: &DzPoint<S>) -> ExtScalar<S> {
        let v = match (x, y) {
            (DzPoint::Zero(i), DzPoint::Zero(j)) => {
                if i == j {
                    S::zero()
                } else {
                    S::one()
                }
            }
            (DzPoint::Zero(_), DzPoint::Real(t)) | (DzPoint::Real(t), DzPoint::Zero(_)) => t.abs(),
            (DzPoint::Real(s), DzPoint::Real(t)) => (s.clone() - t.clone()).abs(),
        };
        ExtScalar::Finite(v)
    }

    fn label(&self, x: &DzPoint<S>) -> String {
        x.to_string()
    }
}

/// Both zeros followed by `k·extent/grid` for `0 < |k| ≤ grid`. The zeros are
/// points `0` and `1`.
pub fn doubled_zero_points<S: Scalar>(extent: &S, grid: usize) -> Vec<DzPoint<S>> {
    let mut pts = vec![DzPoint::Zero(1), DzPoint::Zero(2)];
    let g = grid as i64;
    pts.extend(
        (-g..=g)
            .filter(|&k| k != 0)
            .map(|k| DzPoint::Real(extent.clone() * S::from_ratio(k, g))),
    );
    pts
}

pub fn doubled_zero_line<S: Scalar>(extent: &S, grid: usize) -> FiniteSpace<S> {
    assert!(grid >= 2 && *extent > S::zero(), "doubled-zero line needs extent > 0 and grid ≥ 2");
    materialize(&DoubledZeroLine::<S>::new(), &doubled_zero_points(extent, grid)).expect("labels are distinct")
}

/// A point of the real line, possibly the adjoined point at infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum LinePoint<S> {
    At(S),
    Infinity,
}

impl<S: Scalar> fmt::Display for LinePoint<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinePoint::At(x) => write!(f, "{x}"),
            LinePoint::Infinity => f.write_str("inf"),
        }
    }
}

/// The real line with `|x - y|`, optionally with a point at infinity.
#[derive(Clone, Copy, Debug, Default)]
pub struct Line<S> {
    with_infinity: bool,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Line<S> {
    pub fn new() -> Self {
        Line {
            with_infinity: false,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn extended() -> Self {
        Line {
            with_infinity: true,
            _marker: std::marker::PhantomData,
        }
    }
}

impl<S: Scalar> Space for Line<S> {
    type Point = LinePoint<S>;
    type Scalar = S;

    fn dist(&self, x: &LinePoint<S>, y: &LinePoint<S>) -> ExtScalar<S> {
        match (x, y) {
            (LinePoint::At(s), LinePoint::At(t)) => ExtScalar::Finite((s.clone() - t.clone()).abs()),
            (LinePoint::Infinity, LinePoint::Infinity) => ExtScalar::zero(),
            _ => ExtScalar::Infinite,
        }
    }

    fn infinity_point(&self) -> Option<LinePoint<S>> {
        self.with_infinity.then_some(LinePoint::Infinity)
    }

    fn label(&self, x: &LinePoint<S>) -> String {
        x.to_string()
    }
}

/// `{k/N : 1 ≤ k ≤ N}` with `|x - y|`.
pub fn punctured_interval(n: usize) -> FiniteSpace<Rational> {
    let pts: Vec<_> = (1..=n as i64).map(|k| LinePoint::At(ratio(k, n as i64))).collect();
    materialize(&Line::new(), &pts).expect("labels are distinct")
}

/// `{0, …, n-1}` with `|x - y|`.
pub fn integer_line(n: usize) -> FiniteSpace<Rational> {
    let pts: Vec<_> = (0..n as i64).map(|k| LinePoint::At(ratio(k, 1))).collect();
    materialize(&Line::new(), &pts).expect("labels are distinct")
}

/// [`integer_line`] with a point at infinity appended.
pub fn extended_line(n: usize) -> FiniteSpace<Rational> {
    let mut pts: Vec<_> = (0..n as i64).map(|k| LinePoint::At(ratio(k, 1))).collect();
    pts.push(LinePoint::Infinity);
    materialize(&Line::extended(), &pts).expect("labels are distinct")
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng, max: i64) -> Vec<Vec<Rational>> {
    let mut m = vec![vec![ratio(0, 1); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = ratio(rng.gen_range(1..=max), rng.gen_range(1..=4));
            m[i][j] = v.clone();
            m[j][i] = v;
        }
    }
    m
}

fn finish(m: Vec<Vec<Rational>>) -> FiniteSpace<Rational> {
    let n = m.len();
    let rows = m.into_iter().map(|r| r.into_iter().map(ExtScalar::Finite).collect()).collect();
    FiniteSpace::new(labels(n), rows, None).expect("generated matrix is square")
}

/// Random exact metric: shortest-path closure of a random symmetric matrix.
pub fn random_metric(n: usize, seed: u64) -> FiniteSpace<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = random_symmetric(n, &mut rng, 20);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i][k].clone() + m[k][j].clone();
                if i != j && via < m[i][j] {
                    m[i][j] = via;
                }
            }
        }
    }
    finish(m)
}

/// Random exact `K`-quasi-metric: a random symmetric matrix repaired by
/// lowering `d(x,z)` to `K·max(d(x,y), d(y,z))` until no triple violates.
///
/// Every repair strictly lowers an entry to a value of the form `Kᵃ·v` with
/// `v` an original entry, never below the smallest original entry, so the
/// loop terminates.
pub fn random_quasimetric(n: usize, k: u32, seed: u64) -> FiniteSpace<Rational> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = random_symmetric(n, &mut rng, 100);
    let kk = Rational::from_integer(BigInt::from(k));
    loop {
        let mut changed = false;
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if x == y || y == z || x == z {
                        continue;
                    }
                    let bound = kk.clone() * m[x][y].clone().max(m[y][z].clone());
                    if m[x][z] > bound {
                        m[x][z] = bound.clone();
                        m[z][x] = bound;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return finish(m);
        }
    }
}

/// Random exact space with a point at infinity. Even seeds append `ω` to a
/// random metric; odd seeds involute a random metric at one of its points.
pub fn random_with_infinity(n: usize, seed: u64) -> FiniteSpace<Rational> {
    let base = random_metric(n, seed);
    if seed.is_multiple_of(2) {
        base.with_point("w".into(), &vec![ExtScalar::Infinite; n], true)
            .expect("base has no infinity point")
    } else {
        let o = (seed as usize / 2) % n;
        involute(&base, o).expect("metric spaces involute")
    }
}

/// `d(i,j) = 2^(highest differing bit of i and j)`; an ultrametric.
pub fn binary_ultrametric(n: usize) -> FiniteSpace<Rational> {
    FiniteSpace::from_fn(labels(n), None, |i, j| {
        if i == j {
            ExtScalar::zero()
        } else {
            let bit = usize::BITS - (i ^ j).leading_zeros();
            ExtScalar::Finite(ratio(1i64 << bit, 1))
        }
    })
    .expect("square matrix")
}

/// Seeded sample of `count` distinct indices of `0..n`, sorted.
pub fn sample_indices(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = rand::seq::index::sample(&mut rng, n, count.min(n)).into_vec();
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> Rational {
        ratio(p, q)
    }

    #[test]
    fn circle_cases() {
        // Same segment.
        assert_eq!(Circle::distance(&r(1, 4), &r(3, 4)), r(1, 2));
        // Adjacent segments through the removed point.
        assert_eq!(Circle::distance(&r(1, 2), &r(7, 2)), r(1, 1));
        // Opposite segments.
        assert_eq!(Circle::distance(&r(1, 2), &r(5, 2)), r(4, 1));
        assert_eq!(Circle::distance(&r(3, 2), &r(7, 2)), r(4, 1));
        // Seams: 1 with (2,3] is in [1,3]; (0,1) with 3 goes through [-1,1].
        assert_eq!(Circle::distance(&r(1, 1), &r(5, 2)), r(3, 2));
        assert_eq!(Circle::distance(&r(1, 2), &r(3, 1)), r(3, 2));
        assert_eq!(Circle::point(r(-1, 3)), Some(r(11, 3)));
        assert_eq!(Circle::point(r(4, 1)), None);
    }

    #[test]
    fn circle_grid_is_valid_and_symmetric() {
        let sp = circle_space::<Rational>(16);
        assert_eq!(sp.len(), 15);
        assert!(sp.validate().passed());
    }

    #[test]
    fn doubled_zero_distances() {
        let sp = doubled_zero_line(&r(2, 1), 4);
        assert_eq!(sp.d(0, 1), &ExtScalar::Finite(r(1, 1)));
        let y = sp.index_of("-3/2").unwrap();
        assert_eq!(sp.d(0, y), &ExtScalar::Finite(r(3, 2)));
        assert_eq!(sp.d(1, y), &ExtScalar::Finite(r(3, 2)));
        assert!(sp.validate().passed());
    }

    #[test]
    fn finite_generators() {
        let sp = integer_line(4);
        assert_eq!(sp.d(0, 3), &ExtScalar::Finite(r(3, 1)));
        let pi = punctured_interval(100);
        assert_eq!(pi.len(), 100);
        assert_eq!(pi.label(0), "1/100");
        assert_eq!(pi.label(99), "1");
        let ext = extended_line(4);
        assert_eq!(ext.infinity(), Some(4));
        assert!(ext.validate().passed());
    }

    #[test]
    fn random_generators_are_deterministic_and_valid() {
        assert_eq!(random_metric(6, 1), random_metric(6, 1));
        assert_ne!(random_metric(6, 1), random_metric(6, 2));
        for seed in 0..5 {
            let m = random_metric(6, seed);
            assert!(m.validate().passed());
            for x in 0..6 {
                for y in 0..6 {
                    for z in 0..6 {
                        let (a, b, c) = (m.d(x, z), m.d(x, y), m.d(y, z));
                        let sum = b.add(c);
                        assert!(a <= &sum);
                    }
                }
            }
            let q = random_quasimetric(7, 3, seed);
            assert!(q.validate().passed());
            let w = random_with_infinity(6, seed);
            assert!(w.validate().passed(), "{:?}", w.validate().witnesses);
            assert!(w.infinity().is_some());
        }
        assert!(binary_ultrametric(8).validate().passed());
        assert_eq!(sample_indices(10, 4, 3), sample_indices(10, 4, 3));
        assert_eq!(sample_indices(10, 4, 3).len(), 4);
    }
}
