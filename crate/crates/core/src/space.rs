//! Semi-metric spaces with at most one point at infinity.
//!
//! [`FiniteSpace`] stores a full distance matrix over labelled points.
//! Procedural spaces implement [`Space`] with their own point type and are
//! scanned through finite samples obtained with [`materialize`].

use std::collections::HashMap;
use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::ext::ExtScalar;
use crate::report::{Report, Violation};
use crate::scalar::{Scalar, DEFAULT_TOL};

/// A space presented by a distance callback.
pub trait Space: Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync + 'static;
    type Scalar: Scalar;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> ExtScalar<Self::Scalar>;

    fn infinity_point(&self) -> Option<Self::Point> {
        None
    }

    fn label(&self, x: &Self::Point) -> String {
        format!("{x:?}")
    }
}

/// A finite space with a dense distance matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteSpace<S> {
    labels: Vec<String>,
    matrix: Vec<ExtScalar<S>>,
    infinity: Option<usize>,
    tol: f64,
}

impl<S: Scalar> FiniteSpace<S> {
    /// Builds from matrix rows. Shape, label uniqueness and sign are checked
    /// here; the semi-metric axioms are checked by [`FiniteSpace::validate`].
    pub fn new(labels: Vec<String>, rows: Vec<Vec<ExtScalar<S>>>, infinity: Option<usize>) -> Result<Self> {
        let n = labels.len();
        if rows.len() != n {
            return Err(Error::InvalidInput(format!("{} labels but {} matrix rows", n, rows.len())));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::InvalidInput(format!("label {l:?} used for points {j} and {i}")));
            }
        }
        if let Some(w) = infinity {
            if w >= n {
                return Err(Error::InvalidInput(format!("infinity index {w} out of range")));
            }
        }
        let mut matrix = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, e) in row.iter().enumerate() {
                if matches!(e, ExtScalar::Finite(v) if *v < S::zero()) {
                    return Err(Error::InvalidInput(format!("negative distance at ({i}, {j})")));
                }
            }
            matrix.extend(row);
        }
        Ok(FiniteSpace {
            labels,
            matrix,
            infinity,
            tol: if S::EXACT { 0.0 } else { DEFAULT_TOL },
        })
    }

    /// Builds by evaluating `f` on every ordered pair.
    pub fn from_fn(
        labels: Vec<String>,
        infinity: Option<usize>,
        f: impl Fn(usize, usize) -> ExtScalar<S>,
    ) -> Result<Self> {
        let n = labels.len();
        let rows = (0..n).map(|i| (0..n).map(|j| f(i, j)).collect()).collect();
        FiniteSpace::new(labels, rows, infinity)
    }

    /// Sets the comparison tolerance used by float checks.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn infinity(&self) -> Option<usize> {
        self.infinity
    }

    pub fn d(&self, i: usize, j: usize) -> &ExtScalar<S> {
        &self.matrix[i * self.len() + j]
    }

    pub fn labels_of(&self, points: &[usize]) -> Vec<String> {
        points.iter().map(|&i| self.labels[i].clone()).collect()
    }

    /// Checks symmetry, zero diagonal, non-degeneracy and the single-∞
    /// structure. An empty report means the presentation is valid.
    pub fn validate(&self) -> Report {
        let mut report = Report::new("validate");
        let n = self.len();
        let tol = self.tol;
        report.count("points", n as u64);
        for i in 0..n {
            if !self.d(i, i).is_zero() {
                report.push(Violation::new(
                    "zero-diagonal",
                    self.labels_of(&[i]),
                    format!("d(x,x) = {}", self.d(i, i)),
                ));
            }
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (a, b) = (self.d(i, j), self.d(j, i));
                if i < j && !a.close(b, tol) {
                    report.push(Violation::new(
                        "symmetry",
                        self.labels_of(&[i, j]),
                        format!("d(x,y) = {a} but d(y,x) = {b}"),
                    ));
                }
                if a.is_zero() {
                    report.push(Violation::new(
                        "non-degeneracy",
                        self.labels_of(&[i, j]),
                        "distinct points at distance 0",
                    ));
                }
                let at_infinity = self.infinity == Some(i) || self.infinity == Some(j);
                if a.is_infinite() != at_infinity {
                    let detail = if at_infinity {
                        format!("distance to the infinity point is finite ({a})")
                    } else {
                        "infinite distance between points other than the infinity point".to_string()
                    };
                    report.push(Violation::new("infinity", self.labels_of(&[i, j]), detail));
                }
            }
        }
        report.count("pairs", (n * n.saturating_sub(1)) as u64);
        report
    }

    /// The subspace on `points`, in the given order.
    pub fn restrict(&self, points: &[usize]) -> Self {
        let infinity = self.infinity.and_then(|w| points.iter().position(|&p| p == w));
        FiniteSpace {
            labels: self.labels_of(points),
            matrix: points
                .iter()
                .flat_map(|&i| points.iter().map(move |&j| self.d(i, j).clone()))
                .collect(),
            infinity,
            tol: self.tol,
        }
    }

    /// Float copy of the distance data.
    pub fn to_f64(&self) -> FiniteSpace<f64> {
        FiniteSpace {
            labels: self.labels.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|e| match e {
                    ExtScalar::Finite(v) => ExtScalar::Finite(v.to_f64()),
                    ExtScalar::Infinite => ExtScalar::Infinite,
                })
                .collect(),
            infinity: self.infinity,
            tol: if S::EXACT { DEFAULT_TOL } else { self.tol },
        }
    }

    /// Adds a point given its distances to the existing points.
    pub fn with_point(&self, label: String, dists: &[ExtScalar<S>], is_infinity: bool) -> Result<Self> {
        let n = self.len();
        if dists.len() != n {
            return Err(Error::InvalidInput(format!("{} distances for {n} points", dists.len())));
        }
        if is_infinity && self.infinity.is_some() {
            return Err(Error::InvalidInput("space already has an infinity point".into()));
        }
        let mut labels = self.labels.clone();
        labels.push(label);
        let infinity = if is_infinity { Some(n) } else { self.infinity };
        let out = FiniteSpace::from_fn(labels, infinity, |i, j| match (i == n, j == n) {
            (true, true) => ExtScalar::zero(),
            (true, false) => dists[j].clone(),
            (false, true) => dists[i].clone(),
            (false, false) => self.d(i, j).clone(),
        })?;
        Ok(out.with_tol(self.tol))
    }
}

impl<S: Scalar> Space for FiniteSpace<S> {
    type Point = usize;
    type Scalar = S;

    fn dist(&self, x: &usize, y: &usize) -> ExtScalar<S> {
        self.d(*x, *y).clone()
    }

    fn infinity_point(&self) -> Option<usize> {
        self.infinity
    }

    fn label(&self, x: &usize) -> String {
        self.labels[*x].clone()
    }
}

/// Finite sample of a procedural space on the given points.
pub fn materialize<Sp: Space>(sp: &Sp, points: &[Sp::Point]) -> Result<FiniteSpace<Sp::Scalar>> {
    let labels = points.iter().map(|p| sp.label(p)).collect();
    let infinity = sp
        .infinity_point()
        .and_then(|w| points.iter().position(|p| *p == w));
    FiniteSpace::from_fn(labels, infinity, |i, j| {
        if i == j {
            ExtScalar::zero()
        } else {
            sp.dist(&points[i], &points[j])
        }
    })
}
