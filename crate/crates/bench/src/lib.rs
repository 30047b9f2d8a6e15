//! Shared workloads for the benchmarks.

use moebius_core::fixtures::{circle_space, random_metric};
use moebius_core::{FiniteSpace, Rational};

/// Circle sample in both scalar modes.
pub fn circles(grid: usize) -> (FiniteSpace<Rational>, FiniteSpace<f64>) {
    let exact = circle_space::<Rational>(grid);
    let float = exact.to_f64();
    (exact, float)
}

pub fn metric(n: usize) -> FiniteSpace<Rational> {
    random_metric(n, 7)
}
