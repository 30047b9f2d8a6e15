//! Enumeration of admissible tuples, exhaustive or seeded-sampled.
//!
//! A tuple over `n` points is admissible when no point occurs three or more
//! times. Tuples are encoded as base-`n` integers so that ascending codes are
//! lexicographic order; all scans return tuples in that order whatever the
//! plan, which keeps parallel results deterministic.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// How a scan covers its tuple space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "plan", rename_all = "lowercase")]
pub enum ScanPlan {
    Exhaustive,
    /// `budget` distinct admissible tuples drawn uniformly with a fixed seed.
    Sampled { budget: usize, seed: u64 },
}

impl ScanPlan {
    /// Exhaustive up to `limit` points, sampled beyond.
    pub fn auto(n: usize, limit: usize, budget: usize, seed: u64) -> Self {
        if n <= limit {
            ScanPlan::Exhaustive
        } else {
            ScanPlan::Sampled { budget, seed }
        }
    }
}

/// No entry occurs three or more times.
pub fn is_admissible<T: PartialEq>(tuple: &[T]) -> bool {
    tuple
        .iter()
        .all(|a| tuple.iter().filter(|b| *b == a).count() <= 2)
}

/// All entries pairwise different.
pub fn is_nondegenerate<T: PartialEq>(tuple: &[T]) -> bool {
    tuple
        .iter()
        .enumerate()
        .all(|(i, a)| tuple[i + 1..].iter().all(|b| b != a))
}

fn decode<const K: usize>(mut code: u64, n: usize) -> [usize; K] {
    let mut out = [0; K];
    for slot in out.iter_mut().rev() {
        *slot = (code % n as u64) as usize;
        code /= n as u64;
    }
    out
}

fn total<const K: usize>(n: usize) -> u64 {
    (n as u64).pow(K as u32)
}

/// Number of admissible `K`-tuples over `n` points, for `K ∈ {4, 5}`.
pub fn admissible_count(n: usize, k: usize) -> u64 {
    let n = n as u64;
    let m = n.saturating_sub(1);
    match k {
        4 => n.pow(4) - n - 4 * n * m,
        5 => n.pow(5) - 10 * n * m * m - 5 * n * m - n,
        _ => panic!("admissible_count supports tuple sizes 4 and 5"),
    }
}

/// Admissible `K`-tuples over `0..n` in lexicographic order.
pub fn admissible_tuples<const K: usize>(n: usize, plan: ScanPlan) -> Vec<[usize; K]> {
    if n == 0 {
        return Vec::new();
    }
    match plan {
        ScanPlan::Exhaustive => (0..total::<K>(n))
            .into_par_iter()
            .map(|c| decode::<K>(c, n))
            .filter(|t| is_admissible(t))
            .collect(),
        ScanPlan::Sampled { budget, seed } => {
            let population = match K {
                4 | 5 => admissible_count(n, K),
                _ => total::<K>(n),
            };
            sample_tuples::<K>(n, budget, seed, is_admissible, population)
        }
    }
}

/// Non-degenerate `K`-tuples over `0..n` in lexicographic order.
pub fn nondegenerate_tuples<const K: usize>(n: usize, plan: ScanPlan) -> Vec<[usize; K]> {
    if n < K {
        return Vec::new();
    }
    match plan {
        ScanPlan::Exhaustive => (0..total::<K>(n))
            .into_par_iter()
            .map(|c| decode::<K>(c, n))
            .filter(|t| is_nondegenerate(t))
            .collect(),
        ScanPlan::Sampled { budget, seed } => {
            let population = (0..K as u64).map(|i| n as u64 - i).product();
            sample_tuples::<K>(n, budget, seed, is_nondegenerate, population)
        }
    }
}

/// Uniform sampling without replacement by rejection; falls back to the full
/// set when the budget covers it.
fn sample_tuples<const K: usize>(
    n: usize,
    budget: usize,
    seed: u64,
    keep: fn(&[usize]) -> bool,
    population: u64,
) -> Vec<[usize; K]> {
    let all = total::<K>(n);
    if budget as u64 >= population {
        return (0..all).map(|c| decode::<K>(c, n)).filter(|t| keep(t)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = BTreeSet::new();
    while picked.len() < budget {
        let code = rng.gen_range(0..all);
        if keep(&decode::<K>(code, n)) {
            picked.insert(code);
        }
    }
    picked.into_iter().map(|c| decode::<K>(c, n)).collect()
}

/// Ordered pairs `(i, j)` with `i ≠ j`.
pub fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}
