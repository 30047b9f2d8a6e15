//! Small symmetric groups, the map `S4 → S3` induced on pairs of opposite
//! edges of a tetrahedron, and the signed action on cross-ratio triples.
//!
//! Permutations compose as functions: `(p ∘ q)(i) = p(q(i))`. A permutation
//! acts on a quadruple by moving the entry in slot `i` to slot `p(i)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::triples::{LogTriple, RatioTriple};

/// A permutation of `{0, …, N-1}` in one-line notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm<const N: usize> {
    map: [usize; N],
}

pub type Perm4 = Perm<4>;
pub type Perm3 = Perm<3>;

impl<const N: usize> Perm<N> {
    pub fn identity() -> Self {
        Perm {
            map: std::array::from_fn(|i| i),
        }
    }

    /// Builds from one-line notation (0-based images).
    pub fn from_images(map: [usize; N]) -> Result<Self> {
        let mut seen = [false; N];
        for &v in &map {
            if v >= N || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidInput(format!("{map:?} is not a permutation")));
            }
        }
        Ok(Perm { map })
    }

    pub fn images(&self) -> &[usize; N] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Perm {
            map: std::array::from_fn(|i| self.map[other.map[i]]),
        }
    }

    pub fn inverse(&self) -> Self {
        let mut map = [0; N];
        for (i, &v) in self.map.iter().enumerate() {
            map[v] = i;
        }
        Perm { map }
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Cycles of length at least two, each starting at its smallest element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = [false; N];
        let mut out = Vec::new();
        for start in 0..N {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut j = self.map[start];
            while j != start {
                seen[j] = true;
                cycle.push(j);
                j = self.map[j];
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }

    /// `+1` for even permutations, `-1` for odd ones.
    pub fn sign(&self) -> i8 {
        let transpositions: usize = self.cycles().iter().map(|c| c.len() - 1).sum();
        if transpositions.is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// All `N!` permutations in lexicographic order of one-line notation.
    pub fn all() -> Vec<Self> {
        let mut current: [usize; N] = std::array::from_fn(|i| i);
        let mut out = vec![Perm { map: current }];
        // Standard next-permutation step.
        loop {
            let Some(i) = (1..N).rev().find(|&i| current[i - 1] < current[i]) else {
                return out;
            };
            let j = (i..N).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
            current.swap(i - 1, j);
            current[i..].reverse();
            out.push(Perm { map: current });
        }
    }

    /// Moves the entry in slot `i` to slot `p(i)`.
    pub fn permute<T: Clone>(&self, items: &[T; N]) -> [T; N] {
        let inv = self.inverse();
        std::array::from_fn(|i| items[inv.map[i]].clone())
    }
}

impl<const N: usize> fmt::Display for Perm<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("1");
        }
        for c in cycles {
            f.write_str("(")?;
            for i in c {
                write!(f, "{}", i + 1)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl<const N: usize> FromStr for Perm<N> {
    type Err = Error;

    /// Parses 1-based cycle notation such as `(1324)`, `(12)(34)` or `1`.
    fn from_str(text: &str) -> Result<Self> {
        let text: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |why: &str| Error::parse(format!("permutation {text:?}"), why.to_string());
        if text == "1" || text == "()" || text == "id" {
            return Ok(Self::identity());
        }
        let mut map: [usize; N] = std::array::from_fn(|i| i);
        let mut used = [false; N];
        let mut rest = text.as_str();
        while !rest.is_empty() {
            let body_end = rest.find(')').ok_or_else(|| bad("unclosed cycle"))?;
            let body = rest.strip_prefix('(').ok_or_else(|| bad("expected '('"))?;
            let body = &body[..body_end - 1];
            let points: Vec<usize> = body
                .chars()
                .map(|c| match c.to_digit(10) {
                    Some(d) if (1..=N as u32).contains(&d) => Ok(d as usize - 1),
                    _ => Err(bad("cycle entries must be digits 1..N")),
                })
                .collect::<Result<_>>()?;
            for &p in &points {
                if std::mem::replace(&mut used[p], true) {
                    return Err(bad("point repeated across cycles"));
                }
            }
            for (k, &p) in points.iter().enumerate() {
                map[p] = points[(k + 1) % points.len()];
            }
            rest = &rest[body_end + 1..];
        }
        Ok(Perm { map })
    }
}

/// The three pairs of opposite tetrahedron edges, in the fixed order
/// `(12)(34)`, `(13)(42)`, `(14)(23)` (0-based here).
pub const CONSTELLATIONS: [[[usize; 2]; 2]; 3] = [[[0, 1], [2, 3]], [[0, 2], [3, 1]], [[0, 3], [1, 2]]];

fn constellation_index(edges: [[usize; 2]; 2]) -> usize {
    let norm = |e: [usize; 2]| if e[0] < e[1] { e } else { [e[1], e[0]] };
    let a = norm(edges[0]);
    CONSTELLATIONS
        .iter()
        .position(|c| c.iter().any(|&e| norm(e) == a))
        .expect("every edge lies in a constellation")
}

/// The induced permutation of constellations: `i ↦ j` iff `p` sends the
/// `i`-th constellation onto the `j`-th. A homomorphism `S4 → S3`.
pub fn phi_map(p: &Perm4) -> Perm3 {
    let map = std::array::from_fn(|i| constellation_index(CONSTELLATIONS[i].map(|e| e.map(|v| p.apply(v)))));
    Perm3::from_images(map).expect("constellations are permuted")
}

/// For each output component `k`, the input component it is read from when
/// `p` acts on a triple: `phi_map(p)⁻¹`. This is the permutation listed in the
/// published evaluation table.
pub fn slot_source(p: &Perm4) -> Perm3 {
    phi_map(p).inverse()
}

/// The signed action `t ↦ sgn(p)·φ(p)t` on log triples; a left action.
pub fn act(p: &Perm4, t: &LogTriple) -> LogTriple {
    let moved = t.reorder(*slot_source(p).images());
    if p.sign() < 0 {
        moved.neg()
    } else {
        moved
    }
}

/// [`act`] transported to ratio triples, where negation is the reciprocal.
pub fn act_ratio<S: Scalar>(p: &Perm4, t: &RatioTriple<S>) -> RatioTriple<S> {
    let moved = t.reorder(*slot_source(p).images());
    if p.sign() < 0 {
        moved.recip()
    } else {
        moved
    }
}

/// The published evaluation table, verbatim: `(π, φ(π))` in cycle notation.
pub const EVALUATION_TABLE: [(&str, &str); 24] = [
    ("(12)", "(23)"),
    ("(34)", "(23)"),
    ("(1324)", "(23)"),
    ("(1423)", "(23)"),
    ("(13)", "(13)"),
    ("(24)", "(13)"),
    ("(1234)", "(13)"),
    ("(1432)", "(13)"),
    ("(14)", "(12)"),
    ("(23)", "(12)"),
    ("(1243)", "(12)"),
    ("(1342)", "(12)"),
    ("(123)", "(123)"),
    ("(142)", "(123)"),
    ("(134)", "(123)"),
    ("(243)", "(123)"),
    ("(132)", "(132)"),
    ("(124)", "(132)"),
    ("(143)", "(132)"),
    ("(234)", "(132)"),
    ("(12)(34)", "1"),
    ("(13)(24)", "1"),
    ("(14)(23)", "1"),
    ("1", "1"),
];
