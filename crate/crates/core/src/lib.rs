//! Generalized Möbius structures on finite and procedural spaces.
//!
//! A Möbius structure assigns to every admissible quadruple of points a
//! cross-ratio triple. This crate evaluates them from semi-metrics, checks
//! the structural axioms, derives the semi-metrics `d_A`, estimates
//! quasi-metric conditions and runs Cauchy diagnostics on sequences.
//!
//! Arithmetic is generic over [`Scalar`]: exact rationals for verification,
//! `f64` for large scans.

pub mod conditions;
pub mod error;
pub mod ext;
pub mod fixtures;
pub mod io;
pub mod perms;
pub mod report;
pub mod scalar;
pub mod scan;
pub mod sequences;
pub mod space;
pub mod structure;
pub mod triples;

pub use conditions::{
    boundedify, corner_margin, infinity_corner_k, quasi_constant, symmetry_margin, ConditionKind, ConditionReport,
};
pub use error::{Error, Result};
pub use ext::{ExtLog, ExtScalar, FormalProduct};
pub use perms::{act, phi_map, slot_source, Perm3, Perm4};
pub use report::{Report, Status, Violation};
pub use scalar::{ratio, Rational, Scalar};
pub use scan::ScanPlan;
pub use sequences::{
    adjoin_limits, cauchy_equivalent, classify, condition2, condition3, good_pairs, Classification, DiagnosticParams,
    Family, Limit, SequenceHandle,
};
pub use space::{materialize, FiniteSpace, Space};
pub use structure::{
    check_axioms, check_equivalence, crt_of, derive_da, involute, lambda_factor, m_of, verify_da_theorem, AxiomPlan,
    MoebiusStructure, TableStructure,
};
pub use triples::{LogTriple, ProjTriple, RatioTriple};
