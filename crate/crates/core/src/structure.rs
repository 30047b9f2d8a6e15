//! Cross-ratio structures: evaluation, axiom checks, the derived semi-metrics
//! `d_A`, involution and equivalence.
//!
//! A structure assigns a [`RatioTriple`] to every admissible quadruple of
//! point indices. Identities between structure values are multiplicative, so
//! exact backends decide them exactly; the additive [`LogTriple`] view is
//! obtained with [`to_log`].

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ext::{ext_ln, fp_mul, fp_ratio, ExtLog, ExtScalar, FormalProduct};
use crate::io::TableData;
use crate::perms::{act, act_ratio, Perm4};
use crate::report::{Report, Violation};
use crate::scalar::{Scalar, DEFAULT_TOL};
use crate::scan::{admissible_tuples, is_admissible, is_nondegenerate, nondegenerate_tuples, ScanPlan};
use crate::space::{FiniteSpace, Space};
use crate::triples::{from_log, normalize_delta, to_log, to_ratio, LogTriple, ProjTriple, RatioTriple};

/// A map from admissible quadruples of `0..len()` to ratio triples.
pub trait MoebiusStructure: Sync {
    type Scalar: Scalar;

    fn size(&self) -> usize;

    fn point_label(&self, i: usize) -> String;

    fn evaluate(&self, q: [usize; 4]) -> Result<RatioTriple<Self::Scalar>>;

    /// Relative tolerance for comparisons; zero for exact structures.
    fn tolerance(&self) -> f64;

    fn evaluate_log(&self, q: [usize; 4]) -> Result<LogTriple> {
        Ok(to_log(&self.evaluate(q)?))
    }

    fn point_labels(&self, points: &[usize]) -> Vec<String> {
        points.iter().map(|&i| self.point_label(i)).collect()
    }
}

/// `crt(w,x,y,z) = (d(w,x)d(y,z) : d(w,y)d(z,x) : d(w,z)d(x,y))` on any space.
pub fn crt_points<Sp: Space>(sp: &Sp, q: &[Sp::Point; 4]) -> Result<ProjTriple<Sp::Scalar>> {
    if !is_admissible(q) {
        return Err(Error::InadmissibleQuadruple(q.iter().map(|p| sp.label(p)).collect()));
    }
    let [w, x, y, z] = q;
    normalize_delta([
        fp_mul(&sp.dist(w, x), &sp.dist(y, z)),
        fp_mul(&sp.dist(w, y), &sp.dist(z, x)),
        fp_mul(&sp.dist(w, z), &sp.dist(x, y)),
    ])
}

/// Cross-ratio triple of a quadruple of a finite space.
pub fn crt_of<S: Scalar>(sp: &FiniteSpace<S>, q: [usize; 4]) -> Result<ProjTriple<S>> {
    crt_points(sp, &q)
}

/// The log-triple value of a quadruple, through the projective encoding.
pub fn m_of<S: Scalar>(sp: &FiniteSpace<S>, q: [usize; 4]) -> Result<LogTriple> {
    Ok(to_log(&to_ratio(&crt_of(sp, q)?)))
}

/// The same value computed directly from `(x|y) = -ln d(x,y)`:
/// `((w|z)+(x|y)-(w|y)-(x|z), (w|x)+(y|z)-(w|z)-(x|y), (w|y)+(x|z)-(w|x)-(y|z))`.
pub fn gromov_expansion<S: Scalar>(sp: &FiniteSpace<S>, q: [usize; 4]) -> Result<LogTriple> {
    if !is_admissible(&q) {
        return Err(Error::InadmissibleQuadruple(sp.labels_of(&q)));
    }
    let g = |i: usize, j: usize| ext_ln(sp.d(q[i], q[j])).neg();
    let sum = |a: ExtLog, b: ExtLog, c: ExtLog, d: ExtLog| a.checked_add(b)?.checked_sub(c)?.checked_sub(d);
    let (w, x, y, z) = (0, 1, 2, 3);
    let mut entries = [
        sum(g(w, z), g(x, y), g(w, y), g(x, z))?,
        sum(g(w, x), g(y, z), g(w, z), g(x, y))?,
        sum(g(w, y), g(x, z), g(w, x), g(y, z))?,
    ];
    // Next to two infinite components the finite one is 0 up to rounding.
    if entries.iter().filter(|e| !e.is_finite()).count() == 2 {
        for e in entries.iter_mut().filter(|e| e.is_finite()) {
            *e = ExtLog::ZERO;
        }
    }
    LogTriple::new(entries, 1e-9)
}

impl<S: Scalar> MoebiusStructure for FiniteSpace<S> {
    type Scalar = S;

    fn size(&self) -> usize {
        self.len()
    }

    fn point_label(&self, i: usize) -> String {
        self.label(i).to_string()
    }

    fn evaluate(&self, q: [usize; 4]) -> Result<RatioTriple<S>> {
        Ok(to_ratio(&crt_of(self, q)?))
    }

    fn tolerance(&self) -> f64 {
        self.tol()
    }
}

/// A structure given by a table of log triples, expanded over the `S4`
/// orbit of each entry on demand.
#[derive(Clone, Debug)]
pub struct TableStructure {
    points: Vec<String>,
    table: HashMap<[usize; 4], LogTriple>,
    tol: f64,
}

impl TableStructure {
    pub fn new(points: Vec<String>, entries: impl IntoIterator<Item = ([usize; 4], LogTriple)>) -> Result<Self> {
        let n = points.len();
        let mut table = HashMap::new();
        for (q, t) in entries {
            if q.iter().any(|&i| i >= n) || !is_admissible(&q) {
                return Err(Error::InadmissibleQuadruple(q.iter().map(|i| i.to_string()).collect()));
            }
            if let Some(prev) = table.insert(q, t) {
                if !prev.close(&t, DEFAULT_TOL) {
                    return Err(Error::InvalidInput(format!("conflicting entries for quadruple {q:?}")));
                }
            }
        }
        Ok(TableStructure {
            points,
            table,
            tol: DEFAULT_TOL,
        })
    }

    pub fn from_data(data: TableData) -> Result<Self> {
        TableStructure::new(data.points, data.entries)
    }

    /// Full table of another structure over all admissible quadruples.
    pub fn from_structure<M: MoebiusStructure>(m: &M) -> Result<Self> {
        let quads = admissible_tuples::<4>(m.size(), ScanPlan::Exhaustive);
        let entries = quads
            .par_iter()
            .map(|&q| Ok((q, m.evaluate_log(q)?)))
            .collect::<Result<Vec<_>>>()?;
        TableStructure::new(m.point_labels(&(0..m.size()).collect::<Vec<_>>()), entries)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn set(&mut self, q: [usize; 4], t: LogTriple) {
        self.table.insert(q, t);
    }

    pub fn entry(&self, q: [usize; 4]) -> Option<&LogTriple> {
        self.table.get(&q)
    }

    pub fn to_data(&self) -> TableData {
        let mut entries: Vec<_> = self.table.iter().map(|(q, t)| (*q, *t)).collect();
        entries.sort_by_key(|(q, _)| *q);
        TableData {
            points: self.points.clone(),
            entries,
        }
    }

    /// Value at `q` in log form, found through the orbit of `q`.
    pub fn lookup(&self, q: [usize; 4]) -> Result<LogTriple> {
        if !is_admissible(&q) {
            return Err(Error::InadmissibleQuadruple(self.point_labels(&q)));
        }
        if let Some(t) = self.table.get(&q) {
            return Ok(*t);
        }
        // q = p·r for a stored r, hence M(q) = act(p, M(r)).
        for p in Perm4::all() {
            let r = p.inverse().permute(&q);
            if let Some(t) = self.table.get(&r) {
                return Ok(act(&p, t));
            }
        }
        Err(Error::MissingEntry(self.point_labels(&q)))
    }
}

impl MoebiusStructure for TableStructure {
    type Scalar = f64;

    fn size(&self) -> usize {
        self.points.len()
    }

    fn point_label(&self, i: usize) -> String {
        self.points[i].clone()
    }

    fn evaluate(&self, q: [usize; 4]) -> Result<RatioTriple<f64>> {
        Ok(from_log(&self.lookup(q)?))
    }

    fn evaluate_log(&self, q: [usize; 4]) -> Result<LogTriple> {
        self.lookup(q)
    }

    fn tolerance(&self) -> f64 {
        self.tol
    }
}

/// Memoized evaluation over all admissible quadruples of a small domain.
struct Evaluations<'a, M: MoebiusStructure> {
    m: &'a M,
    n: usize,
    dense: Option<Vec<Option<Result<RatioTriple<M::Scalar>>>>>,
}

const DENSE_LIMIT: usize = 1 << 20;

impl<'a, M: MoebiusStructure> Evaluations<'a, M> {
    fn new(m: &'a M, precompute: bool) -> Self {
        let n = m.size();
        let dense = (precompute && n.pow(4) <= DENSE_LIMIT).then(|| {
            (0..n.pow(4))
                .into_par_iter()
                .map(|code| {
                    let q = [code / (n * n * n), code / (n * n) % n, code / n % n, code % n];
                    is_admissible(&q).then(|| m.evaluate(q))
                })
                .collect()
        });
        Evaluations { m, n, dense }
    }

    fn get(&self, q: [usize; 4]) -> Result<RatioTriple<M::Scalar>> {
        match &self.dense {
            Some(d) => {
                let n = self.n;
                match &d[((q[0] * n + q[1]) * n + q[2]) * n + q[3]] {
                    Some(r) => r.clone(),
                    None => Err(Error::InadmissibleQuadruple(self.m.point_labels(&q))),
                }
            }
            None => self.m.evaluate(q),
        }
    }
}

fn indeterminate(what: &str) -> Error {
    Error::IndeterminateSum(what.to_string())
}

/// `R1(αxωβ)·R1(αωyβ)/R1(αxyβ)`: the first-component sum, exponentiated.
fn a_branch<M: MoebiusStructure>(
    ev: &Evaluations<'_, M>,
    [x, y, w, a, b]: [usize; 5],
) -> Result<ExtScalar<M::Scalar>> {
    let r1 = ev.get([a, x, w, b])?.entries()[0].clone();
    let r2 = ev.get([a, w, y, b])?.entries()[0].clone();
    let r3 = ev.get([a, x, y, b])?.entries()[0].clone();
    r1.checked_mul(&r2)
        .and_then(|p| p.checked_div(&r3))
        .ok_or_else(|| indeterminate("first components"))
}

/// `R2(αxyβ)/(R2(αxωβ)·R2(αωyβ))`: the negated second-component sum,
/// exponentiated.
fn b_branch<M: MoebiusStructure>(
    ev: &Evaluations<'_, M>,
    [x, y, w, a, b]: [usize; 5],
) -> Result<ExtScalar<M::Scalar>> {
    let r1 = ev.get([a, x, w, b])?.entries()[1].clone();
    let r2 = ev.get([a, w, y, b])?.entries()[1].clone();
    let r3 = ev.get([a, x, y, b])?.entries()[1].clone();
    r1.checked_mul(&r2)
        .and_then(|p| r3.checked_div(&p))
        .ok_or_else(|| indeterminate("second components"))
}

/// `R3(αxωβ)·R3(αωyβ)/R3(αxyβ)`, which the axioms force to be 1.
fn c_product<M: MoebiusStructure>(
    ev: &Evaluations<'_, M>,
    [x, y, w, a, b]: [usize; 5],
) -> Result<ExtScalar<M::Scalar>> {
    let r1 = ev.get([a, x, w, b])?.entries()[2].clone();
    let r2 = ev.get([a, w, y, b])?.entries()[2].clone();
    let r3 = ev.get([a, x, y, b])?.entries()[2].clone();
    r1.checked_mul(&r2)
        .and_then(|p| p.checked_div(&r3))
        .ok_or_else(|| indeterminate("third components"))
}

fn check_base<M: MoebiusStructure>(m: &M, t: [usize; 5]) -> Result<()> {
    let [_, _, w, a, b] = t;
    if t.iter().any(|&i| i >= m.size()) {
        return Err(Error::InvalidInput(format!("point index out of range in {t:?}")));
    }
    if !is_admissible(&t) || a == w || w == b || a == b {
        return Err(Error::InadmissibleTuple(
            m.point_labels(&t),
            "needs distinct ω, α, β and no point three times".into(),
        ));
    }
    Ok(())
}

fn lambda_with<M: MoebiusStructure>(ev: &Evaluations<'_, M>, t: [usize; 5]) -> Result<ExtScalar<M::Scalar>> {
    let [x, y, _, a, b] = t;
    let a_ok = x != b && y != a;
    let b_ok = x != a && y != b;
    match (a_ok, b_ok) {
        (true, false) => a_branch(ev, t),
        (false, true) => b_branch(ev, t),
        (true, true) => {
            let va = a_branch(ev, t)?;
            let vb = b_branch(ev, t)?;
            if !va.close(&vb, ev.m.tolerance()) {
                return Err(Error::BranchDisagreement {
                    x: ev.m.point_label(x),
                    y: ev.m.point_label(y),
                    a: va.to_string(),
                    b: vb.to_string(),
                });
            }
            Ok(va)
        }
        (false, false) => Err(Error::InadmissibleTuple(
            ev.m.point_labels(&t),
            "neither side condition holds".into(),
        )),
    }
}

/// `e^λ` for the tuple `(x, y, ω, α, β)`; the first-component branch is
/// canonical when both branches apply.
pub fn lambda_factor<M: MoebiusStructure>(
    m: &M,
    x: usize,
    y: usize,
    omega: usize,
    alpha: usize,
    beta: usize,
) -> Result<ExtScalar<M::Scalar>> {
    let t = [x, y, omega, alpha, beta];
    check_base(m, t)?;
    lambda_with(&Evaluations::new(m, false), t)
}

/// `λ` for the tuple `(x, y, ω, α, β)`.
pub fn lambda_of<M: MoebiusStructure>(
    m: &M,
    x: usize,
    y: usize,
    omega: usize,
    alpha: usize,
    beta: usize,
) -> Result<ExtLog> {
    Ok(ext_ln(&lambda_factor(m, x, y, omega, alpha, beta)?))
}

/// Scan plans for [`check_axioms`].
#[derive(Clone, Copy, Debug)]
pub struct AxiomPlan {
    pub quadruples: ScanPlan,
    pub quintuples: ScanPlan,
}

impl AxiomPlan {
    pub const EXHAUSTIVE: AxiomPlan = AxiomPlan {
        quadruples: ScanPlan::Exhaustive,
        quintuples: ScanPlan::Exhaustive,
    };

    /// Exhaustive up to 12 points, seeded samples beyond.
    pub fn for_size(n: usize, budget: usize, seed: u64) -> Self {
        AxiomPlan {
            quadruples: ScanPlan::auto(n, 12, budget, seed),
            quintuples: ScanPlan::auto(n, 12, budget, seed.wrapping_add(1)),
        }
    }
}

/// Verifies the four structure axioms:
/// 1. `M(πP) = sgn(π)φ(π)M(P)` for every admissible `P` and `π ∈ S4`;
/// 2. `M(P)` is finite iff `P` is non-degenerate;
/// 3. `M(x,x,y,z) = (0, ∞, -∞)`;
/// 4. the λ identity on admissible quintuples `(x, y, ω, α, β)`: third
///    component zero and first two opposite under the full side conditions,
///    each of the first two well defined under its own side condition.
pub fn check_axioms<M: MoebiusStructure>(m: &M, plan: AxiomPlan) -> Report {
    let mut report = Report::new("axioms");
    let n = m.size();
    let tol = m.tolerance();
    let ev = Evaluations::new(m, true);
    let perms = Perm4::all();
    let quads = admissible_tuples::<4>(n, plan.quadruples);

    let quad_violations: Vec<Vec<Violation>> = quads
        .par_iter()
        .map(|&q| {
            let mut out = Vec::new();
            let labels = || m.point_labels(&q);
            let base = match ev.get(q) {
                Ok(t) => t,
                Err(e) => {
                    out.push(Violation::new("evaluation", labels(), e.to_string()));
                    return out;
                }
            };
            for p in &perms {
                if p.is_identity() {
                    continue;
                }
                let expected = act_ratio(p, &base);
                match ev.get(p.permute(&q)) {
                    Ok(got) if got.close(&expected, tol) => {}
                    Ok(got) => out.push(
                        Violation::new("property-1", labels(), format!("M(πP) = {got}, expected {expected}"))
                            .with_perm(p),
                    ),
                    Err(e) => out.push(Violation::new("property-1", labels(), e.to_string()).with_perm(p)),
                }
            }
            if base.is_interior() != is_nondegenerate(&q) {
                out.push(Violation::new(
                    "property-2",
                    labels(),
                    format!("M(P) = {base} but the quadruple is {}", if is_nondegenerate(&q) { "non-degenerate" } else { "degenerate" }),
                ));
            }
            if q[0] == q[1] && base != RatioTriple::boundary(0) {
                out.push(Violation::new("property-3", labels(), format!("M(x,x,y,z) = {base}")));
            }
            out
        })
        .collect();
    report.count("quadruples", quads.len() as u64);
    report.count("permutations", (quads.len() * (perms.len() - 1)) as u64);
    report.extend(quad_violations.into_iter().flatten());

    let quints: Vec<[usize; 5]> = admissible_tuples::<5>(n, plan.quintuples)
        .into_iter()
        .filter(|t| t[2] != t[3] && t[2] != t[4] && t[3] != t[4])
        .collect();
    let quint_violations: Vec<Vec<Violation>> = quints
        .par_iter()
        .map(|&t| {
            let [x, y, _, a, b] = t;
            let mut out = Vec::new();
            let labels = || m.point_labels(&t);
            let a_ok = x != b && y != a;
            let b_ok = x != a && y != b;
            let va = a_ok.then(|| a_branch(&ev, t));
            let vb = b_ok.then(|| b_branch(&ev, t));
            for (v, which) in [(&va, "first"), (&vb, "second")] {
                if let Some(Err(e)) = v {
                    out.push(Violation::new("property-4", labels(), format!("{which} component: {e}")));
                }
            }
            if let (Some(Ok(va)), Some(Ok(vb))) = (&va, &vb) {
                if !va.close(vb, tol) {
                    out.push(Violation::new(
                        "property-4",
                        labels(),
                        format!("first and second components not opposite: e^λ = {va} vs {vb}"),
                    ));
                }
                match c_product(&ev, t) {
                    Ok(c) if c.close(&ExtScalar::one(), tol) => {}
                    Ok(c) => out.push(Violation::new(
                        "property-4",
                        labels(),
                        format!("third component is ln {c}, not 0"),
                    )),
                    Err(e) => out.push(Violation::new("property-4", labels(), format!("third component: {e}"))),
                }
            }
            out
        })
        .collect();
    report.count("quintuples", quints.len() as u64);
    report.extend(quint_violations.into_iter().flatten());
    report.set_info("quadruple_plan", plan.quadruples);
    report.set_info("quintuple_plan", plan.quintuples);
    report
}

/// The derived semi-metric `d_A` for `A = (ω, α, β)`, tabulated with `ω` as
/// the point at infinity. Fails with [`Error::BranchDisagreement`] when the
/// two defining branches disagree.
pub fn derive_da<M: MoebiusStructure>(m: &M, base: [usize; 3]) -> Result<FiniteSpace<M::Scalar>> {
    let ev = Evaluations::new(m, false);
    derive_with(&ev, base)
}

fn derive_with<M: MoebiusStructure>(ev: &Evaluations<'_, M>, base: [usize; 3]) -> Result<FiniteSpace<M::Scalar>> {
    let m = ev.m;
    let n = m.size();
    let [w, a, b] = base;
    if base.iter().any(|&i| i >= n) || !is_nondegenerate(&base) {
        return Err(Error::InadmissibleTuple(
            base.iter().map(|&i| i.to_string()).collect(),
            "base triple needs three distinct points".into(),
        ));
    }
    let rows: Vec<Vec<ExtScalar<M::Scalar>>> = (0..n)
        .into_par_iter()
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        Ok(ExtScalar::zero())
                    } else {
                        lambda_with(ev, [x, y, w, a, b])
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = m.point_labels(&(0..n).collect::<Vec<_>>());
    Ok(FiniteSpace::new(labels, rows, Some(w))?.with_tol(m.tolerance()))
}

/// The involution at `o`: `d_o(x,y) = d(x,y)/(d(x,o)d(o,y))` with infinite
/// distances cancelled; `o` becomes the point at infinity.
pub fn involute<S: Scalar>(sp: &FiniteSpace<S>, o: usize) -> Result<FiniteSpace<S>> {
    if o >= sp.len() {
        return Err(Error::InvalidInput(format!("point index {o} out of range")));
    }
    if sp.infinity() == Some(o) {
        return Err(Error::InvalidInput("cannot involute at the point at infinity".into()));
    }
    let n = sp.len();
    let rows = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| {
                    if x == y {
                        return Ok(ExtScalar::zero());
                    }
                    let num = FormalProduct::from(sp.d(x, y));
                    fp_ratio(&num, &fp_mul(sp.d(x, o), sp.d(o, y)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FiniteSpace::new(sp.labels().to_vec(), rows, Some(o))?.with_tol(sp.tol()))
}

fn close_spaces<S: Scalar>(
    report: &mut Report,
    property: &str,
    lhs: &FiniteSpace<S>,
    rhs: &FiniteSpace<S>,
    what: &str,
) {
    let tol = lhs.tol().max(rhs.tol());
    for x in 0..lhs.len() {
        for y in 0..lhs.len() {
            if !lhs.d(x, y).close(rhs.d(x, y), tol) {
                report.push(Violation::new(
                    property,
                    lhs.labels_of(&[x, y]),
                    format!("{what}: {} vs {}", lhs.d(x, y), rhs.d(x, y)),
                ));
            }
        }
    }
}

/// Checks the five properties of `d_A`, `A = (ω, α, β)`:
/// 1. semi-metric; 2. `d_A(x,ω) = ∞`, `d_A(α,β) = 1`;
/// 3. `d_{(ω,β,α)} = d_A` and `d_{(β,α,ω)}` is the involution of `d_A` at `β`;
/// 4. `d_{(ω,α,b)}` is a constant multiple of `d_A` for each `b` in `others`
///    (all admissible `b` when `others` is empty);
/// 5. the structure induced by `d_A` equals `m`.
pub fn verify_da_theorem<M: MoebiusStructure>(m: &M, base: [usize; 3], others: &[usize], plan: ScanPlan) -> Report {
    let mut report = Report::new("verify-da");
    report.set_info("base", m.point_labels(&base));
    let ev = Evaluations::new(m, true);
    let n = m.size();
    let [w, a, b] = base;
    let da = match derive_with(&ev, base) {
        Ok(d) => d,
        Err(e) => {
            report.push(Violation::new("da-derive", m.point_labels(&base), e.to_string()));
            return report;
        }
    };
    let tol = m.tolerance();

    for v in da.validate().witnesses {
        report.push(Violation { property: "da-1".into(), ..v });
    }

    for x in (0..n).filter(|&x| x != w) {
        if !da.d(x, w).is_infinite() {
            report.push(Violation::new("da-2", da.labels_of(&[x, w]), format!("d_A(x,ω) = {}", da.d(x, w))));
        }
    }
    if !da.d(a, b).close(&ExtScalar::one(), tol) {
        report.push(Violation::new("da-2", da.labels_of(&[a, b]), format!("d_A(α,β) = {}", da.d(a, b))));
    }

    match derive_with(&ev, [w, b, a]) {
        Ok(swapped) => close_spaces(&mut report, "da-3", &da, &swapped, "d_(ω,β,α) differs"),
        Err(e) => report.push(Violation::new("da-3", m.point_labels(&[w, b, a]), e.to_string())),
    }
    match (derive_with(&ev, [b, a, w]), involute(&da, b)) {
        (Ok(rotated), Ok(inv)) => close_spaces(&mut report, "da-3", &rotated, &inv, "involution identity"),
        (Err(e), _) | (_, Err(e)) => report.push(Violation::new("da-3", m.point_labels(&[b, a, w]), e.to_string())),
    }

    let candidates: Vec<usize> = if others.is_empty() {
        (0..n).filter(|&c| c != w && c != a).collect()
    } else {
        others.to_vec()
    };
    for &c in &candidates {
        let other = match derive_with(&ev, [w, a, c]) {
            Ok(d) => d,
            Err(e) => {
                report.push(Violation::new("da-4", m.point_labels(&[w, a, c]), e.to_string()));
                continue;
            }
        };
        let mut constant: Option<M::Scalar> = None;
        for x in 0..n {
            for y in (0..n).filter(|&y| y != x && x != w && y != w) {
                let (Some(p), Some(q)) = (da.d(x, y).as_finite(), other.d(x, y).as_finite()) else {
                    report.push(Violation::new("da-4", da.labels_of(&[x, y]), "infinite distance off ω"));
                    continue;
                };
                let ratio = p.clone() / q.clone();
                match &constant {
                    None => constant = Some(ratio),
                    Some(l) if l.close(&ratio, tol) => {}
                    Some(l) => report.push(Violation::new(
                        "da-4",
                        da.labels_of(&[x, y, c]),
                        format!("ratio {ratio} differs from {l}"),
                    )),
                }
            }
        }
    }
    report.count("rescaling_bases", candidates.len() as u64);

    let quads = admissible_tuples::<4>(n, plan);
    let diffs: Vec<Option<Violation>> = quads
        .par_iter()
        .map(|&q| {
            let labels = || m.point_labels(&q);
            match (da.evaluate(q), ev.get(q)) {
                (Ok(x), Ok(y)) if x.close(&y, tol) => None,
                (Ok(x), Ok(y)) => Some(Violation::new("da-5", labels(), format!("M_A = {x}, M = {y}"))),
                (Err(e), _) | (_, Err(e)) => Some(Violation::new("da-5", labels(), e.to_string())),
            }
        })
        .collect();
    report.count("quadruples", quads.len() as u64);
    report.extend(diffs.into_iter().flatten());
    report
}

/// Checks that `f` (given as images of `0..n`) is a bijection preserving the
/// structure on admissible quadruples, and that `d_A(x,y) = d_{f(A)}(f(x),f(y))`
/// over the base triples selected by `bases`.
pub fn check_equivalence<M1, M2>(m1: &M1, m2: &M2, f: &[usize], quads: ScanPlan, bases: ScanPlan) -> Report
where
    M1: MoebiusStructure,
    M2: MoebiusStructure<Scalar = M1::Scalar>,
{
    let mut report = Report::new("equivalence");
    let n = m1.size();
    let mut hit = vec![false; m2.size()];
    let bijective = f.len() == n
        && m2.size() == n
        && f.iter().all(|&i| i < n && !std::mem::replace(&mut hit[i], true));
    if !bijective {
        report.push(Violation::new("bijection", vec![], "map is not a bijection between the domains"));
        return report;
    }
    let tol = m1.tolerance().max(m2.tolerance());
    let ev1 = Evaluations::new(m1, true);
    let ev2 = Evaluations::new(m2, true);
    let image = |q: [usize; 4]| q.map(|i| f[i]);

    let qs = admissible_tuples::<4>(n, quads);
    let diffs: Vec<Option<Violation>> = qs
        .par_iter()
        .map(|&q| match (ev1.get(q), ev2.get(image(q))) {
            (Ok(x), Ok(y)) if x.close(&y, tol) => None,
            (Ok(x), Ok(y)) => Some(Violation::new("equivalence-M", m1.point_labels(&q), format!("{x} vs {y}"))),
            (Err(e), _) | (_, Err(e)) => Some(Violation::new("equivalence-M", m1.point_labels(&q), e.to_string())),
        })
        .collect();
    report.count("quadruples", qs.len() as u64);
    report.extend(diffs.into_iter().flatten());

    let triples = nondegenerate_tuples::<3>(n, bases);
    let derived: Vec<Vec<Violation>> = triples
        .par_iter()
        .map(|&t| {
            let ft = t.map(|i| f[i]);
            match (derive_with(&ev1, t), derive_with(&ev2, ft)) {
                (Ok(d1), Ok(d2)) => {
                    let mut out = Vec::new();
                    for x in 0..n {
                        for y in 0..n {
                            if !d1.d(x, y).close(d2.d(f[x], f[y]), tol) {
                                out.push(Violation::new(
                                    "equivalence-dA",
                                    m1.point_labels(&[t[0], t[1], t[2], x, y]),
                                    format!("{} vs {}", d1.d(x, y), d2.d(f[x], f[y])),
                                ));
                            }
                        }
                    }
                    out
                }
                (Err(e), _) | (_, Err(e)) => vec![Violation::new("equivalence-dA", m1.point_labels(&t), e.to_string())],
            }
        })
        .collect();
    report.count("base_triples", triples.len() as u64);
    report.extend(derived.into_iter().flatten());
    report
}
