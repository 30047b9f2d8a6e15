//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::time::{Duration, Instant};

use moebius_core::conditions::{boundedify, corner_margin, infinity_corner_k, quasi_constant};
use moebius_core::ext::ExtScalar;
use moebius_core::fixtures::{
    circle_points, circle_space, doubled_zero_line, punctured_interval, random_metric, random_quasimetric,
    random_with_infinity, sample_indices, Circle, Line, LinePoint,
};
use moebius_core::perms::{phi_map, slot_source, Perm3, Perm4, EVALUATION_TABLE};
use moebius_core::scalar::{ratio, Rational, Scalar};
use moebius_core::scan::{nondegenerate_tuples, ScanPlan};
use moebius_core::sequences::{
    adjoin_limits, classify, condition2, condition3, default_candidates, good_pairs, AdjoinOutcome, Classification,
    DiagnosticParams, Family, SequenceHandle,
};
use moebius_core::space::{materialize, FiniteSpace};
use moebius_core::structure::{check_axioms, check_equivalence, derive_da, verify_da_theorem, AxiomPlan};
use moebius_core::triples::{from_log, to_log, to_proj, to_ratio, LogTriple, ProjTriple, RatioTriple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn run(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let ok = out.ok && in_time;
    let timing = if in_time {
        format!("{:.2}s", elapsed.as_secs_f64())
    } else {
        format!("{:.2}s, over the {}s limit", elapsed.as_secs_f64(), limit.as_secs())
    };
    println!(
        "AC{id:<2} {} {name}: {} ({timing})",
        if ok { "PASS" } else { "FAIL" },
        out.detail
    );
    ok
}

fn metric_corpus() -> Vec<FiniteSpace<Rational>> {
    (0..50u64).map(|s| random_metric(4 + (s % 5) as usize, s)).collect()
}

fn infinity_corpus() -> Vec<FiniteSpace<Rational>> {
    (0..30u64).map(|s| random_with_infinity(4 + (s % 5) as usize, s)).collect()
}

fn ac1() -> Outcome {
    let mut table_misses = Vec::new();
    for (p, q) in EVALUATION_TABLE {
        let p: Perm4 = p.parse().expect("table entry parses");
        let q: Perm3 = q.parse().expect("table entry parses");
        if slot_source(&p) != q {
            table_misses.push(p.to_string());
        }
    }
    let all = Perm4::all();
    let mut hom = 0;
    let mut table_hom = 0;
    for p in &all {
        for q in &all {
            if phi_map(&p.compose(q)) == phi_map(p).compose(&phi_map(q)) {
                hom += 1;
            }
            // The table is a homomorphism for the left-to-right product.
            if slot_source(&p.compose(q)) == slot_source(q).compose(&slot_source(p)) {
                table_hom += 1;
            }
        }
    }
    let covered: std::collections::BTreeSet<String> = EVALUATION_TABLE.iter().map(|(p, _)| p.to_string()).collect();
    outcome(
        table_misses.is_empty() && covered.len() == 24 && hom == 576 && table_hom == 576,
        format!(
            "table rows matched {}/24, phi_map homomorphism {hom}/576, table map homomorphism {table_hom}/576",
            24 - table_misses.len()
        ),
    )
}

fn ac2(corpus: &[FiniteSpace<Rational>]) -> Outcome {
    let mut bad = 0;
    let mut quads = 0;
    let mut quints = 0;
    for sp in corpus {
        let r = check_axioms(sp, AxiomPlan::EXHAUSTIVE);
        if !r.passed() {
            bad += 1;
        }
        quads += r.counts.get("quadruples").copied().unwrap_or(0);
        quints += r.counts.get("quintuples").copied().unwrap_or(0);
    }
    outcome(
        bad == 0,
        format!("{} spaces, {bad} with violations; {quads} quadruples, {quints} quintuples, exact", corpus.len()),
    )
}

fn ac3(corpus: &[FiniteSpace<Rational>]) -> Outcome {
    let mut bad = Vec::new();
    let mut bases = 0;
    for (s, sp) in corpus.iter().enumerate() {
        let n = sp.len();
        let mut triples = nondegenerate_tuples::<3>(n, ScanPlan::Exhaustive);
        if n > 6 {
            let keep = sample_indices(triples.len(), 24, s as u64);
            triples = keep.into_iter().map(|i| triples[i]).collect();
        }
        for base in triples {
            bases += 1;
            let r = verify_da_theorem(sp, base, &[], ScanPlan::Exhaustive);
            if !r.passed() {
                bad.push((s, base, r.witnesses[0].property.clone()));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("{bases} base triples, {} failing{}", bad.len(), bad.first().map_or(String::new(), |b| format!(", first {b:?}"))),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn ac4() -> Outcome {
    let mut exact_ok = true;
    for k in 0..3 {
        let p = ProjTriple::<Rational>::boundary(k);
        let r = to_ratio(&p);
        exact_ok &= r == RatioTriple::boundary(k);
        exact_ok &= to_proj(&r).is_ok_and(|q| q == p);
        exact_ok &= to_log(&r) == LogTriple::boundary(k);
        exact_ok &= from_log(&LogTriple::boundary(k)) == RatioTriple::<f64>::boundary(k);
        let pf = ProjTriple::<f64>::boundary(k);
        exact_ok &= to_proj(&from_log(&to_log(&to_ratio(&pf)))).is_ok_and(|q| q == pf);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let e: [f64; 3] = std::array::from_fn(|_| rng.gen_range(1e-3..1.0));
        let p = ProjTriple::from_entries(e).expect("interior");
        let r = to_ratio(&p);
        let back = to_proj(&r).expect("interior");
        for (a, b) in p.entries().iter().zip(back.entries()) {
            worst = worst.max(rel(*a, *b));
        }
        let r2 = from_log(&to_log(&r));
        for (a, b) in r.entries().iter().zip(r2.entries()) {
            worst = worst.max(rel(a.to_f64(), b.to_f64()));
        }
    }
    outcome(
        exact_ok && worst <= 1e-9,
        format!("boundary roundtrips exact: {exact_ok}; worst relative error on 10^4 interior triples {worst:.2e}"),
    )
}

fn ac5(corpus: &[FiniteSpace<Rational>]) -> Outcome {
    let quarter = ExtScalar::Finite(ratio(1, 4));
    let mut metric_min = ExtScalar::<Rational>::Infinite;
    let mut bad = 0;
    for sp in corpus {
        let c = corner_margin(sp, ScanPlan::Exhaustive).expect("corner scan");
        if c.margin < quarter {
            bad += 1;
        }
        if c.margin < metric_min {
            metric_min = c.margin;
        }
    }
    let mut quasi = Vec::new();
    for k in [2u32, 4, 8] {
        let bound = ExtScalar::Finite(ratio(1, (k * k) as i64));
        let mut low = ExtScalar::<Rational>::Infinite;
        for s in 0..10u64 {
            let sp = random_quasimetric(4 + (s % 4) as usize, k, s);
            let c = corner_margin(&sp, ScanPlan::Exhaustive).expect("corner scan");
            if c.margin < bound {
                bad += 1;
            }
            if c.margin < low {
                low = c.margin;
            }
        }
        quasi.push(format!("K={k}: min {low}"));
    }
    outcome(
        bad == 0,
        format!("metric min margin {metric_min} (bound 1/4); {}; {bad} below bound", quasi.join(", ")),
    )
}

fn ac6(corpus: &[FiniteSpace<Rational>]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    for sp in corpus {
        match infinity_corner_k(sp) {
            Ok(ic) => worst = worst.max(rel(ic.k.to_f64(), quasi_constant(sp).k.to_f64())),
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && worst <= 1e-9,
        format!("{} spaces, worst relative gap {worst:.2e}, {errors} errors", corpus.len()),
    )
}

fn ac7(corpus: &[FiniteSpace<Rational>]) -> Outcome {
    let mut unbounded = 0;
    let mut moved = 0;
    let mut over = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for (s, sp) in corpus.iter().enumerate() {
        let k = quasi_constant(sp).k;
        let zeta0 = (0..sp.len()).find(|&i| Some(i) != sp.infinity()).expect("finite point");
        let b = boundedify(sp, zeta0).expect("boundedify");
        let n = b.len();
        let sup = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| b.d(i, j).clone())
            .fold(ExtScalar::zero(), |a, v| if v > a { v } else { a });
        if sup > k {
            unbounded += 1;
        }
        let id: Vec<usize> = (0..n).collect();
        if !check_equivalence(sp, &b, &id, ScanPlan::Exhaustive, ScanPlan::Exhaustive).passed() {
            moved += 1;
        }
        let kb = quasi_constant(&b).k;
        worst_ratio = worst_ratio.max(kb.to_f64() / k.to_f64());
        let two_k = ExtScalar::Finite(ratio(2, 1)).checked_mul(&k).expect("finite K");
        if kb > two_k {
            over.push(s);
        }
    }
    outcome(
        unbounded == 0 && moved == 0 && over.is_empty(),
        format!(
            "{} spaces: {unbounded} exceed K_input, {moved} change M, {} exceed 2K (worst K_out/K_in {worst_ratio:.4})",
            corpus.len(),
            over.len()
        ),
    )
}

fn ac8() -> Outcome {
    let start = Instant::now();
    let sp = circle_space::<f64>(720);
    let k = quasi_constant(&sp);
    let k_time = start.elapsed();
    let kv = k.k.to_f64();
    let params = DiagnosticParams::default();
    let circle = Circle::<f64>::new();
    let seq = Family::AlternatingReciprocal.handle(10_000, Circle::<f64>::point, false);
    let cands = default_candidates(&circle_points::<f64>(720), &[1.0, 2.0, 1.5, 2.5], &params);
    let pairs = good_pairs(&seq, &circle, &cands, &params);
    let mut only3 = Vec::new();
    let mut both = Vec::new();
    for g in &pairs {
        let (y, z) = (&cands[g.indices[0]], &cands[g.indices[1]]);
        let c3 = condition3(&seq, y, z, &circle, &params);
        if !c3.satisfied {
            continue;
        }
        if condition2(&seq, y, z, &circle, &params).satisfied {
            both.push(g.pair.clone());
        } else {
            only3.push(g.pair.clone());
        }
    }
    let narrative = !only3.is_empty() && !both.is_empty();
    outcome(
        kv <= 12.0 * (1.0 + 1e-12) && k_time < Duration::from_secs(300) && narrative,
        format!(
            "K = {kv} at grid 720 ({:.1}s); {} good pairs, {} pass 3 not 2 (e.g. {:?}), {} pass both (e.g. {:?})",
            k_time.as_secs_f64(),
            pairs.len(),
            only3.len(),
            only3.first(),
            both.len(),
            both.first()
        ),
    )
}

fn ac9() -> Outcome {
    let sp = doubled_zero_line(&ratio(3, 1), 12);
    let n = sp.len();
    let reals: Vec<usize> = (2..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    let mut bad = 0;
    for t in 0..20 {
        let (omega, other) = if t % 2 == 0 { (0, 1) } else { (1, 0) };
        let a = reals[rng.gen_range(0..reals.len())];
        let b = loop {
            let b = reals[rng.gen_range(0..reals.len())];
            if b != a {
                break b;
            }
        };
        let (alpha, beta) = (value_of(&sp, a), value_of(&sp, b));
        let c = (alpha.clone() * beta.clone()).abs() / (alpha - beta).abs();
        let da = derive_da(&sp, [omega, a, b]).expect("base triple");
        for &y in &reals {
            checked += 1;
            if da.d(other, y) != &ExtScalar::Finite(c.clone()) {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("20 base triples, {checked} values, {bad} differ from |αβ|/|α−β|"))
}

fn value_of(sp: &FiniteSpace<Rational>, i: usize) -> Rational {
    sp.label(i).parse().expect("real points are labelled by their value")
}

fn lp(x: Rational) -> Option<LinePoint<Rational>> {
    Some(LinePoint::At(x))
}

fn battery() -> Vec<(SequenceHandle<LinePoint<Rational>>, bool, Classification)> {
    let h = 10_000;
    let seq = |label: &str, f: fn(i64) -> Rational| SequenceHandle::new(label, h, move |n| LinePoint::At(f(n as i64)));
    use Classification::*;
    vec![
        (Family::Reciprocal.handle(h, lp, false), true, BoundedCauchy),
        (seq("1-1/n", |n| ratio(n - 1, n)), true, BoundedCauchy),
        (seq("1/2+(-1)^n/(2n)", |n| ratio(1, 2) + ratio(if n % 2 == 0 { 1 } else { -1 }, 2 * n)), true, BoundedCauchy),
        (seq("1/n^2", |n| ratio(1, n * n)), true, BoundedCauchy),
        (Family::Constant(ratio(1, 3)).handle(h, lp, false), true, BoundedCauchy),
        (seq("1/4,3/4", |n| ratio(1 + 2 * (n % 2), 4)), true, NotCauchy),
        (
            Family::Linear {
                slope: ratio(1, 1),
                offset: ratio(0, 1),
            }
            .handle(h, lp, false),
            false,
            Divergent,
        ),
        (
            Family::Linear {
                slope: ratio(2, 1),
                offset: ratio(1, 1),
            }
            .handle(h, lp, false),
            false,
            Divergent,
        ),
        (seq("(-1)^n n", |n| ratio(if n % 2 == 0 { n } else { -n }, 1)), false, Divergent),
        (Family::Constant(ratio(7, 1)).handle(h, lp, false), false, BoundedCauchy),
        (seq("n mod 2", |n| ratio(n % 2, 1)), false, NotCauchy),
        (seq("n or 0", |n| ratio(if n % 2 == 0 { n } else { 0 }, 1)), false, NotCauchy),
    ]
}

fn ac10() -> Outcome {
    let params = DiagnosticParams::default();
    let line = Line::<Rational>::new();
    let interval: Vec<_> = (1..=100).map(|k| LinePoint::At(ratio(k, 100))).collect();
    let integers: Vec<_> = (0..20).map(|k| LinePoint::At(ratio(k, 1))).collect();
    let fixtures_match = materialize(&line, &interval).ok() == Some(punctured_interval(100))
        && materialize(&line, &integers).ok() == Some(moebius_core::fixtures::integer_line(20));
    let mut misses = Vec::new();
    let cases = battery();
    for (seq, on_interval, want) in &cases {
        let pool = if *on_interval { &interval } else { &integers };
        let cands = default_candidates(pool, &[], &params);
        match classify(seq, &line, &cands, &params) {
            Ok(v) if v.classification == *want => {}
            Ok(v) => misses.push(format!("{}: {} (want {want})", seq.label(), v.classification)),
            Err(e) => misses.push(format!("{}: {e}", seq.label())),
        }
    }
    outcome(
        fixtures_match && misses.is_empty(),
        format!("{}/{} verdicts agree{}", cases.len() - misses.len(), cases.len(), if misses.is_empty() { String::new() } else { format!("; {}", misses.join("; ")) }),
    )
}

fn ac11() -> Outcome {
    let params = DiagnosticParams::default();
    let line = Line::<Rational>::new();
    let old: Vec<_> = (1..=100).map(|k| LinePoint::At(ratio(k, 100))).collect();
    let seq = Family::Reciprocal.handle(10_000, lp, true);
    let out = match adjoin_limits(&line, &old, &[seq], &params) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("adjoin failed: {e}")),
    };
    let axioms = check_axioms(&out.space, AxiomPlan::for_size(out.space.len(), 20_000, 11));
    let new_point = matches!(out.report.points[0].outcome, AdjoinOutcome::New { index: 100 });
    let limit_res = out.report.points[0].d_limit_residual.unwrap_or(f64::INFINITY);
    let first_ok = out.report.passed && axioms.passed() && new_point && out.report.crt_mismatches == 0;

    let mut equiv = 0;
    let mut tried = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in 0..10u64 {
        let sp = if s % 2 == 0 {
            random_metric(5 + (s % 3) as usize, s)
        } else {
            random_with_infinity(5 + (s % 3) as usize, s)
        };
        let n = sp.len();
        let mut table: Vec<usize> = (0..rng.gen_range(1..8)).map(|_| rng.gen_range(0..n)).collect();
        table.push(rng.gen_range(0..n));
        let seq = SequenceHandle::table("tail", table, 1000).expect("non-empty");
        let ids: Vec<usize> = (0..n).collect();
        tried += 1;
        if let Ok(o) = adjoin_limits(&sp, &ids, &[seq], &params) {
            if o.space.len() == n
                && check_equivalence(&sp, &o.space, &ids, ScanPlan::Exhaustive, ScanPlan::Exhaustive).passed()
            {
                equiv += 1;
            }
        }
    }
    outcome(
        first_ok && equiv == tried,
        format!(
            "interval: adjoin passed {}, axioms passed {} ({} quadruples), crt mismatches {}, d-limit residual {limit_res:.1e}; eventually constant: {equiv}/{tried} equivalent",
            out.report.passed,
            axioms.passed(),
            axioms.counts.get("quadruples").copied().unwrap_or(0),
            out.report.crt_mismatches
        ),
    )
}

fn main() {
    let metrics = metric_corpus();
    let with_inf = infinity_corpus();
    let s = Duration::from_secs;
    let results = [
        run(1, "evaluation table", s(1), ac1),
        run(2, "axiom suite", s(60), || ac2(&metrics)),
        run(3, "d_A theorem suite", s(120), || ac3(&metrics)),
        run(4, "encoding roundtrips", s(60), ac4),
        run(5, "corner constants", s(60), || ac5(&metrics)),
        run(6, "corner/quasi duality", s(60), || ac6(&with_inf)),
        run(7, "boundedification", s(60), || ac7(&with_inf)),
        run(8, "circle fixture", s(300), ac8),
        run(9, "doubled-zero constant", s(60), ac9),
        run(10, "Cauchy battery", s(120), ac10),
        run(11, "desk completion", s(120), ac11),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
