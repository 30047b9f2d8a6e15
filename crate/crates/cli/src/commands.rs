//! Subcommand implementations, generic over the numeric backend.

use moebius_core::conditions::{corner_margin, symmetry_margin};
use moebius_core::fixtures::{
    binary_ultrametric, circle_space, doubled_zero_line, extended_line, integer_line,
    punctured_interval, random_metric, random_quasimetric, random_with_infinity, Circle, Line, LinePoint,
};
use moebius_core::io::space_to_json;
use moebius_core::sequences::{default_candidates, DiagnosticParams};
use moebius_core::triples::{to_log, to_proj};
use moebius_core::{
    adjoin_limits, boundedify, cauchy_equivalent, check_axioms, classify, derive_da, involute, quasi_constant,
    verify_da_theorem, AxiomPlan, Error, Family, FiniteSpace, MoebiusStructure, Rational, Scalar, ScanPlan,
    SequenceHandle, Space,
};
use serde_json::{json, Value};

use crate::input::{load, parse_scalar, require_input, resolve, resolve_n, Loaded};
use crate::{Ambient, Cli, Command, FixtureName, Global, InputError, Mode, Outcome, SeqArgs};

/// Structure scans run exhaustively up to this many points.
const EXHAUSTIVE_POINTS: usize = 12;
/// Condition scans only visit quadruples, so they stay exhaustive longer.
const EXHAUSTIVE_CONDITION_POINTS: usize = 24;

pub fn run(cli: &Cli) -> Result<Outcome, InputError> {
    if let Command::Fixture { name, size, k, extent } = &cli.command {
        return fixture(*name, *size, *k, extent, &cli.global);
    }
    match cli.global.mode {
        Mode::Exact => run_mode::<Rational>(cli),
        Mode::Float => run_mode::<f64>(cli),
    }
}

fn pass(result: Value) -> Outcome {
    Outcome { result, passed: true }
}

/// Diagnostics that could not be evaluated are reported as failures.
fn failed(e: Error) -> Outcome {
    Outcome {
        result: json!({ "error": e.to_string() }),
        passed: false,
    }
}

fn space_of<S>(loaded: Loaded<S>, what: &str) -> Result<FiniteSpace<S>, InputError> {
    match loaded {
        Loaded::Space(sp) => Ok(sp),
        Loaded::Table(_) => Err(InputError(format!("{what} needs a space, not a cross-ratio table"))),
    }
}

macro_rules! on_structure {
    ($loaded:expr, |$m:ident| $body:expr) => {
        match $loaded {
            Loaded::Space(sp) => {
                let $m = &sp;
                $body
            }
            Loaded::Table(tb) => {
                let $m = &tb;
                $body
            }
        }
    };
}

fn labels<M: MoebiusStructure>(m: &M) -> Vec<String> {
    m.point_labels(&(0..m.size()).collect::<Vec<_>>())
}

fn run_mode<S: Scalar>(cli: &Cli) -> Result<Outcome, InputError> {
    let g = &cli.global;
    let load_input = || load::<S>(require_input(&g.input)?, g.tol);
    match &cli.command {
        Command::Validate => {
            let sp = space_of(load_input()?, "validate")?;
            let r = sp.validate();
            Ok(Outcome {
                passed: r.passed(),
                result: serde_json::to_value(r)?,
            })
        }
        Command::Crt { quad } => on_structure!(load_input()?, |m| {
            let q = resolve_n::<4>(&labels(m), quad, "--quad")?;
            let r = m.evaluate(q)?;
            let proj = to_proj(&r)?;
            Ok(pass(json!({
                "quad": m.point_labels(&q),
                "crt": proj.entries().iter().map(|e| e.to_json()).collect::<Vec<_>>(),
                "ratio": r.to_json(),
                "log": to_log(&r),
            })))
        }),
        Command::Axioms => on_structure!(load_input()?, |m| {
            let r = check_axioms(m, AxiomPlan::for_size(m.size(), g.budget, g.seed));
            Ok(Outcome {
                passed: r.passed(),
                result: serde_json::to_value(r)?,
            })
        }),
        Command::DeriveDa { base } => on_structure!(load_input()?, |m| {
            let b = resolve_n::<3>(&labels(m), base, "--base")?;
            let da = derive_da(m, b)?;
            Ok(pass(json!({ "base": m.point_labels(&b), "space": space_to_json(&da) })))
        }),
        Command::VerifyDa { base } => on_structure!(load_input()?, |m| {
            let b = resolve_n::<3>(&labels(m), base, "--base")?;
            let plan = ScanPlan::auto(m.size(), EXHAUSTIVE_POINTS, g.budget, g.seed);
            let r = verify_da_theorem(m, b, &[], plan);
            Ok(Outcome {
                passed: r.passed(),
                result: serde_json::to_value(r)?,
            })
        }),
        Command::Involute { point } => {
            let sp = space_of(load_input()?, "involute")?;
            let [o] = resolve_n::<1>(sp.labels(), std::slice::from_ref(point), "--point")?;
            let out = involute(&sp, o)?;
            Ok(pass(json!({ "point": point, "space": space_to_json(&out) })))
        }
        Command::QuasiK => {
            let sp = space_of(load_input()?, "quasi-k")?;
            let k = quasi_constant(&sp);
            Ok(Outcome {
                passed: !k.k.is_infinite(),
                result: serde_json::to_value(k.report(&sp))?,
            })
        }
        Command::Corner => on_structure!(load_input()?, |m| {
            let plan = ScanPlan::auto(m.size(), EXHAUSTIVE_CONDITION_POINTS, g.budget, g.seed);
            Ok(match corner_margin(m, plan) {
                Ok(c) => Outcome {
                    passed: c.margin.to_f64() > 0.0,
                    result: serde_json::to_value(c.report(m))?,
                },
                Err(e) => failed(e),
            })
        }),
        Command::Symmetry => on_structure!(load_input()?, |m| {
            let plan = ScanPlan::auto(m.size(), EXHAUSTIVE_CONDITION_POINTS, g.budget, g.seed);
            Ok(match symmetry_margin(m, plan) {
                Ok(s) => Outcome {
                    passed: s.margin.to_f64() > 0.0,
                    result: serde_json::to_value(s.report(m))?,
                },
                Err(e) => failed(e),
            })
        }),
        Command::Boundedify { zeta0 } => {
            let sp = space_of(load_input()?, "boundedify")?;
            let [z] = resolve_n::<1>(sp.labels(), std::slice::from_ref(zeta0), "--zeta0")?;
            let out = boundedify(&sp, z)?;
            Ok(pass(json!({
                "zeta0": zeta0,
                "K_input": quasi_constant(&sp).k.to_json(),
                "K_output": quasi_constant(&out).k.to_json(),
                "space": space_to_json(&out),
            })))
        }
        Command::Cauchy(a) => sequences::<S>(cli, a, SeqOp::Classify),
        Command::Equivalent(a) => sequences::<S>(cli, a, SeqOp::Equivalent),
        Command::Adjoin(a) => sequences::<S>(cli, a, SeqOp::Adjoin),
        Command::Fixture { .. } => unreachable!("handled before mode dispatch"),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SeqOp {
    Classify,
    Equivalent,
    Adjoin,
}

enum Spec<S> {
    Family(Family<S>),
    Table(Vec<String>),
}

/// `[NAME=]reciprocal | alternating-reciprocal | linear:A,B | constant:C | table:L1;L2;…`
fn parse_spec<S: Scalar>(text: &str) -> Result<(String, Spec<S>), InputError> {
    let (label, body) = match text.split_once('=') {
        Some((l, b)) => (l.trim().to_string(), b.trim()),
        None => (text.trim().to_string(), text.trim()),
    };
    let (kind, arg) = body.split_once(':').unwrap_or((body, ""));
    let spec = match kind {
        "reciprocal" => Spec::Family(Family::Reciprocal),
        "alternating-reciprocal" => Spec::Family(Family::AlternatingReciprocal),
        "linear" => {
            let (a, b) = arg
                .split_once(',')
                .ok_or_else(|| InputError(format!("linear needs SLOPE,OFFSET in {text:?}")))?;
            Spec::Family(Family::Linear {
                slope: parse_scalar(a)?,
                offset: parse_scalar(b)?,
            })
        }
        "constant" => Spec::Family(Family::Constant(parse_scalar(arg)?)),
        "table" => {
            let entries: Vec<String> = arg.split(';').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if entries.is_empty() {
                return Err(InputError(format!("empty table in {text:?}")));
            }
            Spec::Table(entries)
        }
        other => return Err(InputError(format!("unknown sequence family {other:?}"))),
    };
    Ok((label, spec))
}

fn params(g: &Global) -> DiagnosticParams {
    DiagnosticParams {
        delta: g.delta,
        tau: g.tau,
        seed: g.seed,
        ..DiagnosticParams::default()
    }
}

fn sequences<S: Scalar>(cli: &Cli, a: &SeqArgs, op: SeqOp) -> Result<Outcome, InputError> {
    let g = &cli.global;
    if g.horizon < 8 {
        return Err(InputError("--horizon must be at least 8".into()));
    }
    if op == SeqOp::Equivalent && a.sequences.len() != 2 {
        return Err(InputError("equivalent needs exactly two --sequence arguments".into()));
    }
    let specs = a.sequences.iter().map(|s| parse_spec::<S>(s)).collect::<Result<Vec<_>, _>>()?;
    let Some(ambient) = a.ambient else {
        let path = require_input(&g.input)?;
        let sp = space_of(load::<S>(path, g.tol)?, "a sequence over a finite space")?;
        let seqs = specs
            .into_iter()
            .map(|(label, spec)| match spec {
                Spec::Table(entries) => {
                    let idx = resolve(sp.labels(), &entries)?;
                    Ok(SequenceHandle::table(label, idx, g.horizon)?)
                }
                Spec::Family(_) => Err(InputError(
                    "closed-form families need --ambient; over a finite space use table:".into(),
                )),
            })
            .collect::<Result<Vec<_>, InputError>>()?;
        let pool: Vec<usize> = (0..sp.len()).collect();
        let anchors = resolve(sp.labels(), &a.anchors)?;
        return seq_op(&sp, &pool, &anchors, &seqs, op, g);
    };
    let numbers = |names: &[String]| names.iter().map(|t| parse_scalar::<S>(t)).collect::<Result<Vec<S>, _>>();
    let pool_values = match &g.input {
        Some(path) => {
            let sp = space_of(load::<S>(path, g.tol)?, "the ambient sample")?;
            numbers(sp.labels())?
        }
        None => Vec::new(),
    };
    let anchor_values = numbers(&a.anchors)?;
    if pool_values.is_empty() && anchor_values.is_empty() {
        return Err(InputError("an ambient space needs sample points from --input or --anchors".into()));
    }
    match ambient {
        Ambient::Line | Ambient::ExtendedLine => {
            let sp = if ambient == Ambient::Line { Line::<S>::new() } else { Line::extended() };
            let to_point = |x: S| Some(LinePoint::At(x));
            ambient_op(&sp, to_point, pool_values, anchor_values, specs, a.closed_form, op, g)
        }
        Ambient::Circle => ambient_op(
            &Circle::<S>::new(),
            Circle::<S>::point,
            pool_values,
            anchor_values,
            specs,
            a.closed_form,
            op,
            g,
        ),
    }
}

#[allow(clippy::too_many_arguments)]
fn ambient_op<S: Scalar, Sp: Space<Scalar = S>>(
    sp: &Sp,
    to_point: fn(S) -> Option<Sp::Point>,
    pool: Vec<S>,
    anchors: Vec<S>,
    specs: Vec<(String, Spec<S>)>,
    closed_form: bool,
    op: SeqOp,
    g: &Global,
) -> Result<Outcome, InputError> {
    let points = |v: Vec<S>| {
        v.into_iter()
            .map(|x| to_point(x.clone()).ok_or_else(|| InputError(format!("{x} is not a point of the ambient space"))))
            .collect::<Result<Vec<_>, _>>()
    };
    let (pool, anchors) = (points(pool)?, points(anchors)?);
    let seqs = specs
        .into_iter()
        .map(|(label, spec)| match spec {
            Spec::Family(f) => {
                // Reject families that leave the space before generating lazily.
                if let Some(n) = (1..=g.horizon.min(64)).find(|&n| to_point(f.value(n)).is_none()) {
                    return Err(InputError(format!("{label}: x_{n} is not a point of the ambient space")));
                }
                Ok(f.handle(g.horizon, to_point, closed_form).with_label(label))
            }
            Spec::Table(entries) => {
                let values = entries.iter().map(|t| parse_scalar::<S>(t)).collect::<Result<Vec<_>, _>>()?;
                Ok(SequenceHandle::table(label, points(values)?, g.horizon)?)
            }
        })
        .collect::<Result<Vec<_>, InputError>>()?;
    seq_op(sp, &pool, &anchors, &seqs, op, g)
}

fn seq_op<Sp: Space>(
    sp: &Sp,
    pool: &[Sp::Point],
    anchors: &[Sp::Point],
    seqs: &[SequenceHandle<Sp::Point>],
    op: SeqOp,
    g: &Global,
) -> Result<Outcome, InputError> {
    let p = params(g);
    let candidates = default_candidates(pool, anchors, &p);
    Ok(match op {
        SeqOp::Classify => {
            let mut verdicts = Vec::new();
            let mut all_cauchy = true;
            for s in seqs {
                match classify(s, sp, &candidates, &p) {
                    Ok(v) => {
                        all_cauchy &= v.classification.is_cauchy();
                        verdicts.push(serde_json::to_value(v)?);
                    }
                    Err(e) => {
                        all_cauchy = false;
                        verdicts.push(json!({ "sequence": s.label(), "error": e.to_string() }));
                    }
                }
            }
            Outcome {
                passed: all_cauchy,
                result: json!({ "candidates": candidates.len(), "verdicts": verdicts }),
            }
        }
        SeqOp::Equivalent => match cauchy_equivalent(&seqs[0], &seqs[1], sp, &candidates, &p) {
            Ok(r) => Outcome {
                passed: r.equivalent,
                result: serde_json::to_value(r)?,
            },
            Err(e) => failed(e),
        },
        SeqOp::Adjoin => match adjoin_limits(sp, pool, seqs, &p) {
            Ok(out) => Outcome {
                passed: out.report.passed,
                result: json!({ "report": out.report, "space": space_to_json(&out.space) }),
            },
            Err(e) => failed(e),
        },
    })
}

fn fixture(name: FixtureName, size: usize, k: u32, extent: &str, g: &Global) -> Result<Outcome, InputError> {
    let bad = |what: &str| InputError(what.to_string());
    let space: FiniteSpace<Rational> = match name {
        FixtureName::Circle if size < 8 => return Err(bad("circle needs --size ≥ 8")),
        FixtureName::Circle => circle_space(size),
        FixtureName::DoubledZero => {
            let e: Rational = parse_scalar(extent)?;
            if e <= Rational::from_i64(0) || size < 2 {
                return Err(bad("doubled-zero needs --extent > 0 and --size ≥ 2"));
            }
            doubled_zero_line(&e, size)
        }
        _ if size == 0 => return Err(bad("--size must be positive")),
        FixtureName::PuncturedInterval => punctured_interval(size),
        FixtureName::IntegerLine => integer_line(size),
        FixtureName::ExtendedLine => extended_line(size),
        FixtureName::RandomMetric => random_metric(size, g.seed),
        FixtureName::RandomQuasimetric if k < 1 => return Err(bad("--k must be at least 1")),
        FixtureName::RandomQuasimetric => random_quasimetric(size, k, g.seed),
        FixtureName::RandomWithInfinity => random_with_infinity(size, g.seed),
        FixtureName::BinaryUltrametric => binary_ultrametric(size),
    };
    let doc = match g.mode {
        Mode::Exact => space_to_json(&space),
        Mode::Float => space_to_json(&space.to_f64()),
    };
    Ok(pass(json!({ "fixture": format!("{name:?}"), "size": space.len(), "space": doc })))
}
