//! Named pipelines: argument signatures and execution.
//!
//! Every pipeline returns a summary (the values `expect` clauses compare
//! against), a certificate with the witnesses it produced, and the result
//! of replaying that certificate through the owning verifier.

use std::str::FromStr;

use cantor_core::clopen::{dyadic, format_rational, BitString, ClopenSet, PointPrefix, Rational};
use cantor_core::codes::{LevelCode, Pi2Code, PiCode, SigmaCode, StageWitness, Witness};
use cantor_core::convergence::{
    convergence_set, counterexample_from_gdelta, dct_check, egorov_witness, integral_cauchy, interleave_cauchy,
    violation_set, DctCertificate, Dominator, DominatorCertificate, Mode, SimpleSequence, Target,
};
use cantor_core::integration::{truncation_bound, validate_name, L1Name, SimpleFunction};
use cantor_core::product::{extract_element, gn_construction, required_depth};
use cantor_core::randomness::{
    deficiency, union_tests, validate_ml_test, validate_sigma2_test, BoundViolation, MLTest, RandomnessTest,
};
use cantor_core::trees::{closed_to_tree, find_path, limit_tree_to_pi2, stabilized_tree, wwkl_hypothesis, FiniteTree};
use cantor_core::{Error, Outcome, Verdict};
use serde_json::{json, Map, Value as Json};

use crate::scenario::{Arg, Command, Kind, Point, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Pipeline {
    Measure,
    Strictify,
    PosToCounterexample,
    InnerRegularity,
    LimitTree,
    TwoPosRoundtrip,
    ProjectionExtract,
    Egorov,
    Dct,
    DctStar,
    ConvergenceSet,
    DecomposeSigma3,
    TruncationBound,
    ValidateName,
    FindPath,
    ValidateTest,
    Deficiency,
    UnionTests,
}

pub const PIPELINES: [(Pipeline, &str); 18] = [
    (Pipeline::Measure, "measure"),
    (Pipeline::Strictify, "strictify"),
    (Pipeline::PosToCounterexample, "pos-to-counterexample"),
    (Pipeline::InnerRegularity, "inner-regularity"),
    (Pipeline::LimitTree, "limit-tree"),
    (Pipeline::TwoPosRoundtrip, "two-pos-roundtrip"),
    (Pipeline::ProjectionExtract, "projection-extract"),
    (Pipeline::Egorov, "egorov"),
    (Pipeline::Dct, "dct"),
    (Pipeline::DctStar, "dct-star"),
    (Pipeline::ConvergenceSet, "convergence-set"),
    (Pipeline::DecomposeSigma3, "decompose-sigma3"),
    (Pipeline::TruncationBound, "truncation-bound"),
    (Pipeline::ValidateName, "validate-name"),
    (Pipeline::FindPath, "find-path"),
    (Pipeline::ValidateTest, "validate-test"),
    (Pipeline::Deficiency, "deficiency"),
    (Pipeline::UnionTests, "union-tests"),
];

impl Pipeline {
    pub fn name(self) -> &'static str {
        PIPELINES.iter().find(|(p, _)| *p == self).map(|(_, n)| *n).unwrap()
    }
}

impl FromStr for Pipeline {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        PIPELINES.iter().find(|(_, n)| *n == s).map(|(p, _)| *p).ok_or(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ArgType {
    Kind(Kind),
    StrictPi2,
    Sigma3,
    Nat,
    Word(&'static [&'static str]),
    /// An ML or Σ⁰₂ test.
    Test,
    /// A list of ML tests.
    Tests,
}

#[derive(Debug, Clone, Copy)]
pub struct Param {
    pub key: &'static str,
    pub ty: ArgType,
    pub required: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Signature {
    pub params: &'static [Param],
    /// Mutually exclusive argument groups; exactly one must be complete.
    pub alternatives: &'static [&'static [&'static str]],
    pub summary: &'static [&'static str],
}

const RATIONAL: ArgType = ArgType::Kind(Kind::Rational);

pub fn signature(pipeline: Pipeline) -> Signature {
    use Pipeline::*;
    let (params, alternatives, summary): (
        &'static [Param],
        &'static [&'static [&'static str]],
        &'static [&'static str],
    ) = match pipeline {
        Measure => (
            &[
                Param {
                    key: "set",
                    ty: ArgType::Kind(Kind::Sigma),
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: false,
                },
            ],
            &[],
            &["outcome", "measure", "stages", "exhausted", "generators"],
        ),
        Strictify => (
            &[Param {
                key: "code",
                ty: ArgType::Kind(Kind::Pi2),
                required: true,
            }],
            &[],
            &["outcome", "rows", "agree", "cells", "disagreements", "measure"],
        ),
        PosToCounterexample => (
            &[
                Param {
                    key: "code",
                    ty: ArgType::StrictPi2,
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: true,
                },
            ],
            &[],
            &["outcome", "functions", "integrals", "min_integral"],
        ),
        InnerRegularity => (
            &[
                Param {
                    key: "code",
                    ty: ArgType::StrictPi2,
                    required: true,
                },
                Param {
                    key: "r",
                    ty: RATIONAL,
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: true,
                },
            ],
            &[],
            &["outcome", "measure", "closed", "contained", "cutoffs"],
        ),
        LimitTree => (
            &[
                Param {
                    key: "approx",
                    ty: ArgType::Kind(Kind::Approx),
                    required: true,
                },
                Param {
                    key: "max-level",
                    ty: ArgType::Nat,
                    required: false,
                },
            ],
            &[],
            &["outcome", "rows", "measure", "stabilized", "stable_nodes"],
        ),
        TwoPosRoundtrip => (
            &[
                Param {
                    key: "code",
                    ty: ArgType::StrictPi2,
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: true,
                },
                Param {
                    key: "max-level",
                    ty: ArgType::Nat,
                    required: true,
                },
            ],
            &[],
            &[
                "outcome",
                "path",
                "membership",
                "checked",
                "closed_measure",
                "tree_level",
            ],
        ),
        ProjectionExtract => (
            &[
                Param {
                    key: "cbar",
                    ty: ArgType::Kind(Kind::Sigma),
                    required: true,
                },
                Param {
                    key: "n",
                    ty: ArgType::Nat,
                    required: true,
                },
                Param {
                    key: "point",
                    ty: ArgType::Kind(Kind::Point),
                    required: true,
                },
                Param {
                    key: "max-index",
                    ty: ArgType::Nat,
                    required: true,
                },
            ],
            &[],
            &[
                "outcome",
                "bound",
                "measure",
                "delta_bar",
                "in_gn",
                "index",
                "slice",
                "depth",
            ],
        ),
        Egorov => (
            &[
                Param {
                    key: "seq",
                    ty: ArgType::Kind(Kind::Sequence),
                    required: true,
                },
                Param {
                    key: "epsilon",
                    ty: RATIONAL,
                    required: true,
                },
                Param {
                    key: "lambda",
                    ty: RATIONAL,
                    required: true,
                },
                Param {
                    key: "mode",
                    ty: ArgType::Word(&["convergence", "cauchy"]),
                    required: false,
                },
            ],
            &[],
            &["outcome", "n", "measure"],
        ),
        Dct => (
            &[
                Param {
                    key: "seq",
                    ty: ArgType::Kind(Kind::Sequence),
                    required: true,
                },
                Param {
                    key: "epsilon",
                    ty: RATIONAL,
                    required: true,
                },
                Param {
                    key: "bound",
                    ty: RATIONAL,
                    required: false,
                },
                Param {
                    key: "dominator",
                    ty: ArgType::Kind(Kind::Name),
                    required: false,
                },
            ],
            &[&["bound"], &["dominator"]],
            &["outcome", "m", "threshold", "index", "integral", "k"],
        ),
        DctStar => (
            &[
                Param {
                    key: "code",
                    ty: ArgType::StrictPi2,
                    required: false,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: false,
                },
                Param {
                    key: "seq",
                    ty: ArgType::Kind(Kind::Sequence),
                    required: false,
                },
                Param {
                    key: "epsilon",
                    ty: RATIONAL,
                    required: false,
                },
                Param {
                    key: "lambda",
                    ty: RATIONAL,
                    required: false,
                },
            ],
            &[&["code", "delta"], &["seq", "epsilon", "lambda"]],
            &["outcome", "functions", "min_gap", "pair", "egorov", "n", "m", "spread"],
        ),
        ConvergenceSet => (
            &[
                Param {
                    key: "seq",
                    ty: ArgType::Kind(Kind::Sequence),
                    required: true,
                },
                Param {
                    key: "target",
                    ty: ArgType::Kind(Kind::Function),
                    required: false,
                },
            ],
            &[],
            &[
                "outcome", "level", "depth", "cells", "proved", "refuted", "unknown", "measure",
            ],
        ),
        DecomposeSigma3 => (
            &[
                Param {
                    key: "code",
                    ty: ArgType::Sigma3,
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: true,
                },
            ],
            &[],
            &["outcome", "child", "rows", "refuted_rows"],
        ),
        TruncationBound => (
            &[
                Param {
                    key: "name",
                    ty: ArgType::Kind(Kind::Name),
                    required: true,
                },
                Param {
                    key: "epsilon",
                    ty: RATIONAL,
                    required: true,
                },
            ],
            &[],
            &["outcome", "k", "entry", "residual", "entry_error"],
        ),
        ValidateName => (
            &[Param {
                key: "name",
                ty: ArgType::Kind(Kind::Name),
                required: true,
            }],
            &[],
            &["outcome", "entries", "pair"],
        ),
        FindPath => (
            &[
                Param {
                    key: "tree",
                    ty: ArgType::Kind(Kind::Tree),
                    required: true,
                },
                Param {
                    key: "delta",
                    ty: RATIONAL,
                    required: true,
                },
            ],
            &[],
            &["outcome", "path", "level", "densities"],
        ),
        ValidateTest => (
            &[Param {
                key: "test",
                ty: ArgType::Test,
                required: true,
            }],
            &[],
            &["outcome", "level", "stages", "measure"],
        ),
        Deficiency => (
            &[
                Param {
                    key: "point",
                    ty: ArgType::Kind(Kind::Point),
                    required: true,
                },
                Param {
                    key: "test",
                    ty: ArgType::Test,
                    required: true,
                },
            ],
            &[],
            &["outcome", "passing", "levels", "verdicts"],
        ),
        UnionTests => (
            &[Param {
                key: "tests",
                ty: ArgType::Tests,
                required: true,
            }],
            &[],
            &["outcome", "levels", "measures", "contained"],
        ),
    };
    Signature {
        params,
        alternatives,
        summary,
    }
}

/// What a pipeline produced.
#[derive(Debug, Clone)]
pub struct Execution {
    pub outcome: Outcome,
    pub summary: Map<String, Json>,
    pub certificate: Json,
    pub replay: bool,
}

/// A failed module operation, named for the report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub operation: &'static str,
    pub error: Error,
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.operation, self.error)
    }
}

trait Named<T> {
    fn op(self, operation: &'static str) -> Result<T, PipelineError>;
}

impl<T> Named<T> for cantor_core::Result<T> {
    fn op(self, operation: &'static str) -> Result<T, PipelineError> {
        self.map_err(|error| PipelineError { operation, error })
    }
}

pub fn q(r: &Rational) -> Json {
    Json::String(format_rational(r))
}

fn qs(rs: &[Rational]) -> Json {
    Json::Array(rs.iter().map(q).collect())
}

fn bits(s: &BitString) -> Json {
    Json::String(s.to_string())
}

fn set(c: &ClopenSet) -> Json {
    Json::Array(c.generators().map(bits).collect())
}

fn function(f: &SimpleFunction) -> Json {
    Json::Array(f.terms().iter().map(|(c, s)| json!([q(c), bits(s)])).collect())
}

fn sigma(code: &SigmaCode) -> Json {
    json!({
        "stages": code.stages().iter().map(|b| match b.cylinder() {
            Some(s) => bits(s),
            None => Json::Null,
        }).collect::<Vec<_>>(),
        "exhausted": code.is_exhausted(),
    })
}

fn stage_witness(w: &StageWitness) -> Json {
    json!({"stages": w.stages, "union": set(&w.union), "measure": q(&w.measure)})
}

fn witness(w: &Witness) -> Json {
    match w {
        Witness::Stage(n) => json!({"stage": n}),
        Witness::Avoids(c) => json!({"avoids": set(c)}),
        Witness::Child(i, inner) => json!({"child": i, "witness": witness(inner)}),
        Witness::All(ws) => json!({"all": ws.iter().map(witness).collect::<Vec<_>>()}),
    }
}

fn verdict<P, R>(v: &Verdict<P, R>, p: impl Fn(&P) -> Json, r: impl Fn(&R) -> Json) -> Json {
    match v {
        Verdict::Proved(x) => json!({"proved": p(x)}),
        Verdict::Refuted(x) => json!({"refuted": r(x)}),
        Verdict::Unknown { horizon } => json!({"unknown": {"horizon": horizon}}),
    }
}

fn word(o: Outcome) -> Json {
    Json::String(o.to_string())
}

struct Builder {
    summary: Map<String, Json>,
}

impl Builder {
    fn new() -> Self {
        Builder { summary: Map::new() }
    }

    fn put(&mut self, key: &str, value: impl Into<Json>) -> &mut Self {
        self.summary.insert(key.to_string(), value.into());
        self
    }

    fn finish(self, outcome: Outcome, certificate: Json, replay: bool) -> Execution {
        let mut summary = self.summary;
        summary.insert("outcome".into(), word(outcome));
        Execution {
            outcome,
            summary,
            certificate,
            replay,
        }
    }
}

/// Global settings shared by every command.
#[derive(Debug, Clone, Copy)]
pub struct Context {
    /// Depth of brute-force point enumeration.
    pub depth: usize,
}

fn rational(cmd: &Command, key: &str) -> Rational {
    match cmd.value(key) {
        Some(Value::Rational(r)) => r.clone(),
        other => panic!("argument {key} was type-checked at load: {other:?}"),
    }
}

macro_rules! arg {
    ($cmd:expr, $key:literal, $variant:ident) => {
        match $cmd.value($key) {
            Some(Value::$variant(v)) => v,
            other => panic!("argument {} was type-checked at load: {:?}", $key, other),
        }
    };
}

pub fn execute(cmd: &Command, ctx: Context) -> Result<Execution, PipelineError> {
    use Pipeline::*;
    match cmd.pipeline {
        Measure => measure(
            arg!(cmd, "set", Sigma),
            cmd.value("delta").map(|_| rational(cmd, "delta")),
        ),
        Strictify => Ok(strictify(arg!(cmd, "code", Pi2), ctx)),
        PosToCounterexample => pos_to_counterexample(arg!(cmd, "code", Pi2), &rational(cmd, "delta"), ctx),
        InnerRegularity => inner_regularity(
            arg!(cmd, "code", Pi2),
            &rational(cmd, "r"),
            &rational(cmd, "delta"),
            ctx,
        ),
        LimitTree => {
            let approx = arg!(cmd, "approx", Approx);
            limit_tree(approx, cmd.nat("max-level").unwrap_or(approx.max_level()))
        }
        TwoPosRoundtrip => two_pos_roundtrip(
            arg!(cmd, "code", Pi2),
            &rational(cmd, "delta"),
            cmd.nat("max-level").expect("required"),
            ctx,
        ),
        ProjectionExtract => projection_extract(
            arg!(cmd, "cbar", Sigma),
            cmd.nat("n").expect("required"),
            arg!(cmd, "point", Point),
            cmd.nat("max-index").expect("required"),
        ),
        Egorov => {
            let mode = match cmd.word("mode") {
                Some("cauchy") => Mode::Cauchy,
                _ => Mode::Convergence,
            };
            egorov(
                arg!(cmd, "seq", Sequence),
                &rational(cmd, "epsilon"),
                &rational(cmd, "lambda"),
                mode,
            )
        }
        Dct => {
            let seq = arg!(cmd, "seq", Sequence);
            let epsilon = rational(cmd, "epsilon");
            match cmd.value("dominator") {
                Some(Value::Name(name)) => dct(seq, Dominator::Name(name), &epsilon),
                _ => dct(seq, Dominator::Constant(&rational(cmd, "bound")), &epsilon),
            }
        }
        DctStar => match cmd.value("code") {
            Some(Value::Pi2(code)) => dct_star_code(code, &rational(cmd, "delta"), ctx),
            _ => dct_star_sequence(
                arg!(cmd, "seq", Sequence),
                &rational(cmd, "epsilon"),
                &rational(cmd, "lambda"),
            ),
        },
        ConvergenceSet => {
            let target = match cmd.value("target") {
                Some(Value::Function(f)) => Target::Limit(f.clone()),
                _ => Target::Cauchy,
            };
            Ok(convergence(arg!(cmd, "seq", Sequence), &target, ctx))
        }
        DecomposeSigma3 => decompose(arg!(cmd, "code", Level), &rational(cmd, "delta")),
        TruncationBound => truncation(arg!(cmd, "name", Name), &rational(cmd, "epsilon")),
        ValidateName => Ok(check_name(arg!(cmd, "name", Name))),
        FindPath => Ok(path(arg!(cmd, "tree", Tree), &rational(cmd, "delta"))),
        ValidateTest => Ok(match cmd.value("test") {
            Some(Value::MLTest(t)) => bound_report(validate_ml_test(t)),
            Some(Value::Sigma2Test(t)) => bound_report(validate_sigma2_test(t)),
            other => panic!("test argument was type-checked at load: {other:?}"),
        }),
        Deficiency => {
            let point = arg!(cmd, "point", Point);
            Ok(match cmd.value("test") {
                Some(Value::MLTest(t)) => deficiency_report(point, t),
                Some(Value::Sigma2Test(t)) => deficiency_report(point, t),
                other => panic!("test argument was type-checked at load: {other:?}"),
            })
        }
        UnionTests => match cmd.args.get("tests") {
            Some(Arg::Tests(tests)) => union(tests),
            other => panic!("tests argument was type-checked at load: {other:?}"),
        },
    }
}

fn measure(code: &SigmaCode, delta: Option<Rational>) -> Result<Execution, PipelineError> {
    let union = code.recorded_union();
    let mut b = Builder::new();
    b.put("measure", q(&union.measure()))
        .put("stages", code.len())
        .put("exhausted", code.is_exhausted())
        .put("generators", set(&union));
    let mut cert = json!({"union": set(&union), "prefix_measures": qs(&code.prefix_measures())});
    let (outcome, replay) = match delta {
        None => (Outcome::Proved, true),
        Some(delta) => {
            let v = code.measure_gt(&delta);
            cert["delta"] = q(&delta);
            cert["verdict"] = verdict(&v, stage_witness, set);
            (v.outcome(), code.replay_measure_gt(&delta, &v))
        }
    };
    Ok(b.finish(outcome, cert, replay))
}

fn pi2_rows(code: &Pi2Code) -> Json {
    Json::Array(code.rows().iter().map(sigma).collect())
}

fn strictify(code: &Pi2Code, ctx: Context) -> Execution {
    let strict = code.strictify();
    let agree = strict.recorded_set() == code.recorded_set();
    let mut disagreements = 0usize;
    let cells = BitString::all_of_length(ctx.depth);
    let mut count = 0usize;
    for cell in cells {
        count += 1;
        let point = PointPrefix::new(cell);
        let (a, b) = (
            code.membership(&point, usize::MAX),
            strict.membership(&point, usize::MAX),
        );
        if !a.is_unknown() && !b.is_unknown() && a.outcome() != b.outcome() {
            disagreements += 1;
        }
    }
    let replay = Pi2Code::strict(strict.rows().to_vec()).is_ok_and(|c| c.recorded_set() == code.recorded_set());
    let mut b = Builder::new();
    b.put("rows", strict.rows().len())
        .put("agree", agree)
        .put("cells", count)
        .put("disagreements", disagreements)
        .put("measure", q(&strict.recorded_set().measure()));
    let outcome = Outcome::from_bool(Some(agree && disagreements == 0));
    b.finish(outcome, json!({"rows": pi2_rows(&strict)}), replay)
}

fn pos_to_counterexample(code: &Pi2Code, delta: &Rational, ctx: Context) -> Result<Execution, PipelineError> {
    let c = counterexample_from_gdelta(code, delta, ctx.depth).op("counterexample_from_gdelta")?;
    let integrals = c.sequence.integrals();
    let mut b = Builder::new();
    b.put("functions", integrals.len()).put("integrals", qs(&integrals));
    b.put("min_integral", integrals.iter().min().map_or(Json::Null, q));
    let cert = json!({
        "delta": q(delta),
        "levels": c.levels.iter().map(stage_witness).collect::<Vec<_>>(),
        "functions": c.sequence.functions().iter().map(function).collect::<Vec<_>>(),
    });
    let replay = c.verify(code, ctx.depth).is_ok();
    Ok(b.finish(Outcome::Proved, cert, replay))
}

/// Every depth-`depth` extension of `prefix` has Proved membership, each
/// verdict replaying.
fn extensions_proved(code: &Pi2Code, prefix: &BitString, depth: usize) -> (Outcome, usize, bool) {
    let mut outcome = Outcome::Proved;
    let mut replay = true;
    let extra = depth.saturating_sub(prefix.len());
    let mut checked = 0;
    for tail in BitString::all_of_length(extra) {
        let point = PointPrefix::new(prefix.concat(&tail));
        let v = code.membership(&point, usize::MAX);
        replay &= code.replay_membership(&point, &v);
        checked += 1;
        match v.outcome() {
            Outcome::Refuted => outcome = Outcome::Refuted,
            Outcome::Unknown if outcome == Outcome::Proved => outcome = Outcome::Unknown,
            _ => {}
        }
    }
    (outcome, checked, replay)
}

fn inner_regularity(code: &Pi2Code, r: &Rational, delta: &Rational, ctx: Context) -> Result<Execution, PipelineError> {
    let cert = code.inner_regularity(r, delta).op("inner_regularity")?;
    let depth = ctx.depth.max(cert.set.max_len());
    let mut contained = true;
    let mut replay = cert.verify(code).is_ok();
    for cell in cert.set.members_at_depth(depth).op("members_at_depth")? {
        let point = PointPrefix::new(cell);
        let v = code.membership(&point, usize::MAX);
        replay &= code.replay_membership(&point, &v);
        contained &= v.is_proved();
    }
    let loss_ok = cert.measure >= r - delta;
    let mut b = Builder::new();
    b.put("measure", q(&cert.measure))
        .put("closed", set(&cert.set))
        .put("contained", contained)
        .put("cutoffs", cert.cutoffs.clone());
    let out = json!({
        "r": q(&cert.r),
        "delta": q(&cert.delta),
        "cutoffs": cert.cutoffs,
        "tails": qs(&cert.tails),
        "set": set(&cert.set),
        "closed_complement": sigma(cert.closed.complement()),
        "measure": q(&cert.measure),
        "depth": cert.depth,
    });
    Ok(b.finish(Outcome::from_bool(Some(contained && loss_ok)), out, replay))
}

fn tree_json(tree: &FiniteTree) -> Json {
    Json::Array(tree.level(tree.max_level()).map(bits).collect())
}

fn limit_tree(approx: &cantor_core::trees::TreeApproximation, max_level: usize) -> Result<Execution, PipelineError> {
    let code = limit_tree_to_pi2(approx, max_level).op("limit_tree_to_pi2")?;
    let stable = stabilized_tree(approx).op("stabilized_tree")?;
    let replay = Pi2Code::strict(code.rows().to_vec()).is_ok()
        && limit_tree_to_pi2(approx, max_level).is_ok_and(|again| again == code);
    let mut b = Builder::new();
    b.put("rows", code.rows().len())
        .put("measure", q(&code.recorded_set().measure()))
        .put("stabilized", word(stable.outcome()));
    b.put(
        "stable_nodes",
        stable
            .proved()
            .map_or(Json::Null, |t| t.level(t.max_level()).count().into()),
    );
    let cert = json!({
        "rows": pi2_rows(&code),
        "stable_tree": stable.proved().map_or(Json::Null, tree_json),
    });
    Ok(b.finish(Outcome::Proved, cert, replay))
}

fn two_pos_roundtrip(
    code: &Pi2Code,
    delta: &Rational,
    max_level: usize,
    ctx: Context,
) -> Result<Execution, PipelineError> {
    let positive = code.measure_gt(delta).op("measure_gt")?;
    let Verdict::Proved(rows) = &positive else {
        let mut b = Builder::new();
        b.put("path", Json::Null).put("membership", Json::Null);
        let cert = json!({"measure": verdict(&positive, |_| Json::Null, |r| json!({"row": r}))});
        return Ok(b.finish(positive.outcome(), cert, true));
    };
    let loss = delta * dyadic(1);
    let regular = code.inner_regularity(delta, &loss).op("inner_regularity")?;
    let level = max_level.max(regular.closed.max_cylinder_len());
    let tree = closed_to_tree(&regular.closed, level).op("closed_to_tree")?;
    let threshold = delta * dyadic(2);
    if let Verdict::Refuted(n) = wwkl_hypothesis(&tree, &threshold) {
        return Err(PipelineError {
            operation: "wwkl_hypothesis",
            error: Error::HypothesisNotProved(format!("level {n} of the tree is too thin")),
        });
    }
    let witness = find_path(&tree, &threshold).op("find_path")?;
    let depth = ctx.depth.max(witness.path.len()).max(code.max_cylinder_len());
    let (membership, checked, member_replay) = extensions_proved(code, &witness.path, depth);
    let replay = rows
        .iter()
        .zip(code.rows())
        .all(|(w, row)| row.replay_measure_gt(delta, &Verdict::Proved(w.clone())))
        && regular.verify(code).is_ok()
        && witness.verify(&tree)
        && member_replay;
    let mut b = Builder::new();
    b.put("path", bits(&witness.path))
        .put("membership", word(membership))
        .put("checked", checked)
        .put("closed_measure", q(&regular.measure))
        .put("tree_level", level);
    let cert = json!({
        "measure": rows.iter().map(stage_witness).collect::<Vec<_>>(),
        "closed": set(&regular.set),
        "cutoffs": regular.cutoffs,
        "threshold": q(&threshold),
        "densities": qs(&witness.densities),
        "child_counts": witness.child_counts,
        "path": bits(&witness.path),
        "depth": depth,
    });
    Ok(b.finish(membership, cert, replay))
}

fn point_json(point: &Point) -> Json {
    match point.seed {
        Some(seed) => json!({
            "bits": bits(point.prefix.bits()),
            "prng_seed": seed,
            "note": "seeded pseudo-random demo prefix, not a random sequence",
        }),
        None => json!({"bits": bits(point.prefix.bits())}),
    }
}

fn projection_extract(cbar: &SigmaCode, n: usize, point: &Point, max_index: usize) -> Result<Execution, PipelineError> {
    let depth = required_depth(n, cbar.max_cylinder_len());
    let gn = gn_construction(cbar, n, depth).op("gn_construction")?;
    let closed = PiCode::new(cbar.clone());
    let extracted = extract_element(&point.prefix, &closed, max_index).op("extract_element")?;
    let in_gn = gn.set.contains_point(&point.prefix);
    let replay = gn.verify().is_ok()
        && match &extracted {
            Verdict::Proved(e) => e.replay(&point.prefix, &closed),
            _ => true,
        };
    let mut b = Builder::new();
    b.put("bound", q(&gn.bound))
        .put("measure", q(&gn.measure))
        .put("delta_bar", q(&gn.delta_bar))
        .put("in_gn", in_gn.map_or(Json::Null, Json::Bool))
        .put("depth", depth);
    b.put("index", extracted.proved().map_or(Json::Null, |e| e.index.into()));
    b.put("slice", extracted.proved().map_or(Json::Null, |e| bits(e.slice.bits())));
    let cert = json!({
        "gn": {"set": set(&gn.set), "depth": gn.depth, "stages": gn.code.len()},
        "point": point_json(point),
        "extracted": verdict(&extracted, |e| json!({
            "index": e.index,
            "slice": bits(e.slice.bits()),
            "avoided": set(&e.avoided),
        }), |_| Json::Null),
    });
    Ok(b.finish(extracted.outcome(), cert, replay))
}

fn egorov(seq: &SimpleSequence, epsilon: &Rational, lambda: &Rational, mode: Mode) -> Result<Execution, PipelineError> {
    let v = egorov_witness(seq, epsilon, lambda, mode).op("egorov_witness")?;
    let mut b = Builder::new();
    let replay = match &v {
        Verdict::Proved(c) => {
            b.put("n", c.n).put("measure", q(&c.measure));
            c.verify(seq).is_ok()
        }
        Verdict::Refuted(last) => {
            b.put("n", Json::Null).put("measure", q(&last.measure()));
            let h = seq.horizon();
            h > 0
                && violation_set(seq, h - 1, epsilon, mode).is_ok_and(|again| &again == last)
                && &last.measure() >= lambda
        }
        Verdict::Unknown { .. } => true,
    };
    let cert = json!({
        "epsilon": q(epsilon),
        "lambda": q(lambda),
        "mode": if mode == Mode::Cauchy { "cauchy" } else { "convergence" },
        "verdict": verdict(&v, |c| json!({"n": c.n, "residual": set(&c.residual), "measure": q(&c.measure)}), set),
    });
    Ok(b.finish(v.outcome(), cert, replay))
}

fn dct_json(c: &DctCertificate) -> Json {
    let dominator = match &c.dominator {
        DominatorCertificate::Constant(k) => json!({"constant": q(k)}),
        DominatorCertificate::Name { entry, truncation } => json!({
            "entry": entry,
            "k": truncation.k.to_string(),
            "residual": q(&truncation.residual),
        }),
    };
    json!({
        "epsilon": q(&c.epsilon),
        "threshold": q(&c.threshold),
        "m": c.m,
        "dominator": dominator,
        "terms": c.terms.iter().map(|t| json!({
            "index": t.index,
            "integral": q(&t.integral),
            "lower": q(&t.lower),
            "upper": q(&t.upper),
            "truncation_gap": q(&t.truncation_gap),
            "support": set(&t.support),
        })).collect::<Vec<_>>(),
    })
}

fn dct(seq: &SimpleSequence, dominator: Dominator<'_>, epsilon: &Rational) -> Result<Execution, PipelineError> {
    let v = dct_check(seq, dominator, epsilon).op("dct_check")?;
    let mut b = Builder::new();
    let replay = match &v {
        Verdict::Proved(c) => {
            b.put("m", c.m).put("threshold", q(&c.threshold));
            if let DominatorCertificate::Name { truncation, .. } = &c.dominator {
                b.put("k", truncation.k.to_string());
            }
            c.verify(seq)
        }
        Verdict::Refuted(r) => {
            b.put("index", r.index).put("integral", q(&r.integral));
            seq.integrals().get(r.index) == Some(&r.integral) && &r.integral >= epsilon
        }
        Verdict::Unknown { .. } => true,
    };
    let cert = verdict(&v, dct_json, |r| json!({"index": r.index, "integral": q(&r.integral)}));
    Ok(b.finish(v.outcome(), cert, replay))
}

fn dct_star_code(code: &Pi2Code, delta: &Rational, ctx: Context) -> Result<Execution, PipelineError> {
    let c = counterexample_from_gdelta(code, delta, ctx.depth).op("counterexample_from_gdelta")?;
    let inter = interleave_cauchy(&c.sequence);
    let half = delta * dyadic(1);
    let v = integral_cauchy(&inter.sequence, &half).op("integral_cauchy")?;
    let gaps_ok = inter.gaps.iter().all(|g| g > &half);
    let replay = c.verify(code, ctx.depth).is_ok()
        && inter.verify(&c.sequence)
        && gaps_ok
        && integral_cauchy(&inter.sequence, &half).is_ok_and(|again| again == v);
    let mut b = Builder::new();
    b.put("functions", inter.sequence.horizon())
        .put("min_gap", inter.gaps.iter().min().map_or(Json::Null, q));
    b.put("pair", v.refuted().map_or(Json::Null, |(i, j)| json!([i, j])));
    let cert = json!({
        "delta": q(delta),
        "levels": c.levels.iter().map(stage_witness).collect::<Vec<_>>(),
        "gaps": qs(&inter.gaps),
        "integrals": qs(&inter.sequence.integrals()),
        "integral_cauchy": verdict(&v, |p| json!({"m": p.m, "spread": q(&p.spread)}), |(i, j)| json!([i, j])),
    });
    Ok(b.finish(v.outcome(), cert, replay))
}

fn dct_star_sequence(seq: &SimpleSequence, epsilon: &Rational, lambda: &Rational) -> Result<Execution, PipelineError> {
    let e = egorov_witness(seq, epsilon, lambda, Mode::Cauchy).op("egorov_witness")?;
    let v = integral_cauchy(seq, epsilon).op("integral_cauchy")?;
    let replay = match &e {
        Verdict::Proved(c) => c.verify(seq).is_ok(),
        _ => true,
    } && integral_cauchy(seq, epsilon).is_ok_and(|again| again == v);
    let mut b = Builder::new();
    b.put("egorov", word(e.outcome()))
        .put("n", e.proved().map_or(Json::Null, |c| c.n.into()))
        .put("m", v.proved().map_or(Json::Null, |c| c.m.into()))
        .put("spread", v.proved().map_or(Json::Null, |c| q(&c.spread)))
        .put("pair", v.refuted().map_or(Json::Null, |(i, j)| json!([i, j])));
    let cert = json!({
        "egorov": verdict(&e, |c| json!({"n": c.n, "residual": set(&c.residual), "measure": q(&c.measure)}), set),
        "integral_cauchy": verdict(&v, |p| json!({"m": p.m, "spread": q(&p.spread)}), |(i, j)| json!([i, j])),
    });
    Ok(b.finish(v.outcome(), cert, replay))
}

fn convergence(seq: &SimpleSequence, target: &Target, ctx: Context) -> Execution {
    let code = convergence_set(seq, target);
    let target_depth = match target {
        Target::Limit(f) => f.depth(),
        Target::Cauchy => 0,
    };
    let depth = ctx.depth.max(seq.depth()).max(target_depth);
    let (mut proved, mut refuted, mut unknown) = (Vec::new(), Vec::new(), 0usize);
    let mut replay = true;
    for cell in BitString::all_of_length(depth) {
        let point = PointPrefix::new(cell.clone());
        let v = code.membership(&point, usize::MAX);
        replay &= code.replay_membership(&point, &v);
        match v.outcome() {
            Outcome::Proved => proved.push(cell),
            Outcome::Refuted => refuted.push(cell),
            Outcome::Unknown => unknown += 1,
        }
    }
    let (proved_count, refuted_count) = (proved.len(), refuted.len());
    let proved = ClopenSet::normalize(proved);
    let refuted = ClopenSet::normalize(refuted);
    let mut b = Builder::new();
    b.put("level", code.level())
        .put("depth", depth)
        .put("cells", 1usize << depth)
        .put("proved", proved_count)
        .put("refuted", refuted_count)
        .put("unknown", unknown)
        .put("measure", q(&proved.measure()));
    let cert =
        json!({"depth": depth, "proved": set(&proved), "refuted": set(&refuted), "children": code.children().len()});
    b.finish(Outcome::Proved, cert, replay)
}

fn decompose(code: &LevelCode, delta: &Rational) -> Result<Execution, PipelineError> {
    let v = cantor_core::codes::decompose_sigma3(code, delta).op("decompose_sigma3")?;
    let mut b = Builder::new();
    let replay = match &v {
        Verdict::Proved(c) => {
            b.put("child", c.child).put("rows", c.rows.len());
            c.code.is_strict()
                && c.code
                    .measure_gt(delta)
                    .is_ok_and(|again| again.proved() == Some(&c.rows))
        }
        Verdict::Refuted(rows) => {
            b.put("refuted_rows", rows.clone());
            rows.len() == code.children().len()
        }
        Verdict::Unknown { .. } => true,
    };
    let cert = verdict(
        &v,
        |c| json!({"child": c.child, "rows": c.rows.iter().map(stage_witness).collect::<Vec<_>>(), "code": pi2_rows(&c.code)}),
        |rows| json!({"rows": rows}),
    );
    Ok(b.finish(v.outcome(), cert, replay))
}

fn truncation(name: &L1Name, epsilon: &Rational) -> Result<Execution, PipelineError> {
    let t = truncation_bound(name, epsilon).op("truncation_bound")?;
    let mut b = Builder::new();
    b.put("k", t.k.to_string())
        .put("entry", t.entry)
        .put("residual", q(&t.residual))
        .put("entry_error", q(&t.entry_error));
    let cert = json!({
        "epsilon": q(&t.epsilon),
        "entry": t.entry,
        "entry_error": q(&t.entry_error),
        "k": t.k.to_string(),
        "residual": q(&t.residual),
    });
    Ok(b.finish(Outcome::Proved, cert, t.verify(name)))
}

fn check_name(name: &L1Name) -> Execution {
    let v = validate_name(name);
    let replay = match &v {
        Verdict::Refuted((i, j)) => {
            let entries = name.entries();
            entries[*i].sub(&entries[*j]).l1_norm() >= dyadic(*i)
        }
        _ => validate_name(name) == v,
    };
    let mut b = Builder::new();
    b.put("entries", name.entries().len())
        .put("pair", v.refuted().map_or(Json::Null, |(i, j)| json!([i, j])));
    let cert = json!({
        "entries": name.entries().iter().map(function).collect::<Vec<_>>(),
        "stationary": name.is_stationary(),
        "verdict": verdict(&v, |_| Json::Null, |(i, j)| json!([i, j])),
    });
    b.finish(v.outcome(), cert, replay)
}

fn path(tree: &FiniteTree, delta: &Rational) -> Execution {
    let mut b = Builder::new();
    match wwkl_hypothesis(tree, delta) {
        Verdict::Proved(_) => match find_path(tree, delta) {
            Ok(w) => {
                b.put("path", bits(&w.path)).put("densities", qs(&w.densities));
                let cert = json!({
                    "path": bits(&w.path),
                    "densities": qs(&w.densities),
                    "child_counts": w.child_counts,
                });
                b.finish(Outcome::Proved, cert, w.verify(tree))
            }
            Err(e) => b.finish(Outcome::Unknown, json!({"error": e.to_string()}), false),
        },
        Verdict::Refuted(level) => {
            let density = tree.density(level).expect("level in range");
            b.put("level", level).put("path", Json::Null);
            let cert = json!({"level": level, "density": q(&density)});
            b.finish(Outcome::Refuted, cert, &density <= delta)
        }
        Verdict::Unknown { .. } => unreachable!("finite trees are decided"),
    }
}

fn bound_report(v: Verdict<(), BoundViolation>) -> Execution {
    let mut b = Builder::new();
    if let Verdict::Refuted(violation) = &v {
        b.put("level", violation.level)
            .put("stages", violation.stages)
            .put("measure", q(&violation.measure));
    }
    let replay = match &v {
        Verdict::Refuted(violation) => violation.measure > dyadic(violation.level),
        _ => true,
    };
    let cert = verdict(
        &v,
        |_| Json::Null,
        |violation| {
            json!({
                "level": violation.level,
                "stages": violation.stages,
                "measure": q(&violation.measure),
                "bound": q(&dyadic(violation.level)),
            })
        },
    );
    b.finish(v.outcome(), cert, replay)
}

fn deficiency_report(point: &Point, test: &dyn RandomnessTest) -> Execution {
    let report = deficiency(&point.prefix, test);
    let replay = report.replay(&point.prefix, test);
    let mut b = Builder::new();
    b.put("passing", report.passing.map_or(Json::Null, Json::from))
        .put("levels", report.verdicts.len())
        .put(
            "verdicts",
            Json::Array(report.verdicts.iter().map(|v| word(v.outcome())).collect()),
        );
    let cert = json!({
        "point": point_json(point),
        "levels": report.verdicts.iter().map(|v| verdict(v, witness, witness)).collect::<Vec<_>>(),
    });
    let outcome = Outcome::from_bool(Some(report.passing.is_some()));
    b.finish(outcome, cert, replay)
}

fn union(tests: &[MLTest]) -> Result<Execution, PipelineError> {
    let out = union_tests(tests).op("union_tests")?;
    let v = validate_ml_test(&out);
    // Output level i must contain level i+k+1 of input k on recorded data.
    let contained = out.levels().iter().enumerate().all(|(i, level)| {
        let union = level.recorded_union();
        tests.iter().enumerate().all(|(k, t)| {
            t.levels()
                .get(i + k + 1)
                .is_none_or(|l| l.recorded_union().is_subset(&union))
        })
    });
    let measures: Vec<Rational> = out.levels().iter().map(|l| l.recorded_union().measure()).collect();
    let replay = validate_ml_test(&out) == v && measures.iter().enumerate().all(|(i, m)| m <= &dyadic(i));
    let mut b = Builder::new();
    b.put("levels", out.levels().len())
        .put("measures", qs(&measures))
        .put("contained", contained);
    let cert = json!({
        "levels": out.levels().iter().map(sigma).collect::<Vec<_>>(),
        "validation": verdict(&v, |_| Json::Null, |violation| json!({"level": violation.level, "measure": q(&violation.measure)})),
    });
    let outcome = if contained { v.outcome() } else { Outcome::Refuted };
    Ok(b.finish(outcome, cert, replay))
}
