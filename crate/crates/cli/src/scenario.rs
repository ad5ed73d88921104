//! Resolution of parsed statements into typed declarations and commands.
//!
//! Loading checks everything that can be checked without running a
//! pipeline: unique names, resolvable references, structural invariants
//! of every declared object, argument types, and expectation keys.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use cantor_core::clopen::{BitString, ClopenSet, PointPrefix, Rational};
use cantor_core::codes::{BasicOpen, LevelCode, LevelKind, Pi2Code, PiCode, SigmaCode};
use cantor_core::convergence::SimpleSequence;
use cantor_core::integration::{L1Name, SimpleFunction};
use cantor_core::randomness::{MLTest, Sigma2Test};
use cantor_core::trees::{FiniteTree, TreeApproximation};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pipelines::{signature, ArgType, Pipeline};
use crate::syntax::{self, Delim, Expr, Phrase, Pos, Spanned, Statement, SyntaxError};

/// Longest pseudo-random prefix a scenario may request.
pub const MAX_PRNG_LEN: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("syntax error at {0}")]
    Syntax(#[from] SyntaxError),
    #[error("{pos}: '{name}' is already declared at {first}")]
    Duplicate { name: String, pos: Pos, first: Pos },
    #[error("{pos}: unresolved reference '{name}'")]
    Unresolved { name: String, pos: Pos },
    #[error("{pos}: invariant violation: {message}")]
    Invariant { pos: Pos, message: String },
    #[error("{pos}: {message}")]
    Type { pos: Pos, message: String },
}

impl LoadError {
    pub fn pos(&self) -> Pos {
        match self {
            LoadError::Syntax(e) => e.pos,
            LoadError::Duplicate { pos, .. }
            | LoadError::Unresolved { pos, .. }
            | LoadError::Invariant { pos, .. }
            | LoadError::Type { pos, .. } => *pos,
        }
    }
}

fn type_error<T>(pos: Pos, message: impl Into<String>) -> Result<T, LoadError> {
    Err(LoadError::Type {
        pos,
        message: message.into(),
    })
}

fn invariant<T>(pos: Pos, message: impl fmt::Display) -> Result<T, LoadError> {
    Err(LoadError::Invariant {
        pos,
        message: message.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Rational,
    Point,
    Clopen,
    Sigma,
    Pi,
    Pi2,
    Level,
    Tree,
    Approx,
    Function,
    Sequence,
    Name,
    MLTest,
    Sigma2Test,
}

const KINDS: [(Kind, &str); 14] = [
    (Kind::Rational, "rational"),
    (Kind::Point, "point"),
    (Kind::Clopen, "clopen"),
    (Kind::Sigma, "sigma"),
    (Kind::Pi, "pi"),
    (Kind::Pi2, "pi2"),
    (Kind::Level, "level"),
    (Kind::Tree, "tree"),
    (Kind::Approx, "approx"),
    (Kind::Function, "function"),
    (Kind::Sequence, "sequence"),
    (Kind::Name, "name"),
    (Kind::MLTest, "mltest"),
    (Kind::Sigma2Test, "sigma2test"),
];

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = KINDS.iter().find(|(k, _)| k == self).map(|(_, n)| *n).unwrap();
        f.write_str(name)
    }
}

impl FromStr for Kind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        KINDS.iter().find(|(_, n)| *n == s).map(|(k, _)| *k).ok_or(())
    }
}

/// A point prefix, remembering the seed when it came from the demo PRNG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point {
    pub prefix: PointPrefix,
    pub seed: Option<u64>,
}

/// Seeded ChaCha bits. These are a reproducible stand-in for sample
/// points, not random sequences in any certified sense.
pub fn prng_prefix(seed: u64, len: usize) -> PointPrefix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointPrefix::new(BitString::from_bits((0..len).map(|_| rng.gen::<bool>())))
}

#[derive(Debug, Clone)]
pub enum Value {
    Rational(Rational),
    Point(Point),
    Clopen(ClopenSet),
    Sigma(SigmaCode),
    Pi(PiCode),
    Pi2(Pi2Code),
    Level(LevelCode),
    Tree(FiniteTree),
    Approx(TreeApproximation),
    Function(SimpleFunction),
    Sequence(SimpleSequence),
    Name(L1Name),
    MLTest(MLTest),
    Sigma2Test(Sigma2Test),
}

impl Value {
    pub fn kind(&self) -> Kind {
        match self {
            Value::Rational(_) => Kind::Rational,
            Value::Point(_) => Kind::Point,
            Value::Clopen(_) => Kind::Clopen,
            Value::Sigma(_) => Kind::Sigma,
            Value::Pi(_) => Kind::Pi,
            Value::Pi2(_) => Kind::Pi2,
            Value::Level(_) => Kind::Level,
            Value::Tree(_) => Kind::Tree,
            Value::Approx(_) => Kind::Approx,
            Value::Function(_) => Kind::Function,
            Value::Sequence(_) => Kind::Sequence,
            Value::Name(_) => Kind::Name,
            Value::MLTest(_) => Kind::MLTest,
            Value::Sigma2Test(_) => Kind::Sigma2Test,
        }
    }

    /// Implicit conversions allowed when a reference is used at another
    /// kind.
    fn coerce(&self, to: Kind) -> Option<Value> {
        if self.kind() == to {
            return Some(self.clone());
        }
        Some(match (self, to) {
            (Value::Clopen(c), Kind::Sigma) => Value::Sigma(SigmaCode::from_clopen(c)),
            (Value::Clopen(c), Kind::Pi) => Value::Pi(PiCode::from_clopen(c)),
            (Value::Clopen(c), Kind::Level) => Value::Level(LevelCode::Open(SigmaCode::from_clopen(c))),
            (Value::Clopen(c), Kind::Function) => Value::Function(SimpleFunction::indicator(c)),
            (Value::Sigma(s), Kind::Level) => Value::Level(LevelCode::Open(s.clone())),
            (Value::Pi(p), Kind::Level) => Value::Level(LevelCode::Closed(p.clone())),
            (Value::Pi2(p), Kind::Level) => Value::Level(p.clone().into()),
            (Value::Level(l), Kind::Pi2) => Value::Pi2(l.as_pi2()?),
            (Value::Rational(r), Kind::Function) => Value::Function(SimpleFunction::constant(r.clone())),
            (Value::Function(f), Kind::Name) => Value::Name(L1Name::stationary(f.clone())),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Declaration {
    pub name: String,
    pub kind: Kind,
    pub value: Value,
    pub pos: Pos,
}

/// A resolved pipeline argument.
#[derive(Debug, Clone)]
pub enum Arg {
    Value(Value),
    Nat(usize),
    Word(String),
    Tests(Vec<MLTest>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Rational(Rational),
    Text(String),
    Word(String),
    List(Vec<Expected>),
}

#[derive(Debug, Clone)]
pub struct Expectation {
    pub key: String,
    pub expected: Expected,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct Command {
    pub pipeline: Pipeline,
    pub args: BTreeMap<String, Arg>,
    /// Source rendering of each argument, for reports.
    pub arg_text: BTreeMap<String, String>,
    pub expects: Vec<Expectation>,
    pub pos: Pos,
}

impl Command {
    pub fn value(&self, key: &str) -> Option<&Value> {
        match self.args.get(key) {
            Some(Arg::Value(v)) => Some(v),
            _ => None,
        }
    }

    pub fn nat(&self, key: &str) -> Option<usize> {
        match self.args.get(key) {
            Some(Arg::Nat(n)) => Some(*n),
            _ => None,
        }
    }

    pub fn word(&self, key: &str) -> Option<&str> {
        match self.args.get(key) {
            Some(Arg::Word(w)) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Scenario {
    pub declarations: Vec<Declaration>,
    pub commands: Vec<Command>,
}

impl Scenario {
    pub fn declaration(&self, name: &str) -> Option<&Declaration> {
        self.declarations.iter().find(|d| d.name == name)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, LoadError> {
    let statements = syntax::parse(text)?;
    let mut loader = Loader::default();
    let mut commands = Vec::new();
    for statement in statements {
        match statement {
            Statement::Let { name, kind, value, pos } => {
                if let Some(first) = loader.index.get(&name) {
                    return Err(LoadError::Duplicate {
                        name,
                        pos,
                        first: loader.declarations[*first].pos,
                    });
                }
                let Ok(kind) = kind.parse::<Kind>() else {
                    return type_error(pos, format!("unknown kind '{kind}'"));
                };
                let value = loader.literal(kind, &value)?;
                loader.index.insert(name.clone(), loader.declarations.len());
                loader.declarations.push(Declaration { name, kind, value, pos });
            }
            Statement::Run {
                pipeline,
                args,
                expects,
                pos,
            } => commands.push(loader.command(&pipeline, &args, &expects, pos)?),
        }
    }
    Ok(Scenario {
        declarations: loader.declarations,
        commands,
    })
}

#[derive(Default)]
struct Loader {
    declarations: Vec<Declaration>,
    index: BTreeMap<String, usize>,
}

fn single(phrase: &Phrase) -> Option<&Spanned> {
    match phrase.items.as_slice() {
        [one] => Some(one),
        _ => None,
    }
}

fn as_phrase(item: &Spanned) -> Phrase {
    Phrase {
        items: vec![item.clone()],
        pos: item.pos,
    }
}

fn expect_word(item: &Spanned, word: &str) -> bool {
    matches!(&item.expr, Expr::Ident(w) if w == word)
}

fn bit_string(item: &Spanned) -> Result<BitString, LoadError> {
    match &item.expr {
        Expr::Str(s) => s.parse().or_else(|e| invariant(item.pos, e)),
        _ => type_error(item.pos, "expected a quoted bit string"),
    }
}

fn number(item: &Spanned) -> Result<Rational, LoadError> {
    match &item.expr {
        Expr::Number(r) => Ok(r.clone()),
        _ => type_error(item.pos, "expected a number"),
    }
}

fn natural(item: &Spanned) -> Result<usize, LoadError> {
    let r = number(item)?;
    match (r.is_integer(), r.to_integer().to_usize()) {
        (true, Some(n)) => Ok(n),
        _ => type_error(item.pos, "expected a natural number"),
    }
}

fn group(item: &Spanned, delims: &[Delim], what: &str) -> Result<Vec<Phrase>, LoadError> {
    match &item.expr {
        Expr::Group(d, items) if delims.contains(d) => Ok(items.clone()),
        _ => type_error(item.pos, format!("expected {what}")),
    }
}

fn bit(item: &Spanned) -> Result<bool, LoadError> {
    match natural(item)? {
        0 => Ok(false),
        1 => Ok(true),
        _ => type_error(item.pos, "expected 0 or 1"),
    }
}

impl Loader {
    fn lookup(&self, name: &str, pos: Pos) -> Result<&Declaration, LoadError> {
        match self.index.get(name) {
            Some(&i) => Ok(&self.declarations[i]),
            None => Err(LoadError::Unresolved {
                name: name.to_string(),
                pos,
            }),
        }
    }

    fn reference(&self, name: &str, pos: Pos, kind: Kind) -> Result<Value, LoadError> {
        let decl = self.lookup(name, pos)?;
        match decl.value.coerce(kind) {
            Some(v) => Ok(v),
            None => type_error(
                pos,
                format!("'{name}' is a {} and cannot be used as a {kind}", decl.kind),
            ),
        }
    }

    fn literal(&self, kind: Kind, phrase: &Phrase) -> Result<Value, LoadError> {
        if let Some(Spanned {
            expr: Expr::Ident(name),
            pos,
        }) = single(phrase)
        {
            return self.reference(name, *pos, kind);
        }
        let items = &phrase.items;
        let pos = phrase.pos;
        let only = || {
            single(phrase)
                .ok_or(())
                .or_else(|_| type_error(pos, format!("malformed {kind} literal")))
        };
        Ok(match kind {
            Kind::Rational => Value::Rational(number(only()?)?),
            Kind::Point => Value::Point(self.point(phrase)?),
            Kind::Clopen => {
                let elements = group(only()?, &[Delim::Set, Delim::List], "a set of bit strings")?;
                let gens = elements
                    .iter()
                    .map(|p| single(p).map_or_else(|| type_error(p.pos, "expected a bit string"), bit_string))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Clopen(ClopenSet::normalize(gens))
            }
            Kind::Sigma => Value::Sigma(self.sigma(phrase)?),
            Kind::Pi => {
                if !expect_word(&items[0], "complement") || items.len() < 2 {
                    return type_error(pos, "expected 'complement <sigma>'");
                }
                let rest = Phrase {
                    items: items[1..].to_vec(),
                    pos: items[1].pos,
                };
                Value::Pi(PiCode::new(self.sigma(&rest)?))
            }
            Kind::Pi2 => {
                let strict = expect_word(&items[0], "strict");
                let body = match (strict, items.len()) {
                    (true, 2) => &items[1],
                    (false, 1) => &items[0],
                    _ => return type_error(pos, "expected '[strict] [row, ...]'"),
                };
                let rows = group(body, &[Delim::List], "a list of rows")?
                    .iter()
                    .map(|p| self.sigma(p))
                    .collect::<Result<Vec<_>, _>>()?;
                if strict {
                    Value::Pi2(Pi2Code::strict(rows).or_else(|e| invariant(pos, e))?)
                } else {
                    Value::Pi2(Pi2Code::new(rows))
                }
            }
            Kind::Level => Value::Level(self.level(phrase)?),
            Kind::Tree => {
                let [level, nodes] = items.as_slice() else {
                    return type_error(pos, "expected '<max-level> {nodes}'");
                };
                let nodes = group(nodes, &[Delim::Set, Delim::List], "a set of nodes")?
                    .iter()
                    .map(|p| single(p).map_or_else(|| type_error(p.pos, "expected a bit string"), bit_string))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Tree(FiniteTree::new(nodes, natural(level)?).or_else(|e| invariant(pos, e))?)
            }
            Kind::Approx => Value::Approx(self.approx(phrase)?),
            Kind::Function => Value::Function(self.function(phrase)?),
            Kind::Sequence => {
                let functions = if expect_word(&items[0], "repeat") {
                    let [_, count, f] = items.as_slice() else {
                        return type_error(pos, "expected 'repeat <count> <function>'");
                    };
                    let f = self.function(&as_phrase(f))?;
                    vec![f; natural(count)?]
                } else if expect_word(&items[0], "cylinders") {
                    let [_, list] = items.as_slice() else {
                        return type_error(pos, "expected 'cylinders [\"σ\", ...]'");
                    };
                    group(list, &[Delim::List], "a list of bit strings")?
                        .iter()
                        .map(|p| {
                            let s = single(p).map_or_else(|| type_error(p.pos, "expected a bit string"), bit_string)?;
                            Ok(SimpleFunction::indicator(&ClopenSet::cylinder(s)))
                        })
                        .collect::<Result<Vec<_>, LoadError>>()?
                } else {
                    group(only()?, &[Delim::List], "a list of functions")?
                        .iter()
                        .map(|p| self.function(p))
                        .collect::<Result<Vec<_>, _>>()?
                };
                Value::Sequence(SimpleSequence::new(functions))
            }
            Kind::Name => {
                let stationary = items.len() == 2 && expect_word(&items[1], "stationary");
                if items.len() != 1 && !stationary {
                    return type_error(pos, "expected '[f, ...] [stationary]'");
                }
                let entries = group(&items[0], &[Delim::List], "a list of functions")?
                    .iter()
                    .map(|p| self.function(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Name(L1Name::new(entries, stationary))
            }
            Kind::MLTest => {
                let levels = group(only()?, &[Delim::List], "a list of levels")?
                    .iter()
                    .map(|p| self.sigma(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::MLTest(MLTest::new(levels))
            }
            Kind::Sigma2Test => {
                let levels = group(only()?, &[Delim::List], "a list of levels")?
                    .iter()
                    .map(|p| self.level(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Value::Sigma2Test(Sigma2Test::new(levels).or_else(|e| invariant(pos, e))?)
            }
        })
    }

    fn point(&self, phrase: &Phrase) -> Result<Point, LoadError> {
        match phrase.items.as_slice() {
            [item] => Ok(Point {
                prefix: PointPrefix::new(bit_string(item)?),
                seed: None,
            }),
            [word, seed, len] if expect_word(word, "prng") => {
                let len = natural(len)?;
                if len > MAX_PRNG_LEN {
                    return invariant(phrase.pos, format!("prng prefixes are limited to {MAX_PRNG_LEN} bits"));
                }
                let seed = natural(seed)? as u64;
                Ok(Point {
                    prefix: prng_prefix(seed, len),
                    seed: Some(seed),
                })
            }
            _ => type_error(phrase.pos, "expected \"bits\" or 'prng <seed> <length>'"),
        }
    }

    fn sigma(&self, phrase: &Phrase) -> Result<SigmaCode, LoadError> {
        if let Some(Spanned {
            expr: Expr::Ident(name),
            pos,
        }) = single(phrase)
        {
            let Value::Sigma(s) = self.reference(name, *pos, Kind::Sigma)? else {
                unreachable!()
            };
            return Ok(s);
        }
        let (list, exhausted) = match phrase.items.as_slice() {
            [list] => (list, true),
            [list, flag] if expect_word(flag, "exhausted") => (list, true),
            [list, flag] if expect_word(flag, "partial") => (list, false),
            _ => return type_error(phrase.pos, "expected '[stage, ...] [exhausted|partial]'"),
        };
        let stages = group(list, &[Delim::List], "a list of stages")?
            .iter()
            .map(|p| match single(p) {
                Some(item) if expect_word(item, "empty") => Ok(BasicOpen::Empty),
                Some(item) => bit_string(item).map(BasicOpen::Cylinder),
                None => type_error(p.pos, "expected a bit string or 'empty'"),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SigmaCode::new(stages, exhausted))
    }

    fn level(&self, phrase: &Phrase) -> Result<LevelCode, LoadError> {
        let items = &phrase.items;
        if let [Spanned {
            expr: Expr::Ident(name),
            pos,
        }] = items.as_slice()
        {
            let Value::Level(l) = self.reference(name, *pos, Kind::Level)? else {
                unreachable!()
            };
            return Ok(l);
        }
        let Some(Spanned {
            expr: Expr::Ident(head),
            ..
        }) = items.first()
        else {
            return type_error(phrase.pos, "expected 'open', 'closed', 'union' or 'inter'");
        };
        let rest = Phrase {
            items: items[1..].to_vec(),
            pos: items.get(1).map_or(phrase.pos, |i| i.pos),
        };
        match head.as_str() {
            "open" => Ok(LevelCode::Open(self.sigma(&rest)?)),
            "closed" => Ok(LevelCode::Closed(PiCode::new(self.sigma(&rest)?))),
            "union" | "inter" => {
                let Some(list) = single(&rest) else {
                    return type_error(rest.pos, "expected a list of children");
                };
                let children = group(list, &[Delim::List], "a list of children")?
                    .iter()
                    .map(|p| self.level(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let level = children.iter().map(LevelCode::level).max().map_or(2, |l| l + 1);
                let built = if head == "union" {
                    LevelCode::union(level, children)
                } else {
                    LevelCode::intersection(level, children)
                };
                built.or_else(|e| invariant(phrase.pos, e))
            }
            other => type_error(phrase.pos, format!("unknown level constructor '{other}'")),
        }
    }

    fn approx(&self, phrase: &Phrase) -> Result<TreeApproximation, LoadError> {
        let items = &phrase.items;
        let malformed = || {
            type_error(
                phrase.pos,
                "expected '<max-level> <stages> [default <bit>] [(\"σ\", stage|*, bit), ...]'",
            )
        };
        let (level, stages, default, table) = match items.as_slice() {
            [l, s, t] => (l, s, None, t),
            [l, s, d, b, t] if expect_word(d, "default") => (l, s, Some(bit(b)?), t),
            _ => return malformed(),
        };
        let (max_level, stages) = (natural(level)?, natural(stages)?);
        let mut values = BTreeMap::new();
        if let Some(b) = default {
            for len in 0..=max_level {
                for s in BitString::all_of_length(len) {
                    for m in 0..stages {
                        values.insert((s.clone(), m), b);
                    }
                }
            }
        }
        for entry in group(table, &[Delim::List], "a list of entries")? {
            let Some(tuple) = single(&entry) else {
                return malformed();
            };
            let parts = group(tuple, &[Delim::Tuple], "an entry (\"σ\", stage|*, bit)")?;
            let [node, stage, value] = parts.as_slice() else {
                return type_error(tuple.pos, "expected (\"σ\", stage|*, bit)");
            };
            let (Some(node), Some(stage), Some(value)) = (single(node), single(stage), single(value)) else {
                return type_error(tuple.pos, "expected (\"σ\", stage|*, bit)");
            };
            let node = bit_string(node)?;
            if node.len() > max_level {
                return invariant(tuple.pos, format!("node \"{node}\" is deeper than level {max_level}"));
            }
            let value = bit(value)?;
            let range = if stage.expr == Expr::Star {
                0..stages
            } else {
                let m = natural(stage)?;
                if m >= stages {
                    return invariant(stage.pos, format!("stage {m} is not below {stages}"));
                }
                m..m + 1
            };
            for m in range {
                values.insert((node.clone(), m), value);
            }
        }
        Ok(TreeApproximation::new(values, stages, max_level))
    }

    fn function(&self, phrase: &Phrase) -> Result<SimpleFunction, LoadError> {
        if let Some(Spanned {
            expr: Expr::Ident(name),
            pos,
        }) = single(phrase)
        {
            let Value::Function(f) = self.reference(name, *pos, Kind::Function)? else {
                unreachable!()
            };
            return Ok(f);
        }
        let Some(list) = single(phrase) else {
            return type_error(phrase.pos, "expected [(coefficient, \"σ\"), ...]");
        };
        let mut terms = Vec::new();
        for term in group(list, &[Delim::List], "a list of terms")? {
            let parts = single(&term).map_or_else(
                || type_error(term.pos, "expected a term"),
                |t| group(t, &[Delim::Tuple], "a term (c, \"σ\")"),
            )?;
            let [c, s] = parts.as_slice() else {
                return type_error(term.pos, "expected (coefficient, \"σ\")");
            };
            let (Some(c), Some(s)) = (single(c), single(s)) else {
                return type_error(term.pos, "expected (coefficient, \"σ\")");
            };
            terms.push((number(c)?, bit_string(s)?));
        }
        Ok(SimpleFunction::from_terms(terms.iter().map(|(c, s)| (c.clone(), s))))
    }

    fn argument(&self, ty: ArgType, item: &Spanned) -> Result<Arg, LoadError> {
        match ty {
            ArgType::Nat => natural(item).map(Arg::Nat),
            ArgType::Word(words) => match &item.expr {
                Expr::Ident(w) if words.contains(&w.as_str()) => Ok(Arg::Word(w.clone())),
                _ => type_error(item.pos, format!("expected one of {}", words.join(", "))),
            },
            ArgType::Kind(kind) => self.literal(kind, &as_phrase(item)).map(Arg::Value),
            ArgType::StrictPi2 => {
                let value = self.literal(Kind::Pi2, &as_phrase(item))?;
                match &value {
                    Value::Pi2(code) if !code.is_strict() => invariant(
                        item.pos,
                        "pipeline needs a strict Π⁰₂ code; run strictify or declare it strict",
                    ),
                    _ => Ok(Arg::Value(value)),
                }
            }
            ArgType::Test => {
                if let Expr::Ident(name) = &item.expr {
                    let decl = self.lookup(name, item.pos)?;
                    if matches!(decl.kind, Kind::MLTest | Kind::Sigma2Test) {
                        return Ok(Arg::Value(decl.value.clone()));
                    }
                    return type_error(item.pos, format!("'{name}' is a {}, not a test", decl.kind));
                }
                self.literal(Kind::MLTest, &as_phrase(item)).map(Arg::Value)
            }
            ArgType::Tests => group(item, &[Delim::List], "a list of tests")?
                .iter()
                .map(|p| match self.literal(Kind::MLTest, p)? {
                    Value::MLTest(t) => Ok(t),
                    _ => unreachable!(),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Arg::Tests),
            ArgType::Sigma3 => {
                let value = self.literal(Kind::Level, &as_phrase(item))?;
                match &value {
                    Value::Level(l) if l.level() != 3 || l.kind() != LevelKind::Sigma => {
                        invariant(item.pos, "expected a Σ⁰₃ code")
                    }
                    Value::Level(l) if !l.is_strict() => invariant(item.pos, "Σ⁰₃ children must increase"),
                    _ => Ok(Arg::Value(value)),
                }
            }
        }
    }

    fn command(
        &self,
        name: &str,
        args: &[syntax::Binding],
        expects: &[syntax::Binding],
        pos: Pos,
    ) -> Result<Command, LoadError> {
        let Ok(pipeline) = name.parse::<Pipeline>() else {
            return type_error(pos, format!("unknown pipeline '{name}'"));
        };
        let sig = signature(pipeline);
        let mut resolved = BTreeMap::new();
        let mut arg_text = BTreeMap::new();
        for binding in args {
            let Some(param) = sig.params.iter().find(|p| p.key == binding.key) else {
                return type_error(binding.pos, format!("{name} takes no argument '{}'", binding.key));
            };
            if resolved.contains_key(&binding.key) {
                return type_error(binding.pos, format!("argument '{}' given twice", binding.key));
            }
            resolved.insert(binding.key.clone(), self.argument(param.ty, &binding.value)?);
            arg_text.insert(binding.key.clone(), render(&binding.value.expr));
        }
        for p in sig.params.iter().filter(|p| p.required) {
            if !resolved.contains_key(p.key) {
                return type_error(pos, format!("{name} needs argument '{}'", p.key));
            }
        }
        if !sig.alternatives.is_empty() {
            let chosen: Vec<&[&str]> = sig
                .alternatives
                .iter()
                .copied()
                .filter(|alt| alt.iter().any(|k| resolved.contains_key(*k)))
                .collect();
            let forms = || {
                sig.alternatives
                    .iter()
                    .map(|a| a.join("+"))
                    .collect::<Vec<_>>()
                    .join(" or ")
            };
            match chosen.as_slice() {
                [alt] => {
                    if let Some(missing) = alt.iter().find(|k| !resolved.contains_key(**k)) {
                        return type_error(pos, format!("{name} needs argument '{missing}'"));
                    }
                }
                [] => return type_error(pos, format!("{name} needs {}", forms())),
                _ => return type_error(pos, format!("{name} takes exactly one of {}", forms())),
            }
        }
        let mut expectations = Vec::new();
        for binding in expects {
            if !sig.summary.contains(&binding.key.as_str()) {
                return type_error(
                    binding.pos,
                    format!(
                        "{name} reports no '{}' (known: {})",
                        binding.key,
                        sig.summary.join(", ")
                    ),
                );
            }
            expectations.push(Expectation {
                key: binding.key.clone(),
                expected: expected(&binding.value)?,
                pos: binding.pos,
            });
        }
        Ok(Command {
            pipeline,
            args: resolved,
            arg_text,
            expects: expectations,
            pos,
        })
    }
}

fn expected(item: &Spanned) -> Result<Expected, LoadError> {
    Ok(match &item.expr {
        Expr::Number(r) => Expected::Rational(r.clone()),
        Expr::Str(s) => Expected::Text(s.clone()),
        Expr::Ident(w) => Expected::Word(w.clone()),
        Expr::Group(Delim::List, items) => Expected::List(
            items
                .iter()
                .map(|p| single(p).map_or_else(|| type_error(p.pos, "expected a single value"), expected))
                .collect::<Result<_, _>>()?,
        ),
        _ => return type_error(item.pos, "expected a number, string, word or list"),
    })
}

/// Source-like rendering of an expression.
pub fn render(expr: &Expr) -> String {
    match expr {
        Expr::Number(r) if r.denom().is_one() => r.numer().to_string(),
        Expr::Number(r) => format!("{}/{}", r.numer(), r.denom()),
        Expr::Str(s) => format!("\"{s}\""),
        Expr::Ident(s) => s.clone(),
        Expr::Star => "*".into(),
        Expr::Group(delim, items) => {
            let (open, close) = match delim {
                Delim::List => ("[", "]"),
                Delim::Set => ("{", "}"),
                Delim::Tuple => ("(", ")"),
            };
            let inner: Vec<String> = items
                .iter()
                .map(|p| p.items.iter().map(|i| render(&i.expr)).collect::<Vec<_>>().join(" "))
                .collect();
            format!("{open}{}{close}", inner.join(", "))
        }
    }
}

/// True when `value` is a usable tolerance.
pub fn is_positive(value: &Rational) -> bool {
    value > &Rational::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Scenario, LoadError> {
        parse_scenario(text)
    }

    #[test]
    fn minimal_scenario() {
        let s = load("let a : clopen = {\"0\"}\nrun measure set=a\n").unwrap();
        assert_eq!(s.declarations.len(), 1);
        assert_eq!(s.commands.len(), 1);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let e = load("let a : rational = 1\nlet a : rational = 2\n").unwrap_err();
        assert!(matches!(&e, LoadError::Duplicate { name, .. } if name == "a"));
        assert!(e.to_string().contains("'a'"));
    }

    #[test]
    fn unresolved_references() {
        let e = load("let p : pi2 = [b]\n").unwrap_err();
        assert!(matches!(e, LoadError::Unresolved { ref name, .. } if name == "b"));
    }

    #[test]
    fn strict_only_pipelines_reject_non_strict_codes() {
        let text = "let g : pi2 = [[\"0\"], [\"1\"]]\nrun inner-regularity code=g r=1/4 delta=1/8\n";
        assert!(matches!(load(text).unwrap_err(), LoadError::Invariant { .. }));
        let text = "let g : pi2 = strict [[\"0\"], [\"1\"]]\n";
        assert!(matches!(load(text).unwrap_err(), LoadError::Invariant { .. }));
    }

    #[test]
    fn coercions_and_literals() {
        let text = r#"
let c : clopen = {"00", "01"}
let s : sigma = ["1", empty] partial
let p : pi = complement ["1"]
let g : pi2 = strict [c, c]
let l : level = union [closed ["1"], closed ["11"]]
let t : tree = 2 {"", "0", "00"}
let a : approx = 1 3 default 1 [("1", *, 0)]
let f : function = [(1/2, "0"), (1, "")]
let q : sequence = cylinders ["", "0"]
let n : name = [f] stationary
let m : mltest = [["0"], ["00"]]
let u : sigma2test = [union [closed ["1"]]]
let y : point = prng 7 32
"#;
        let s = load(text).unwrap();
        let Value::Sigma(code) = &s.declaration("s").unwrap().value else {
            panic!()
        };
        assert!(!code.is_exhausted());
        assert_eq!(code.len(), 2);
        let Value::Pi2(g) = &s.declaration("g").unwrap().value else {
            panic!()
        };
        assert!(g.is_strict());
        let Value::Level(l) = &s.declaration("l").unwrap().value else {
            panic!()
        };
        assert_eq!((l.level(), l.kind()), (2, LevelKind::Sigma));
        let Value::Approx(a) = &s.declaration("a").unwrap().value else {
            panic!()
        };
        assert!(!a.get(&"1".parse().unwrap(), 2).unwrap());
        assert!(a.get(&"0".parse().unwrap(), 2).unwrap());
        let Value::Point(y) = &s.declaration("y").unwrap().value else {
            panic!()
        };
        assert_eq!(y.prefix, prng_prefix(7, 32));
        assert_eq!(y.seed, Some(7));
    }

    #[test]
    fn kind_mismatch_is_a_type_error() {
        let e = load("let f : function = [(1, \"\")]\nlet g : pi2 = [f]\n").unwrap_err();
        assert!(matches!(e, LoadError::Type { .. }), "{e}");
    }

    #[test]
    fn unknown_expect_keys_are_rejected() {
        let e = load("let a : clopen = {\"0\"}\nrun measure set=a expect colour=3\n").unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn alternative_argument_groups() {
        let base = "let q : sequence = cylinders [\"\", \"0\"]\n";
        assert!(load(&format!("{base}run dct seq=q epsilon=1/4 bound=1\n")).is_ok());
        assert!(load(&format!("{base}run dct seq=q epsilon=1/4\n")).is_err());
    }
}
