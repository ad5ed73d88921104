//! Intensional codes for effective open, closed, Gδ and level-n sets.
//!
//! A [`SigmaCode`] is a finite staged enumeration of basic open sets. When
//! it is marked `exhausted` the enumeration is complete, and the code doubles
//! as the answer to every "does the enumeration ever produce ...?" question
//! about it. Measure predicates follow their witness forms: `μ(A) > δ` is
//! proved by exhibiting a stage, and for strict Π⁰₂ codes `μ(A) ≥ r` is
//! checked row by row against a caller-chosen ε.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::clopen::{dyadic, format_rational, BitString, ClopenSet, PointPrefix, Rational};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

/// A cylinder `[σ]` or the empty set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BasicOpen {
    Empty,
    Cylinder(BitString),
}

impl BasicOpen {
    pub fn cylinder(&self) -> Option<&BitString> {
        match self {
            BasicOpen::Empty => None,
            BasicOpen::Cylinder(s) => Some(s),
        }
    }

    pub fn measure(&self) -> Rational {
        match self {
            BasicOpen::Empty => Rational::zero(),
            BasicOpen::Cylinder(s) => dyadic(s.len()),
        }
    }

    /// Two cylinders meet in the longer one when comparable, else nowhere.
    pub fn intersect(&self, other: &BasicOpen) -> BasicOpen {
        match (self, other) {
            (BasicOpen::Cylinder(a), BasicOpen::Cylinder(b)) => {
                if a.is_prefix_of(b) {
                    BasicOpen::Cylinder(b.clone())
                } else if b.is_prefix_of(a) {
                    BasicOpen::Cylinder(a.clone())
                } else {
                    BasicOpen::Empty
                }
            }
            _ => BasicOpen::Empty,
        }
    }

    fn len(&self) -> usize {
        self.cylinder().map_or(0, BitString::len)
    }
}

impl fmt::Debug for BasicOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BasicOpen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicOpen::Empty => f.write_str("empty"),
            BasicOpen::Cylinder(s) => write!(f, "\"{s}\""),
        }
    }
}

/// A stage witness for `μ(⋃_{i<m} B_i) > δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageWitness {
    /// Number of stages `m` in the witnessing prefix.
    pub stages: usize,
    pub union: ClopenSet,
    pub measure: Rational,
}

/// Effective open set: the union of a staged enumeration of basic opens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaCode {
    stages: Vec<BasicOpen>,
    exhausted: bool,
}

impl SigmaCode {
    pub fn new(stages: Vec<BasicOpen>, exhausted: bool) -> Self {
        SigmaCode { stages, exhausted }
    }

    pub fn from_cylinders(cylinders: impl IntoIterator<Item = BitString>, exhausted: bool) -> Self {
        SigmaCode::new(cylinders.into_iter().map(BasicOpen::Cylinder).collect(), exhausted)
    }

    /// The exhausted enumeration of a clopen set's generators.
    pub fn from_clopen(set: &ClopenSet) -> Self {
        SigmaCode::from_cylinders(set.generators().cloned(), true)
    }

    pub fn stages(&self) -> &[BasicOpen] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn max_cylinder_len(&self) -> usize {
        self.stages.iter().map(BasicOpen::len).max().unwrap_or(0)
    }

    /// `⋃_{i<m} stages[i]` in canonical form.
    pub fn union_prefix(&self, m: usize) -> Result<ClopenSet> {
        if m > self.stages.len() {
            return Err(Error::HorizonExceeded {
                requested: m,
                recorded: self.stages.len(),
            });
        }
        Ok(ClopenSet::normalize(
            self.stages[..m].iter().filter_map(BasicOpen::cylinder).cloned(),
        ))
    }

    /// Union of every recorded stage; the coded set itself when exhausted.
    pub fn recorded_union(&self) -> ClopenSet {
        self.union_prefix(self.stages.len()).expect("full prefix")
    }

    /// Measures of the cumulative unions for `m = 0..=len`.
    pub fn prefix_measures(&self) -> Vec<Rational> {
        let mut current = ClopenSet::empty();
        let mut out = vec![Rational::zero()];
        for stage in &self.stages {
            if let BasicOpen::Cylinder(s) = stage {
                current = current.union(&ClopenSet::cylinder(s.clone()));
            }
            out.push(current.measure());
        }
        out
    }

    /// `μ(A) > δ`, witnessed by the least prefix whose union exceeds `δ`.
    /// Refuted only once the enumeration is exhausted.
    pub fn measure_gt(&self, delta: &Rational) -> Verdict<StageWitness, ClopenSet> {
        let mut current = ClopenSet::empty();
        for m in 0..=self.stages.len() {
            if m > 0 {
                if let BasicOpen::Cylinder(s) = &self.stages[m - 1] {
                    current = current.union(&ClopenSet::cylinder(s.clone()));
                }
            }
            let measure = current.measure();
            if &measure > delta {
                return Verdict::Proved(StageWitness {
                    stages: m,
                    union: current,
                    measure,
                });
            }
        }
        if self.exhausted {
            Verdict::Refuted(current)
        } else {
            Verdict::Unknown {
                horizon: self.stages.len(),
            }
        }
    }

    /// Replays a [`SigmaCode::measure_gt`] verdict.
    pub fn replay_measure_gt(&self, delta: &Rational, verdict: &Verdict<StageWitness, ClopenSet>) -> bool {
        match verdict {
            Verdict::Proved(w) => {
                let Ok(union) = self.union_prefix(w.stages) else {
                    return false;
                };
                let least = w.stages == 0
                    || self
                        .union_prefix(w.stages - 1)
                        .map(|u| &u.measure() <= delta)
                        .unwrap_or(false);
                union == w.union && union.measure() == w.measure && &w.measure > delta && least
            }
            Verdict::Refuted(union) => self.exhausted && *union == self.recorded_union() && &union.measure() <= delta,
            Verdict::Unknown { .. } => !self.exhausted && &self.recorded_union().measure() <= delta,
        }
    }

    /// Membership of a point, consulting at most `horizon` stages.
    pub fn membership(&self, point: &PointPrefix, horizon: usize) -> Verdict<usize, ClopenSet> {
        let considered = horizon.min(self.stages.len());
        let mut undecided = false;
        for (i, stage) in self.stages[..considered].iter().enumerate() {
            if let BasicOpen::Cylinder(s) = stage {
                match point.in_cylinder(s) {
                    Some(true) => return Verdict::Proved(i),
                    Some(false) => {}
                    None => undecided = true,
                }
            }
        }
        if !undecided && self.exhausted && considered == self.stages.len() {
            Verdict::Refuted(self.recorded_union())
        } else {
            Verdict::Unknown { horizon: considered }
        }
    }

    pub fn replay_membership(&self, point: &PointPrefix, verdict: &Verdict<usize, ClopenSet>) -> bool {
        match verdict {
            Verdict::Proved(i) => matches!(
                self.stages.get(*i),
                Some(BasicOpen::Cylinder(s)) if point.in_cylinder(s) == Some(true)
            ),
            Verdict::Refuted(union) => {
                self.exhausted
                    && *union == self.recorded_union()
                    && union.generators().all(|g| point.in_cylinder(g) == Some(false))
            }
            Verdict::Unknown { .. } => true,
        }
    }
}

/// Effective closed set: the complement of a [`SigmaCode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiCode {
    complement: SigmaCode,
}

impl PiCode {
    pub fn new(complement: SigmaCode) -> Self {
        PiCode { complement }
    }

    /// The exhausted code of a clopen set, viewed as a closed set.
    pub fn from_clopen(set: &ClopenSet) -> Self {
        PiCode::new(SigmaCode::from_clopen(&set.complement()))
    }

    pub fn complement(&self) -> &SigmaCode {
        &self.complement
    }

    pub fn is_exhausted(&self) -> bool {
        self.complement.exhausted
    }

    /// Complement of the recorded union: the coded set when exhausted, an
    /// upper bound otherwise.
    pub fn recorded_set(&self) -> ClopenSet {
        self.complement.recorded_union().complement()
    }

    pub fn max_cylinder_len(&self) -> usize {
        self.complement.max_cylinder_len()
    }

    /// Proved only when the complement is exhausted and the point is
    /// decided outside every enumerated cylinder.
    pub fn membership(&self, point: &PointPrefix, horizon: usize) -> Verdict<ClopenSet, usize> {
        match self.complement.membership(point, horizon) {
            Verdict::Proved(i) => Verdict::Refuted(i),
            Verdict::Refuted(u) => Verdict::Proved(u),
            Verdict::Unknown { horizon } => Verdict::Unknown { horizon },
        }
    }

    pub fn replay_membership(&self, point: &PointPrefix, verdict: &Verdict<ClopenSet, usize>) -> bool {
        let flipped = match verdict {
            Verdict::Proved(u) => Verdict::Refuted(u.clone()),
            Verdict::Refuted(i) => Verdict::Proved(*i),
            Verdict::Unknown { horizon } => Verdict::Unknown { horizon: *horizon },
        };
        self.complement.replay_membership(point, &flipped)
    }
}

/// Per-row witnesses for `μ(A) ≥ r` on a strict Π⁰₂ code, checked as
/// `μ(row_i) > r − ε` for the recorded ε.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureGeWitness {
    pub epsilon: Rational,
    pub threshold: Rational,
    pub rows: Vec<StageWitness>,
}

/// Effective Gδ set `⋂_i rows[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pi2Code {
    rows: Vec<SigmaCode>,
    strict: bool,
}

impl Pi2Code {
    pub fn new(rows: Vec<SigmaCode>) -> Self {
        Pi2Code { rows, strict: false }
    }

    /// Builds a code flagged strict after checking that each row's recorded
    /// union contains the next one's.
    pub fn strict(rows: Vec<SigmaCode>) -> Result<Self> {
        if let Some(i) = first_increase(&rows) {
            return Err(Error::NotStrict(format!("row {} is not contained in row {}", i + 1, i)));
        }
        Ok(Pi2Code { rows, strict: true })
    }

    pub fn rows(&self) -> &[SigmaCode] {
        &self.rows
    }

    pub fn is_strict(&self) -> bool {
        self.strict
    }

    pub fn is_exhausted(&self) -> bool {
        self.rows.iter().all(SigmaCode::is_exhausted)
    }

    pub fn max_cylinder_len(&self) -> usize {
        self.rows.iter().map(SigmaCode::max_cylinder_len).max().unwrap_or(0)
    }

    /// Intersection of the recorded row unions (the whole space when there
    /// are no rows).
    pub fn recorded_set(&self) -> ClopenSet {
        self.rows
            .iter()
            .fold(ClopenSet::full(), |acc, row| acc.intersect(&row.recorded_union()))
    }

    fn require_strict(&self) -> Result<()> {
        if self.strict {
            Ok(())
        } else {
            Err(Error::NotStrict("operation needs a strict code".into()))
        }
    }

    /// Extensionally equal strict code. Row `i` of the result enumerates the
    /// intersections `B_{0,j0} ∩ … ∩ B_{i,ji}`, built from the previous
    /// output row and visited in dovetailed order; empty intersections and
    /// repeats are dropped, and a row with nothing left is `[empty]`.
    pub fn strictify(&self) -> Pi2Code {
        let mut out: Vec<SigmaCode> = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let exhausted = self.rows[..=i].iter().all(SigmaCode::is_exhausted);
            let stages = match out.last() {
                None => nonempty_distinct(row.stages.iter().cloned()),
                Some(prev) => {
                    let mut pairs: Vec<(usize, usize)> = (0..prev.stages.len())
                        .flat_map(|a| (0..row.stages.len()).map(move |b| (a, b)))
                        .collect();
                    pairs.sort_by_key(|&(a, b)| (a.max(b), a, b));
                    nonempty_distinct(pairs.into_iter().map(|(a, b)| prev.stages[a].intersect(&row.stages[b])))
                }
            };
            out.push(SigmaCode::new(stages, exhausted));
        }
        Pi2Code::strict(out).expect("intersections of earlier rows decrease")
    }

    /// `μ(A) ≥ r`, checked as `μ(row_i) > r − ε` on every recorded row.
    pub fn measure_ge(&self, r: &Rational, epsilon: &Rational) -> Result<Verdict<MeasureGeWitness, usize>> {
        self.require_strict()?;
        if !epsilon.is_positive() {
            return Err(Error::Malformed {
                what: "epsilon",
                detail: format!("{} is not positive", format_rational(epsilon)),
            });
        }
        let threshold = r - epsilon;
        Ok(self.rows_exceed(&threshold).map_proved(|rows| MeasureGeWitness {
            epsilon: epsilon.clone(),
            threshold,
            rows,
        }))
    }

    /// The positive-measure form `∀i μ(row_i) > δ`.
    pub fn measure_gt(&self, delta: &Rational) -> Result<Verdict<Vec<StageWitness>, usize>> {
        self.require_strict()?;
        Ok(self.rows_exceed(delta))
    }

    fn rows_exceed(&self, threshold: &Rational) -> Verdict<Vec<StageWitness>, usize> {
        let mut witnesses = Vec::with_capacity(self.rows.len());
        let mut unknown: Option<usize> = None;
        for (i, row) in self.rows.iter().enumerate() {
            match row.measure_gt(threshold) {
                Verdict::Proved(w) => witnesses.push(w),
                Verdict::Refuted(_) => return Verdict::Refuted(i),
                Verdict::Unknown { horizon } => {
                    unknown.get_or_insert(horizon);
                }
            }
        }
        match unknown {
            None => Verdict::Proved(witnesses),
            Some(horizon) => Verdict::Unknown { horizon },
        }
    }

    /// For each row, the union of its first `k_i` stages for the least `k_i`
    /// whose measure exceeds `δ`.
    pub fn truncate_levels(&self, delta: &Rational) -> Result<Vec<StageWitness>> {
        self.require_strict()?;
        self.rows
            .iter()
            .enumerate()
            .map(|(row, code)| {
                code.measure_gt(delta)
                    .into_proved()
                    .ok_or_else(|| Error::WitnessMissing {
                        row,
                        threshold: format_rational(delta),
                    })
            })
            .collect()
    }

    pub fn membership(&self, point: &PointPrefix, horizon: usize) -> Verdict<Vec<usize>, usize> {
        let considered = horizon.min(self.rows.len());
        let mut stages = Vec::with_capacity(considered);
        let mut undecided = None;
        for (i, row) in self.rows[..considered].iter().enumerate() {
            match row.membership(point, horizon) {
                Verdict::Proved(j) => stages.push(j),
                Verdict::Refuted(_) => return Verdict::Refuted(i),
                Verdict::Unknown { horizon } => {
                    undecided.get_or_insert(horizon);
                }
            }
        }
        match undecided {
            None if considered == self.rows.len() => Verdict::Proved(stages),
            None => Verdict::Unknown { horizon: considered },
            Some(h) => Verdict::Unknown { horizon: h },
        }
    }

    pub fn replay_membership(&self, point: &PointPrefix, verdict: &Verdict<Vec<usize>, usize>) -> bool {
        match verdict {
            Verdict::Proved(stages) => {
                stages.len() == self.rows.len()
                    && self
                        .rows
                        .iter()
                        .zip(stages)
                        .all(|(row, &j)| row.replay_membership(point, &Verdict::Proved(j)))
            }
            Verdict::Refuted(i) => self
                .rows
                .get(*i)
                .is_some_and(|row| row.replay_membership(point, &Verdict::Refuted(row.recorded_union()))),
            Verdict::Unknown { .. } => true,
        }
    }

    /// Closed subset losing at most `δ` of measure.
    ///
    /// For every row `i` picks the least cutoff `K_i` such that the stages
    /// after `K_i` add less than `δ / 2^(i+2)`; the closed set is
    /// `C = ⋂_i ⋃_{j<K_i} B_{i,j}`. Requires an exhausted strict code whose
    /// rows all have measure at least `r`.
    pub fn inner_regularity(&self, r: &Rational, delta: &Rational) -> Result<InnerRegularity> {
        self.require_strict()?;
        if !self.is_exhausted() {
            return Err(Error::NotExhausted("Π⁰₂ code"));
        }
        if !delta.is_positive() {
            return Err(Error::Malformed {
                what: "delta",
                detail: format!("{} is not positive", format_rational(delta)),
            });
        }
        let mut cutoffs = Vec::with_capacity(self.rows.len());
        let mut tails = Vec::with_capacity(self.rows.len());
        let mut truncated = Vec::with_capacity(self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let measures = row.prefix_measures();
            let full = measures.last().expect("prefix 0 always present").clone();
            if &full < r {
                return Err(Error::HypothesisNotProved(format!(
                    "row {i} has measure {} below {}",
                    format_rational(&full),
                    format_rational(r)
                )));
            }
            let bound = delta * dyadic(i + 2);
            // The gap μ(U_J \ U_K) = μ(U_J) − μ(U_K) is largest at the last stage.
            let cutoff = measures
                .iter()
                .position(|m| &full - m < bound)
                .expect("the full prefix has no tail");
            tails.push(&full - &measures[cutoff]);
            truncated.push(row.union_prefix(cutoff)?);
            cutoffs.push(cutoff);
        }
        let set = truncated.iter().fold(ClopenSet::full(), |acc, u| acc.intersect(u));
        let closed = PiCode::new(SigmaCode::from_cylinders(
            truncated
                .iter()
                .flat_map(|u| u.complement().generators().cloned().collect::<Vec<_>>()),
            true,
        ));
        let certificate = InnerRegularity {
            r: r.clone(),
            delta: delta.clone(),
            cutoffs,
            tails,
            measure: set.measure(),
            depth: self.max_cylinder_len(),
            set,
            closed,
        };
        certificate.verify(self)?;
        Ok(certificate)
    }
}

fn nonempty_distinct(stages: impl Iterator<Item = BasicOpen>) -> Vec<BasicOpen> {
    let mut seen = BTreeSet::new();
    let mut out: Vec<BasicOpen> = stages
        .filter(|s| matches!(s, BasicOpen::Cylinder(_)) && seen.insert(s.clone()))
        .collect();
    if out.is_empty() {
        out.push(BasicOpen::Empty);
    }
    out
}

fn first_increase(rows: &[SigmaCode]) -> Option<usize> {
    let unions: Vec<ClopenSet> = rows.iter().map(SigmaCode::recorded_union).collect();
    unions.windows(2).position(|w| !w[1].is_subset(&w[0]))
}

/// Certificate returned by [`Pi2Code::inner_regularity`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerRegularity {
    pub r: Rational,
    pub delta: Rational,
    /// `f(i)`: number of stages of row `i` kept.
    pub cutoffs: Vec<usize>,
    /// Measure added by row `i` after its cutoff; below `δ / 2^(i+2)`.
    pub tails: Vec<Rational>,
    /// The closed set `C` as a clopen set.
    pub set: ClopenSet,
    /// `C` as a closed code: its complement enumerates the row complements.
    pub closed: PiCode,
    pub measure: Rational,
    /// Enumeration depth used for the pointwise checks.
    pub depth: usize,
}

impl InnerRegularity {
    /// Replays every claim of the certificate against `code`.
    pub fn verify(&self, code: &Pi2Code) -> Result<()> {
        let fail = |msg: String| Err(Error::CertificationFailure(msg));
        if self.cutoffs.len() != code.rows.len() || self.tails.len() != code.rows.len() {
            return fail("certificate does not cover every row".into());
        }
        let mut expected = ClopenSet::full();
        for (i, row) in code.rows.iter().enumerate() {
            let measures = row.prefix_measures();
            let full = measures.last().unwrap();
            let bound = &self.delta * dyadic(i + 2);
            let k = self.cutoffs[i];
            if k > row.len() || full - &measures[k] != self.tails[i] || self.tails[i] >= bound {
                return fail(format!(
                    "row {i}: cutoff {k} leaves tail above {}",
                    format_rational(&bound)
                ));
            }
            if k > 0 && full - &measures[k - 1] < bound {
                return fail(format!("row {i}: cutoff {k} is not the least"));
            }
            expected = expected.intersect(&row.union_prefix(k)?);
        }
        if expected != self.set {
            return fail("closed set differs from the intersection of truncated rows".into());
        }
        if self.closed.complement().recorded_union() != self.set.complement() || !self.closed.is_exhausted() {
            return fail("closed code does not denote the closed set".into());
        }
        let depth = self.depth.max(self.set.max_len());
        let members = self.set.members_at_depth(depth)?;
        for row in &code.rows {
            let row_members = row.recorded_union().members_at_depth(depth)?;
            if !members.is_subset(&row_members) {
                return fail("closed set escapes a row".into());
            }
        }
        let counted = Rational::new((members.len() as u64).into(), (1u64 << depth).into());
        if counted != self.measure || self.set.measure() != self.measure {
            return fail("measure does not match the point count".into());
        }
        if self.measure < &self.r - &self.delta {
            return fail(format!(
                "measure {} is below {}",
                format_rational(&self.measure),
                format_rational(&(&self.r - &self.delta))
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelKind {
    Sigma,
    Pi,
}

/// Membership witness for a [`LevelCode`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// The cylinder enumerated at this stage contains the point.
    Stage(usize),
    /// The point is decided outside this exhausted union.
    Avoids(ClopenSet),
    /// One child settles the question.
    Child(usize, Box<Witness>),
    /// Every child agrees.
    All(Vec<Witness>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compound {
    level: usize,
    children: Vec<LevelCode>,
    strict: bool,
}

/// Code for a level-`n` set: a Σ⁰ₙ set is a union of Π⁰ₙ₋₁ children and a
/// Π⁰ₙ set an intersection of Σ⁰ₙ₋₁ children, bottoming out at open and
/// closed codes on level 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LevelCode {
    Open(SigmaCode),
    Closed(PiCode),
    Union(Compound),
    Intersection(Compound),
}

impl LevelCode {
    /// Σ⁰ at `level ≥ 2`; children must be Π⁰ at `level − 1`. The strict
    /// flag records whether the recorded children increase.
    pub fn union(level: usize, children: Vec<LevelCode>) -> Result<Self> {
        check_children(level, LevelKind::Pi, &children)?;
        let sets: Vec<ClopenSet> = children.iter().map(LevelCode::recorded_set).collect();
        let strict = children.iter().all(LevelCode::is_strict) && sets.windows(2).all(|w| w[0].is_subset(&w[1]));
        Ok(LevelCode::Union(Compound {
            level,
            children,
            strict,
        }))
    }

    /// Π⁰ at `level ≥ 2`; children must be Σ⁰ at `level − 1`. Strict when
    /// the recorded children decrease.
    pub fn intersection(level: usize, children: Vec<LevelCode>) -> Result<Self> {
        check_children(level, LevelKind::Sigma, &children)?;
        let sets: Vec<ClopenSet> = children.iter().map(LevelCode::recorded_set).collect();
        let strict = children.iter().all(LevelCode::is_strict) && sets.windows(2).all(|w| w[1].is_subset(&w[0]));
        Ok(LevelCode::Intersection(Compound {
            level,
            children,
            strict,
        }))
    }

    pub fn level(&self) -> usize {
        match self {
            LevelCode::Open(_) | LevelCode::Closed(_) => 1,
            LevelCode::Union(c) | LevelCode::Intersection(c) => c.level,
        }
    }

    pub fn kind(&self) -> LevelKind {
        match self {
            LevelCode::Open(_) | LevelCode::Union(_) => LevelKind::Sigma,
            LevelCode::Closed(_) | LevelCode::Intersection(_) => LevelKind::Pi,
        }
    }

    pub fn is_strict(&self) -> bool {
        match self {
            LevelCode::Open(_) | LevelCode::Closed(_) => true,
            LevelCode::Union(c) | LevelCode::Intersection(c) => c.strict,
        }
    }

    pub fn children(&self) -> &[LevelCode] {
        match self {
            LevelCode::Open(_) | LevelCode::Closed(_) => &[],
            LevelCode::Union(c) | LevelCode::Intersection(c) => &c.children,
        }
    }

    pub fn is_exhausted(&self) -> bool {
        match self {
            LevelCode::Open(s) => s.is_exhausted(),
            LevelCode::Closed(p) => p.is_exhausted(),
            _ => self.children().iter().all(LevelCode::is_exhausted),
        }
    }

    pub fn max_cylinder_len(&self) -> usize {
        match self {
            LevelCode::Open(s) => s.max_cylinder_len(),
            LevelCode::Closed(p) => p.max_cylinder_len(),
            _ => self
                .children()
                .iter()
                .map(LevelCode::max_cylinder_len)
                .max()
                .unwrap_or(0),
        }
    }

    /// The set obtained by treating every recorded enumeration as complete;
    /// exact for exhausted codes.
    pub fn recorded_set(&self) -> ClopenSet {
        match self {
            LevelCode::Open(s) => s.recorded_union(),
            LevelCode::Closed(p) => p.recorded_set(),
            LevelCode::Union(c) => c
                .children
                .iter()
                .fold(ClopenSet::empty(), |acc, ch| acc.union(&ch.recorded_set())),
            LevelCode::Intersection(c) => c
                .children
                .iter()
                .fold(ClopenSet::full(), |acc, ch| acc.intersect(&ch.recorded_set())),
        }
    }

    pub fn membership(&self, point: &PointPrefix, horizon: usize) -> Verdict<Witness, Witness> {
        match self {
            LevelCode::Open(s) => s
                .membership(point, horizon)
                .map_proved(Witness::Stage)
                .map_refuted(Witness::Avoids),
            LevelCode::Closed(p) => p
                .membership(point, horizon)
                .map_proved(Witness::Avoids)
                .map_refuted(Witness::Stage),
            LevelCode::Union(c) => {
                // A union is the dual of an intersection.
                match combine(&c.children, point, horizon, true) {
                    Verdict::Proved(w) => Verdict::Refuted(w),
                    Verdict::Refuted(w) => Verdict::Proved(w),
                    Verdict::Unknown { horizon } => Verdict::Unknown { horizon },
                }
            }
            LevelCode::Intersection(c) => combine(&c.children, point, horizon, false),
        }
    }

    pub fn replay_membership(&self, point: &PointPrefix, verdict: &Verdict<Witness, Witness>) -> bool {
        match (self, verdict) {
            (_, Verdict::Unknown { .. }) => true,
            (LevelCode::Open(s), Verdict::Proved(Witness::Stage(i))) => {
                s.replay_membership(point, &Verdict::Proved(*i))
            }
            (LevelCode::Open(s), Verdict::Refuted(Witness::Avoids(u))) => {
                s.replay_membership(point, &Verdict::Refuted(u.clone()))
            }
            (LevelCode::Closed(p), Verdict::Proved(Witness::Avoids(u))) => {
                p.replay_membership(point, &Verdict::Proved(u.clone()))
            }
            (LevelCode::Closed(p), Verdict::Refuted(Witness::Stage(i))) => {
                p.replay_membership(point, &Verdict::Refuted(*i))
            }
            (LevelCode::Union(c), Verdict::Proved(Witness::Child(k, w)))
            | (LevelCode::Intersection(c), Verdict::Refuted(Witness::Child(k, w))) => {
                let inner = if matches!(verdict, Verdict::Proved(_)) {
                    Verdict::Proved((**w).clone())
                } else {
                    Verdict::Refuted((**w).clone())
                };
                c.children
                    .get(*k)
                    .is_some_and(|child| child.replay_membership(point, &inner))
            }
            (LevelCode::Union(c), Verdict::Refuted(Witness::All(ws)))
            | (LevelCode::Intersection(c), Verdict::Proved(Witness::All(ws))) => {
                let proved = matches!(verdict, Verdict::Proved(_));
                ws.len() == c.children.len()
                    && c.children.iter().zip(ws).all(|(child, w)| {
                        let inner = if proved {
                            Verdict::Proved(w.clone())
                        } else {
                            Verdict::Refuted(w.clone())
                        };
                        child.replay_membership(point, &inner)
                    })
            }
            _ => false,
        }
    }

    /// A level-2 Π code over open children, as a [`Pi2Code`].
    pub fn as_pi2(&self) -> Option<Pi2Code> {
        let LevelCode::Intersection(c) = self else {
            return None;
        };
        let rows = c
            .children
            .iter()
            .map(|ch| match ch {
                LevelCode::Open(s) => Some(s.clone()),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()?;
        Some(if c.strict {
            Pi2Code::strict(rows).expect("strict flag was verified")
        } else {
            Pi2Code::new(rows)
        })
    }
}

impl From<Pi2Code> for LevelCode {
    fn from(code: Pi2Code) -> Self {
        let strict = code.strict;
        LevelCode::Intersection(Compound {
            level: 2,
            children: code.rows.into_iter().map(LevelCode::Open).collect(),
            strict,
        })
    }
}

fn check_children(level: usize, kind: LevelKind, children: &[LevelCode]) -> Result<()> {
    if level < 2 {
        return Err(Error::Malformed {
            what: "level code",
            detail: "compound codes start at level 2".into(),
        });
    }
    for (i, child) in children.iter().enumerate() {
        if child.level() != level - 1 || child.kind() != kind {
            return Err(Error::Malformed {
                what: "level code",
                detail: format!(
                    "child {i} is {:?} level {}, expected {:?} level {}",
                    child.kind(),
                    child.level(),
                    kind,
                    level - 1
                ),
            });
        }
    }
    Ok(())
}

/// Intersection semantics over the first `horizon` children; with
/// `dual = true` the child verdicts are flipped first, which gives the
/// union semantics after the caller flips the result back.
fn combine(children: &[LevelCode], point: &PointPrefix, horizon: usize, dual: bool) -> Verdict<Witness, Witness> {
    let considered = horizon.min(children.len());
    let mut all = Vec::with_capacity(considered);
    let mut undecided = None;
    for (k, child) in children[..considered].iter().enumerate() {
        let v = child.membership(point, horizon);
        let v = if dual {
            match v {
                Verdict::Proved(w) => Verdict::Refuted(w),
                Verdict::Refuted(w) => Verdict::Proved(w),
                u => u,
            }
        } else {
            v
        };
        match v {
            Verdict::Proved(w) => all.push(w),
            Verdict::Refuted(w) => return Verdict::Refuted(Witness::Child(k, Box::new(w))),
            Verdict::Unknown { horizon } => {
                undecided.get_or_insert(horizon);
            }
        }
    }
    match undecided {
        None if considered == children.len() => Verdict::Proved(Witness::All(all)),
        None => Verdict::Unknown { horizon: considered },
        Some(h) => Verdict::Unknown { horizon: h },
    }
}

/// A Π⁰₂ component of a Σ⁰₃ code certified to have measure above `δ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sigma3Component {
    pub child: usize,
    pub code: Pi2Code,
    pub rows: Vec<StageWitness>,
}

/// Scans the Π⁰₂ children of a strict Σ⁰₃ code in order and returns the
/// first one whose rows all certify measure above `δ`. Non-strict children
/// are strictified first. Refuted (with each child's failing row) when every
/// child refutes.
pub fn decompose_sigma3(code: &LevelCode, delta: &Rational) -> Result<Verdict<Sigma3Component, Vec<usize>>> {
    if code.level() != 3 || code.kind() != LevelKind::Sigma {
        return Err(Error::Malformed {
            what: "level code",
            detail: "expected a Σ⁰₃ code".into(),
        });
    }
    if !code.is_strict() {
        return Err(Error::NotStrict("Σ⁰₃ children do not increase".into()));
    }
    let mut refuted = Vec::new();
    let mut unknown = None;
    for (child, component) in code.children().iter().enumerate() {
        let pi2 = component.as_pi2().ok_or_else(|| Error::Malformed {
            what: "level code",
            detail: format!("child {child} is not a Π⁰₂ code over open rows"),
        })?;
        let pi2 = if pi2.is_strict() { pi2 } else { pi2.strictify() };
        match pi2.measure_gt(delta)? {
            Verdict::Proved(rows) => return Ok(Verdict::Proved(Sigma3Component { child, code: pi2, rows })),
            Verdict::Refuted(row) => refuted.push(row),
            Verdict::Unknown { horizon } => {
                unknown.get_or_insert(horizon);
            }
        }
    }
    Ok(match unknown {
        None => Verdict::Refuted(refuted),
        Some(horizon) => Verdict::Unknown { horizon },
    })
}
