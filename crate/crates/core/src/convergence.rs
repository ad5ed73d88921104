//! Convergence of simple-function sequences at a finite horizon.
//!
//! Every statement here quantifies over the recorded entries only. A
//! Refuted verdict means the property already fails inside the recorded
//! data; a genuine counterexample keeps failing at every horizon.

use num_traits::{Signed, Zero};

use crate::clopen::{dyadic, format_rational, BitString, ClopenSet, PointPrefix, Rational};
use crate::codes::{LevelCode, Pi2Code, PiCode, SigmaCode, StageWitness};
use crate::error::{Error, Result};
use crate::integration::{truncation_bound, L1Name, SimpleFunction, TruncationBound};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SimpleSequence {
    functions: Vec<SimpleFunction>,
}

impl SimpleSequence {
    pub fn new(functions: Vec<SimpleFunction>) -> Self {
        SimpleSequence { functions }
    }

    pub fn functions(&self) -> &[SimpleFunction] {
        &self.functions
    }

    pub fn horizon(&self) -> usize {
        self.functions.len()
    }

    /// Common refinement depth of all entries.
    pub fn depth(&self) -> usize {
        self.functions.iter().map(SimpleFunction::depth).max().unwrap_or(0)
    }

    pub fn integrals(&self) -> Vec<Rational> {
        self.functions.iter().map(SimpleFunction::integral).collect()
    }
}

impl FromIterator<SimpleFunction> for SimpleSequence {
    fn from_iter<I: IntoIterator<Item = SimpleFunction>>(iter: I) -> Self {
        SimpleSequence::new(iter.into_iter().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `|f_m(x)| > ε` for some later `m`.
    Convergence,
    /// `|f_m(x) − f_m'(x)| > ε` for some later `m, m'`.
    Cauchy,
}

fn require_positive(what: &'static str, value: &Rational) -> Result<()> {
    if value.is_positive() {
        Ok(())
    } else {
        Err(Error::Malformed {
            what,
            detail: format!("{} is not positive", format_rational(value)),
        })
    }
}

/// Points with an `ε`-violation among the entries `n..horizon`.
pub fn violation_set(seq: &SimpleSequence, n: usize, epsilon: &Rational, mode: Mode) -> Result<ClopenSet> {
    require_positive("epsilon", epsilon)?;
    if n >= seq.horizon() {
        return Err(Error::HorizonExceeded {
            requested: n,
            recorded: seq.horizon(),
        });
    }
    let tail = &seq.functions[n..];
    let depth = tail.iter().map(SimpleFunction::depth).max().unwrap_or(0);
    let columns: Vec<Vec<Rational>> = tail.iter().map(|f| f.refine(depth)).collect();
    let cells = (0..1usize << depth).filter(|&c| {
        let values = columns.iter().map(|col| &col[c]);
        match mode {
            Mode::Convergence => values.clone().any(|v| &v.abs() > epsilon),
            Mode::Cauchy => {
                let max = values.clone().max().expect("nonempty tail");
                let min = values.min().expect("nonempty tail");
                &(max - min) > epsilon
            }
        }
    });
    Ok(ClopenSet::normalize(
        cells.map(|c| BitString::from_index(c as u64, depth)),
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EgorovCertificate {
    pub epsilon: Rational,
    pub lambda: Rational,
    pub mode: Mode,
    pub n: usize,
    pub residual: ClopenSet,
    pub measure: Rational,
}

impl EgorovCertificate {
    /// Recomputes the residual, its measure, the minimality of `n`, and the
    /// pointwise bound outside the residual at the sequence depth.
    pub fn verify(&self, seq: &SimpleSequence) -> Result<()> {
        let fail = |msg: &str| Err(Error::CertificationFailure(msg.into()));
        if seq.horizon() == 0 {
            return if self.residual.is_empty() {
                Ok(())
            } else {
                fail("empty sequence has no violations")
            };
        }
        let residual = violation_set(seq, self.n, &self.epsilon, self.mode)?;
        if residual != self.residual || residual.measure() != self.measure || self.measure >= self.lambda {
            return fail("residual does not reproduce");
        }
        if self.n > 0 && violation_set(seq, self.n - 1, &self.epsilon, self.mode)?.measure() < self.lambda {
            return fail("an earlier index already works");
        }
        let depth = seq.depth();
        for cell in BitString::all_of_length(depth) {
            if self.residual.contains_cylinder(&cell) {
                continue;
            }
            let values: Vec<Rational> = seq.functions[self.n..].iter().map(|f| f.value_on(&cell)).collect();
            let ok = match self.mode {
                Mode::Convergence => values.iter().all(|v| v.abs() <= self.epsilon),
                Mode::Cauchy => values.iter().max().unwrap() - values.iter().min().unwrap() <= self.epsilon,
            };
            if !ok {
                return fail("a point outside the residual violates the bound");
            }
        }
        Ok(())
    }
}

/// The least `n` whose violation set has measure below `λ`; Refuted with
/// the last violation set when none does.
pub fn egorov_witness(
    seq: &SimpleSequence,
    epsilon: &Rational,
    lambda: &Rational,
    mode: Mode,
) -> Result<Verdict<EgorovCertificate, ClopenSet>> {
    require_positive("epsilon", epsilon)?;
    require_positive("lambda", lambda)?;
    let certificate = |n, residual: ClopenSet| EgorovCertificate {
        epsilon: epsilon.clone(),
        lambda: lambda.clone(),
        mode,
        n,
        measure: residual.measure(),
        residual,
    };
    if seq.horizon() == 0 {
        return Ok(Verdict::Proved(certificate(0, ClopenSet::empty())));
    }
    let mut last = ClopenSet::empty();
    for n in 0..seq.horizon() {
        let residual = violation_set(seq, n, epsilon, mode)?;
        if &residual.measure() < lambda {
            return Ok(Verdict::Proved(certificate(n, residual)));
        }
        last = residual;
    }
    Ok(Verdict::Refuted(last))
}

/// Dominating function of a [`dct_check`].
#[derive(Clone, Copy, Debug)]
pub enum Dominator<'a> {
    Constant(&'a Rational),
    Name(&'a L1Name),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DominatorCertificate {
    Constant(Rational),
    Name {
        /// Entry of the name that dominates every function cellwise.
        entry: usize,
        truncation: TruncationBound,
    },
}

/// `∫f = ∫min(f, t) + ∫(max(f, t) − t)` for one entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DctTerm {
    pub index: usize,
    pub integral: Rational,
    /// `∫min(f^K, t)`, at most `t`.
    pub lower: Rational,
    /// `∫(max(f^K, t) − t)`, below `t`.
    pub upper: Rational,
    /// `∫(f − f^K)`; zero for a constant dominator.
    pub truncation_gap: Rational,
    /// Support of the upper summand.
    pub support: ClopenSet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DctCertificate {
    pub epsilon: Rational,
    /// Threshold `t` of the decomposition.
    pub threshold: Rational,
    pub m: usize,
    pub dominator: DominatorCertificate,
    pub terms: Vec<DctTerm>,
}

fn truncation_level(dominator: &DominatorCertificate) -> Option<Rational> {
    match dominator {
        DominatorCertificate::Constant(_) => None,
        DominatorCertificate::Name { truncation, .. } => Some(truncation.k_rational()),
    }
}

fn dct_term(index: usize, f: &SimpleFunction, threshold: &Rational, k: Option<&Rational>) -> DctTerm {
    let truncated = k.map_or_else(|| f.clone(), |k| f.truncate(k));
    let shifted = truncated
        .max_const(threshold)
        .sub(&SimpleFunction::constant(threshold.clone()));
    DctTerm {
        index,
        integral: f.integral(),
        lower: truncated.min_const(threshold).integral(),
        upper: shifted.integral(),
        truncation_gap: f.sub(&truncated).integral(),
        support: f.set_where(|v| v > threshold),
    }
}

impl DctTerm {
    /// `∫min ≤ t`, `∫(max − t) < t`, and with a name dominator the gap
    /// `∫(f − f^K)` stays below `ε/2`.
    fn certified(&self, threshold: &Rational, gap_bound: Option<&Rational>) -> bool {
        &self.lower <= threshold
            && &self.upper < threshold
            && gap_bound.map_or(self.truncation_gap.is_zero(), |b| &self.truncation_gap < b)
    }
}

impl DctCertificate {
    fn gap_bound(&self) -> Option<Rational> {
        match self.dominator {
            DominatorCertificate::Constant(_) => None,
            DominatorCertificate::Name { .. } => Some(&self.epsilon * dyadic(1)),
        }
    }

    /// Recomputes every term and rechecks the decomposition inequalities,
    /// and that the upper summand lives on the violation set `{f > t}`.
    pub fn verify(&self, seq: &SimpleSequence) -> bool {
        let k = truncation_level(&self.dominator);
        let gap_bound = self.gap_bound();
        let expected: Vec<DctTerm> = (self.m..seq.horizon())
            .map(|n| dct_term(n, &seq.functions[n], &self.threshold, k.as_ref()))
            .collect();
        expected == self.terms
            && self.terms.iter().all(|t| {
                let f = &seq.functions[t.index];
                let single = SimpleSequence::new(vec![f.clone()]);
                t.certified(&self.threshold, gap_bound.as_ref())
                    && t.integral < self.epsilon
                    && violation_set(&single, 0, &self.threshold, Mode::Convergence)
                        .ok()
                        .as_ref()
                        == Some(&t.support)
            })
    }
}

/// Certified integral convergence for a nonnegative dominated sequence.
///
/// With a constant bound `K` and threshold `t = ε/2`, entry `n` is
/// certified when `∫(max(f_n, t) − t) < t`; then `∫f_n < ε` because the
/// other summand `∫min(f_n, t)` is at most `t`. With a name `g`, the bound
/// is `K` from [`truncation_bound`] at `ε/2`, the decomposition runs on
/// `f_n^K` with `t = ε/4`, and the gap `∫(f_n − f_n^K)` must stay below
/// `ε/2`. Proved with the least `m` such that every entry in `m..horizon`
/// is certified; Refuted when the last entry already has `∫f ≥ ε`.
pub fn dct_check(
    seq: &SimpleSequence,
    dominator: Dominator<'_>,
    epsilon: &Rational,
) -> Result<Verdict<DctCertificate, DctRefutation>> {
    require_positive("epsilon", epsilon)?;
    if let Some(index) = seq.functions.iter().position(|f| !f.is_nonnegative()) {
        return Err(Error::Negative { index });
    }
    let half = epsilon * dyadic(1);
    let (dominator, threshold) = match dominator {
        Dominator::Constant(k) => {
            let bound = SimpleFunction::constant(k.clone());
            if let Some(index) = seq.functions.iter().position(|f| !f.le(&bound)) {
                return Err(Error::DominationViolated { index });
            }
            (DominatorCertificate::Constant(k.clone()), half.clone())
        }
        Dominator::Name(g) => {
            let truncation = truncation_bound(g, &half)?;
            let entry = truncation.entry;
            let bound = &g.entries()[entry];
            if let Some(index) = seq.functions.iter().position(|f| !f.le(bound)) {
                return Err(Error::DominationViolated { index });
            }
            (DominatorCertificate::Name { entry, truncation }, epsilon * dyadic(2))
        }
    };
    let k = truncation_level(&dominator);
    let terms: Vec<DctTerm> = seq
        .functions
        .iter()
        .enumerate()
        .map(|(n, f)| dct_term(n, f, &threshold, k.as_ref()))
        .collect();
    let gap_bound = match dominator {
        DominatorCertificate::Constant(_) => None,
        DominatorCertificate::Name { .. } => Some(&half),
    };
    let m = terms
        .iter()
        .rposition(|t| !t.certified(&threshold, gap_bound))
        .map_or(0, |p| p + 1);
    if m < seq.horizon() || seq.horizon() == 0 {
        return Ok(Verdict::Proved(DctCertificate {
            epsilon: epsilon.clone(),
            threshold,
            m,
            dominator,
            terms: terms[m..].to_vec(),
        }));
    }
    let last = terms.last().expect("nonempty sequence");
    if &last.integral >= epsilon {
        Ok(Verdict::Refuted(DctRefutation {
            index: last.index,
            integral: last.integral.clone(),
        }))
    } else {
        Ok(Verdict::Unknown { horizon: seq.horizon() })
    }
}

/// The last recorded entry has integral at least `ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DctRefutation {
    pub index: usize,
    pub integral: Rational,
}

/// Indicator sequence of the truncated rows of a strict Π⁰₂ code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub delta: Rational,
    pub sequence: SimpleSequence,
    pub levels: Vec<StageWitness>,
}

impl Counterexample {
    /// Checks `∫f_i > δ` for every `i`, and that every depth-`depth` point
    /// decided outside row `i` has `f_j = 0` for all `j ≥ i`.
    pub fn verify(&self, code: &Pi2Code, depth: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::CertificationFailure(msg));
        if self.sequence.horizon() != code.rows().len() {
            return fail("one function per row expected".into());
        }
        for (i, f) in self.sequence.functions.iter().enumerate() {
            if f.integral() <= self.delta || *f != SimpleFunction::indicator(&self.levels[i].union) {
                return fail(format!("function {i} does not exceed {}", format_rational(&self.delta)));
            }
        }
        let depth = depth.max(code.max_cylinder_len()).max(self.sequence.depth());
        for cell in BitString::all_of_length(depth) {
            let point = PointPrefix::new(cell.clone());
            for (i, row) in code.rows().iter().enumerate() {
                if !row.membership(&point, usize::MAX).is_refuted() {
                    continue;
                }
                for (j, f) in self.sequence.functions.iter().enumerate().skip(i) {
                    if !f.value_on(&cell).is_zero() {
                        return fail(format!("f_{j} is nonzero at {cell} outside row {i}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `f_i = 1_{G'_i}` where `G'_i` is row `i` truncated at the least stage
/// with measure above `δ`.
pub fn counterexample_from_gdelta(code: &Pi2Code, delta: &Rational, depth: usize) -> Result<Counterexample> {
    let levels = code.truncate_levels(delta)?;
    let sequence = levels.iter().map(|l| SimpleFunction::indicator(&l.union)).collect();
    let out = Counterexample {
        delta: delta.clone(),
        sequence,
        levels,
    };
    out.verify(code, depth)?;
    Ok(out)
}

/// `f'_{2n} = f_n`, `f'_{2n+1} = f_n / 2`, with the integral gap of each
/// pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interleaved {
    pub sequence: SimpleSequence,
    pub gaps: Vec<Rational>,
}

impl Interleaved {
    pub fn verify(&self, source: &SimpleSequence) -> bool {
        let integrals = self.sequence.integrals();
        self.sequence.horizon() == 2 * source.horizon()
            && self.gaps.len() == source.horizon()
            && source.functions.iter().enumerate().all(|(n, f)| {
                self.sequence.functions[2 * n] == *f
                    && self.sequence.functions[2 * n + 1] == f.scale(&dyadic(1))
                    && self.gaps[n] == (&integrals[2 * n] - &integrals[2 * n + 1]).abs()
                    && self.gaps[n] == f.integral().abs() * dyadic(1)
            })
    }
}

pub fn interleave_cauchy(seq: &SimpleSequence) -> Interleaved {
    let half = dyadic(1);
    let sequence: SimpleSequence = seq.functions.iter().flat_map(|f| [f.clone(), f.scale(&half)]).collect();
    let gaps = seq.functions.iter().map(|f| f.integral().abs() * &half).collect();
    Interleaved { sequence, gaps }
}

/// Integrals `∫f_n` for `n ≥ m` stay within `ε` of each other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralCauchy {
    pub m: usize,
    pub spread: Rational,
}

/// The least `m` (leaving at least two entries) whose tail integrals
/// spread less than `ε`; Refuted with the last pair when even it differs by
/// `ε` or more.
pub fn integral_cauchy(seq: &SimpleSequence, epsilon: &Rational) -> Result<Verdict<IntegralCauchy, (usize, usize)>> {
    require_positive("epsilon", epsilon)?;
    let integrals = seq.integrals();
    let h = integrals.len();
    if h < 2 {
        return Ok(Verdict::Proved(IntegralCauchy {
            m: 0,
            spread: Rational::zero(),
        }));
    }
    for m in 0..h - 1 {
        let tail = &integrals[m..];
        let spread = tail.iter().max().unwrap() - tail.iter().min().unwrap();
        if &spread < epsilon {
            return Ok(Verdict::Proved(IntegralCauchy { m, spread }));
        }
    }
    Ok(Verdict::Refuted((h - 2, h - 1)))
}

/// What a sequence is checked to converge to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Cauchy,
    Limit(SimpleFunction),
}

/// Points where `|g_n(x) − g_m(x)| > ε` (Cauchy) or `|g_n(x)| > ε` (limit
/// target already subtracted) for some `n` in `m+1..horizon`.
fn tail_violation(seq: &[SimpleFunction], m: usize, epsilon: &Rational, cauchy: bool) -> ClopenSet {
    let tail = &seq[m + 1..];
    let depth = seq[m..].iter().map(SimpleFunction::depth).max().unwrap_or(0);
    let reference = seq[m].refine(depth);
    let columns: Vec<Vec<Rational>> = tail.iter().map(|f| f.refine(depth)).collect();
    ClopenSet::normalize((0..1usize << depth).filter_map(|c| {
        let violated = columns.iter().any(|col| {
            let diff = if cauchy {
                &col[c] - &reference[c]
            } else {
                col[c].clone()
            };
            &diff.abs() > epsilon
        });
        violated.then(|| BitString::from_index(c as u64, depth))
    }))
}

/// Π⁰₃ code of `{x : ∀k ∃m ∀n > m |g_n(x) − g_m(x)| ≤ 2⁻ᵏ}` (or `|g_n(x)| ≤ 2⁻ᵏ`
/// after subtracting a limit target), with `k ≤ horizon` and
/// `m < n < horizon`. The index `m = horizon − 1`, whose inner range is
/// empty, is left out so every disjunct carries data.
pub fn convergence_set(seq: &SimpleSequence, target: &Target) -> LevelCode {
    let (functions, cauchy): (Vec<SimpleFunction>, bool) = match target {
        Target::Cauchy => (seq.functions.clone(), true),
        Target::Limit(f) => (seq.functions.iter().map(|g| g.sub(f)).collect(), false),
    };
    let h = functions.len();
    let children = (0..=h)
        .map(|k| {
            let epsilon = dyadic(k);
            let closed = (0..h.saturating_sub(1))
                .map(|m| {
                    let bad = tail_violation(&functions, m, &epsilon, cauchy);
                    LevelCode::Closed(PiCode::new(SigmaCode::from_clopen(&bad)))
                })
                .collect();
            LevelCode::union(2, closed).expect("closed children")
        })
        .collect();
    LevelCode::intersection(3, children).expect("Σ⁰₂ children")
}
