//! Simple functions and L¹ names.
//!
//! A [`SimpleFunction`] stores one coefficient per cell at a common depth
//! `d`, with `d` as small as possible. That makes the representation
//! canonical: two simple functions are equal exactly when they agree at
//! every point.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::clopen::{dyadic, format_rational, BitString, ClopenSet, PointPrefix, Rational};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SimpleFunction {
    depth: usize,
    cells: Vec<Rational>,
}

impl SimpleFunction {
    /// Canonical form of `Σ a_i · 1_[σ_i]`.
    pub fn from_terms<'a>(terms: impl IntoIterator<Item = (Rational, &'a BitString)>) -> Self {
        let terms: Vec<(Rational, &BitString)> = terms.into_iter().collect();
        let depth = terms.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
        let mut cells = vec![Rational::zero(); 1 << depth];
        for (coefficient, sigma) in terms {
            let width = 1usize << (depth - sigma.len());
            let start = sigma.to_index() as usize * width;
            for cell in &mut cells[start..start + width] {
                *cell += &coefficient;
            }
        }
        SimpleFunction::from_cells(depth, cells)
    }

    /// Canonical form of the function taking `cells[k]` on the `k`-th
    /// depth-`depth` cylinder (in lexicographic order).
    pub fn from_cells(mut depth: usize, mut cells: Vec<Rational>) -> Self {
        assert_eq!(cells.len(), 1 << depth, "cell count must be 2^depth");
        while depth > 0 && cells.chunks(2).all(|pair| pair[0] == pair[1]) {
            cells = cells.chunks(2).map(|pair| pair[0].clone()).collect();
            depth -= 1;
        }
        SimpleFunction { depth, cells }
    }

    pub fn constant(value: Rational) -> Self {
        SimpleFunction {
            depth: 0,
            cells: vec![value],
        }
    }

    pub fn zero() -> Self {
        SimpleFunction::constant(Rational::zero())
    }

    pub fn indicator(set: &ClopenSet) -> Self {
        SimpleFunction::from_terms(set.generators().map(|g| (Rational::one(), g)))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cells(&self) -> &[Rational] {
        &self.cells
    }

    /// `(coefficient, cylinder)` for every cell, zeros included.
    pub fn terms(&self) -> Vec<(Rational, BitString)> {
        self.cells
            .iter()
            .enumerate()
            .map(|(k, c)| (c.clone(), BitString::from_index(k as u64, self.depth)))
            .collect()
    }

    /// Cell values at a depth at least the canonical one.
    pub fn refine(&self, depth: usize) -> Vec<Rational> {
        assert!(depth >= self.depth, "cannot refine to a coarser depth");
        let width = 1usize << (depth - self.depth);
        self.cells
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.clone(), width))
            .collect()
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        SimpleFunction::from_cells(self.depth, self.cells.iter().map(f).collect())
    }

    pub fn zip_with(&self, other: &SimpleFunction, f: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let depth = self.depth.max(other.depth);
        let cells = self
            .refine(depth)
            .iter()
            .zip(other.refine(depth).iter())
            .map(|(a, b)| f(a, b))
            .collect();
        SimpleFunction::from_cells(depth, cells)
    }

    pub fn add(&self, other: &SimpleFunction) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SimpleFunction) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map(|a| a * c)
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a)
    }

    pub fn abs(&self) -> Self {
        self.map(Signed::abs)
    }

    pub fn min(&self, other: &SimpleFunction) -> Self {
        self.zip_with(other, |a, b| a.min(b).clone())
    }

    pub fn max(&self, other: &SimpleFunction) -> Self {
        self.zip_with(other, |a, b| a.max(b).clone())
    }

    pub fn min_const(&self, k: &Rational) -> Self {
        self.map(|a| a.min(k).clone())
    }

    pub fn max_const(&self, k: &Rational) -> Self {
        self.map(|a| a.max(k).clone())
    }

    /// `f^K = min(f, K)`.
    pub fn truncate(&self, k: &Rational) -> Self {
        self.min_const(k)
    }

    pub fn integral(&self) -> Rational {
        self.cells.iter().sum::<Rational>() * dyadic(self.depth)
    }

    pub fn l1_norm(&self) -> Rational {
        self.cells.iter().map(Signed::abs).sum::<Rational>() * dyadic(self.depth)
    }

    pub fn eval(&self, point: &PointPrefix) -> Result<Rational> {
        let cell = point.truncate(self.depth).map_err(|_| Error::InsufficientPrecision {
            required: self.depth,
            given: point.len(),
        })?;
        Ok(self.cells[cell.to_index() as usize].clone())
    }

    /// Value on the cylinder `[σ]` for `|σ| ≥ depth`.
    pub fn value_on(&self, sigma: &BitString) -> Rational {
        assert!(sigma.len() >= self.depth, "cylinder shorter than the function depth");
        self.cells[sigma.prefix(self.depth).to_index() as usize].clone()
    }

    /// The clopen set of points whose value satisfies `keep`.
    pub fn set_where(&self, keep: impl Fn(&Rational) -> bool) -> ClopenSet {
        ClopenSet::normalize(
            self.cells
                .iter()
                .enumerate()
                .filter(|(_, c)| keep(c))
                .map(|(k, _)| BitString::from_index(k as u64, self.depth)),
        )
    }

    pub fn max_coefficient(&self) -> Rational {
        self.cells.iter().max().expect("at least one cell").clone()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.cells.iter().all(|c| !c.is_negative())
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &SimpleFunction) -> bool {
        let depth = self.depth.max(other.depth);
        self.refine(depth)
            .iter()
            .zip(other.refine(depth).iter())
            .all(|(a, b)| a <= b)
    }
}

impl fmt::Debug for SimpleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SimpleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, (c, s)) in self.terms().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, \"{s}\")", format_rational(c))?;
        }
        f.write_str("]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PointwiseOp {
    Add,
    Sub,
    Scale(Rational),
    MinConst(Rational),
    MaxConst(Rational),
    Min,
    Max,
    Abs,
    Truncate(Rational),
}

impl PointwiseOp {
    pub fn is_binary(&self) -> bool {
        matches!(
            self,
            PointwiseOp::Add | PointwiseOp::Sub | PointwiseOp::Min | PointwiseOp::Max
        )
    }
}

pub fn pointwise(op: &PointwiseOp, f: &SimpleFunction, g: Option<&SimpleFunction>) -> Result<SimpleFunction> {
    if op.is_binary() != g.is_some() {
        return Err(Error::Malformed {
            what: "pointwise operation",
            detail: format!("{op:?} takes {} operands", if op.is_binary() { 2 } else { 1 }),
        });
    }
    Ok(match (op, g) {
        (PointwiseOp::Add, Some(g)) => f.add(g),
        (PointwiseOp::Sub, Some(g)) => f.sub(g),
        (PointwiseOp::Min, Some(g)) => f.min(g),
        (PointwiseOp::Max, Some(g)) => f.max(g),
        (PointwiseOp::Scale(c), None) => f.scale(c),
        (PointwiseOp::MinConst(k), None) => f.min_const(k),
        (PointwiseOp::MaxConst(k), None) => f.max_const(k),
        (PointwiseOp::Truncate(k), None) => f.truncate(k),
        (PointwiseOp::Abs, None) => f.abs(),
        _ => unreachable!("arity checked above"),
    })
}

/// A finite Cauchy name `(f_i)` with `‖f_i − f_j‖₁ < 2⁻ⁱ` for `i ≤ j`.
///
/// A `stationary` name declares that its last entry is the limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Name {
    entries: Vec<SimpleFunction>,
    stationary: bool,
    modulus_verified: bool,
}

impl L1Name {
    /// Records the entries and checks the modulus on every recorded pair.
    pub fn new(entries: Vec<SimpleFunction>, stationary: bool) -> Self {
        let mut name = L1Name {
            entries,
            stationary,
            modulus_verified: false,
        };
        name.modulus_verified = validate_name(&name).is_proved();
        name
    }

    pub fn stationary(entry: SimpleFunction) -> Self {
        L1Name::new(vec![entry], true)
    }

    pub fn entries(&self) -> &[SimpleFunction] {
        &self.entries
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn is_verified(&self) -> bool {
        self.modulus_verified
    }

    fn require_verified(&self) -> Result<()> {
        if self.modulus_verified {
            Ok(())
        } else {
            Err(Error::ValidationMissing("L¹ name"))
        }
    }
}

/// Proved when every recorded pair `i < j` satisfies the modulus; Refuted
/// with the first failing pair otherwise.
pub fn validate_name(name: &L1Name) -> Verdict<(), (usize, usize)> {
    for (i, fi) in name.entries.iter().enumerate() {
        for (j, fj) in name.entries.iter().enumerate().skip(i + 1) {
            if fi.sub(fj).l1_norm() >= dyadic(i) {
                return Verdict::Refuted((i, j));
            }
        }
    }
    Verdict::Proved(())
}

/// The `i`-th approximation at a point, within `radius` of the limit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NameValue {
    pub index: usize,
    pub value: Rational,
    pub radius: Rational,
}

pub fn name_eval(name: &L1Name, point: &PointPrefix, i: usize) -> Result<NameValue> {
    name.require_verified()?;
    let entry = name.entries.get(i).ok_or(Error::HorizonExceeded {
        requested: i,
        recorded: name.entries.len(),
    })?;
    Ok(NameValue {
        index: i,
        value: entry.eval(point)?,
        radius: dyadic(i) * Rational::from_integer(2.into()),
    })
}

/// Certificate for the integer `K` with `∫(g − g^K) < ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationBound {
    pub epsilon: Rational,
    /// Index of the entry `g_n` used.
    pub entry: usize,
    /// `‖g − g_n‖` bound: `2⁻ⁿ`, or 0 from a stationary tail.
    pub entry_error: Rational,
    pub k: BigInt,
    /// `‖g_last − g_last^K‖`, the desk-scale surrogate for `∫(g − g^K)`.
    pub residual: Rational,
}

impl TruncationBound {
    pub fn k_rational(&self) -> Rational {
        Rational::from_integer(self.k.clone())
    }

    pub fn verify(&self, name: &L1Name) -> bool {
        let Some(entry) = name.entries.get(self.entry) else {
            return false;
        };
        let last = name.entries.last().expect("entry exists");
        let k = self.k_rational();
        let residual = last.sub(&last.truncate(&k)).l1_norm();
        entry.max_coefficient().ceil() == k
            && residual == self.residual
            && residual < self.epsilon
            && self.entry_error < self.epsilon
    }
}

/// `K = ⌈max g_n⌉` for an entry `g_n` within `ε` of the limit.
///
/// Stationary names use the first entry from which the recorded tail is
/// constant; other names use the least `n` with `2⁻ⁿ < ε`.
pub fn truncation_bound(name: &L1Name, epsilon: &Rational) -> Result<TruncationBound> {
    if !epsilon.is_positive() {
        return Err(Error::Malformed {
            what: "epsilon",
            detail: format!("{} is not positive", format_rational(epsilon)),
        });
    }
    name.require_verified()?;
    if let Some(index) = name.entries.iter().position(|e| !e.is_nonnegative()) {
        return Err(Error::Negative { index });
    }
    let last = name
        .entries
        .last()
        .ok_or_else(|| Error::HorizonTooShort(format_rational(epsilon)))?;
    let (entry, entry_error) = if name.stationary {
        let n = name.entries.iter().rposition(|e| e != last).map_or(0, |p| p + 1);
        (n, Rational::zero())
    } else {
        let n = (0..name.entries.len())
            .find(|&n| &dyadic(n) < epsilon)
            .ok_or_else(|| Error::HorizonTooShort(format_rational(epsilon)))?;
        (n, dyadic(n))
    };
    let k = name.entries[entry].max_coefficient().ceil().to_integer();
    let residual = last.sub(&last.truncate(&Rational::from_integer(k.clone()))).l1_norm();
    let bound = TruncationBound {
        epsilon: epsilon.clone(),
        entry,
        entry_error,
        k,
        residual,
    };
    if !bound.verify(name) {
        return Err(Error::CertificationFailure(format!(
            "truncation at {} leaves {}",
            bound.k,
            format_rational(&bound.residual)
        )));
    }
    Ok(bound)
}

/// The entries themselves: each is within `2⁻ⁱ` of the limit in L¹.
pub fn simplify_name(name: &L1Name) -> Result<Vec<SimpleFunction>> {
    name.require_verified()?;
    Ok(name.entries.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clopen::{bs, integer, ratio, set};

    fn sf(terms: &[(i64, i64, &str)]) -> SimpleFunction {
        let strings: Vec<BitString> = terms.iter().map(|t| bs(t.2)).collect();
        SimpleFunction::from_terms(terms.iter().zip(&strings).map(|(t, s)| (ratio(t.0, t.1), s)))
    }

    fn ind(s: &str) -> SimpleFunction {
        sf(&[(1, 1, s)])
    }

    fn pt(s: &str) -> PointPrefix {
        PointPrefix::new(bs(s))
    }

    #[test]
    fn canonicalize_examples() {
        let f = sf(&[(1, 1, "0"), (1, 1, "0")]);
        assert_eq!(f.terms(), vec![(integer(2), bs("0")), (integer(0), bs("1"))]);
        assert_eq!(sf(&[(1, 1, "")]).terms(), vec![(integer(1), bs(""))]);
        let f = sf(&[(1, 1, "0"), (-1, 1, "01")]);
        assert_eq!(f.depth(), 2);
        assert_eq!(f.cells(), &[integer(1), integer(0), integer(0), integer(0)]);
        // Cells that agree on siblings coarsen away.
        assert_eq!(sf(&[(1, 1, "00"), (1, 1, "01")]), ind("0"));
    }

    #[test]
    fn integral_and_norm_examples() {
        assert_eq!(ind("0").integral(), ratio(1, 2));
        assert_eq!(sf(&[(2, 1, "00"), (1, 1, "1")]).integral(), integer(1));
        assert_eq!(SimpleFunction::zero().integral(), integer(0));
        assert_eq!(ind("0").sub(&ind("1")).l1_norm(), integer(1));
        let f = sf(&[(3, 1, "10"), (-1, 2, "0")]);
        assert_eq!(f.sub(&f).l1_norm(), integer(0));
        assert_eq!(sf(&[(-3, 1, "01")]).l1_norm(), ratio(3, 4));
    }

    #[test]
    fn pointwise_examples() {
        let f = ind("0");
        let half = ratio(1, 2);
        assert_eq!(
            pointwise(&PointwiseOp::MinConst(half.clone()), &f, None).unwrap(),
            sf(&[(1, 2, "0")])
        );
        let lhs = f.min_const(&half).add(&f.max_const(&half));
        assert_eq!(lhs, f.add(&SimpleFunction::constant(half)));
        assert_eq!(
            pointwise(&PointwiseOp::Add, &ind("0"), Some(&ind("1"))).unwrap(),
            SimpleFunction::constant(integer(1))
        );
        assert!(pointwise(&PointwiseOp::Add, &f, None).is_err());
        assert!(pointwise(&PointwiseOp::Abs, &f, Some(&f)).is_err());
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ind("0").eval(&pt("01")).unwrap(), integer(1));
        assert_eq!(ind("0").eval(&pt("1")).unwrap(), integer(0));
        assert_eq!(sf(&[(2, 1, "00"), (1, 1, "1")]).eval(&pt("00")).unwrap(), integer(2));
        assert_eq!(
            ind("01").eval(&pt("0")),
            Err(Error::InsufficientPrecision { required: 2, given: 1 })
        );
    }

    fn geometric(len: usize) -> L1Name {
        let entries = (0..len)
            .map(|i| SimpleFunction::indicator(&set(&["0"])).scale(&(integer(1) - dyadic(i + 1))))
            .collect();
        L1Name::new(entries, false)
    }

    #[test]
    fn validate_name_examples() {
        let constant = L1Name::new(vec![ind("0"); 4], false);
        assert!(validate_name(&constant).is_proved());
        assert!(validate_name(&geometric(6)).is_proved());
        let bad = L1Name::new(
            vec![SimpleFunction::zero(), SimpleFunction::constant(integer(1))],
            false,
        );
        assert_eq!(validate_name(&bad), Verdict::Refuted((0, 1)));
        assert!(!bad.is_verified());
    }

    #[test]
    fn name_eval_examples() {
        let stationary = L1Name::new(vec![ind("0"); 4], true);
        assert_eq!(name_eval(&stationary, &pt("0"), 3).unwrap().value, integer(1));
        let g = geometric(4);
        let v = name_eval(&g, &pt("0"), 2).unwrap();
        assert_eq!((v.value, v.radius), (ratio(7, 8), ratio(1, 2)));
        assert_eq!(name_eval(&g, &pt("1"), 2).unwrap().value, integer(0));
        let bad = L1Name::new(
            vec![SimpleFunction::zero(), SimpleFunction::constant(integer(1))],
            false,
        );
        assert_eq!(name_eval(&bad, &pt("0"), 0), Err(Error::ValidationMissing("L¹ name")));
    }

    #[test]
    fn truncation_bound_examples() {
        let b = truncation_bound(&L1Name::stationary(ind("0")), &ratio(1, 4)).unwrap();
        assert_eq!((b.k.clone(), b.residual.clone()), (BigInt::from(1), integer(0)));
        let g = L1Name::stationary(sf(&[(3, 1, "00")]));
        assert_eq!(truncation_bound(&g, &ratio(1, 8)).unwrap().k, BigInt::from(3));
        let g = L1Name::new(
            vec![
                SimpleFunction::constant(ratio(3, 2)),
                SimpleFunction::constant(integer(2)),
                SimpleFunction::constant(integer(2)),
            ],
            true,
        );
        let b = truncation_bound(&g, &ratio(1, 2)).unwrap();
        assert_eq!((b.entry, b.k.clone()), (1, BigInt::from(2)));

        let b = truncation_bound(&geometric(6), &ratio(1, 8)).unwrap();
        assert_eq!((b.entry, b.k.clone()), (4, BigInt::from(1)));
        assert!(b.verify(&geometric(6)));
        assert!(matches!(
            truncation_bound(&geometric(2), &ratio(1, 8)),
            Err(Error::HorizonTooShort(_))
        ));
        let negative = L1Name::stationary(sf(&[(-1, 1, "0")]));
        assert_eq!(
            truncation_bound(&negative, &ratio(1, 2)),
            Err(Error::Negative { index: 0 })
        );
    }

    #[test]
    fn simplify_name_examples() {
        let stationary = L1Name::stationary(ind("0"));
        assert_eq!(simplify_name(&stationary).unwrap(), vec![ind("0")]);
        let a = simplify_name(&geometric(5)).unwrap();
        let b: Vec<_> = (0..5)
            .map(|i| SimpleFunction::indicator(&set(&["0"])).scale(&(integer(1) - dyadic(i + 2))))
            .collect();
        let other = L1Name::new(b, false);
        let b = simplify_name(&other).unwrap();
        for (i, fa) in a.iter().enumerate() {
            for (j, fb) in b.iter().enumerate() {
                assert!(fa.sub(fb).l1_norm() < dyadic(i) + dyadic(j));
            }
        }
    }
}
