//! Exact rationals, finite bit strings and the Boolean algebra of clopen
//! subsets of Cantor space under the coin-flipping measure.
//!
//! A clopen set is stored as a canonical antichain of cylinder generators:
//! no generator is a prefix of another and no two siblings `s0`, `s1` both
//! occur. Canonical form is unique for each extensional set, so equality of
//! [`ClopenSet`] values is equality of the sets they denote.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational, always kept in lowest terms.
pub type Rational = BigRational;

/// `numerator / denominator` as an exact rational.
///
/// Panics if `denominator` is zero.
pub fn ratio(numerator: i64, denominator: i64) -> Rational {
    Rational::new(BigInt::from(numerator), BigInt::from(denominator))
}

pub fn integer(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `2^-k`.
pub fn dyadic(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

/// True when the denominator (in lowest terms) is a power of two.
pub fn is_dyadic(value: &Rational) -> bool {
    let d = value.denom();
    let bits = d.bits();
    bits > 0 && (d.clone() & (d.clone() - BigInt::one())).is_zero()
}

/// Serializes a rational as `p/q` in lowest terms, including integers
/// (`1/1`, `0/1`).
pub fn format_rational(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let malformed = |detail: &str| Error::Malformed {
        what: "rational",
        detail: format!("{text:?}: {detail}"),
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| malformed("bad numerator"))?;
    let den: BigInt = den.parse().map_err(|_| malformed("bad denominator"))?;
    if den.is_zero() {
        return Err(malformed("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// A finite binary string. The empty string names the whole space.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn empty() -> Self {
        BitString(Vec::new())
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>) -> Self {
        BitString(bits.into_iter().collect())
    }

    /// Big-endian: the first bit is the most significant bit of `value`.
    pub fn from_index(value: u64, len: usize) -> Self {
        BitString((0..len).map(|i| (value >> (len - 1 - i)) & 1 == 1).collect())
    }

    /// Inverse of [`BitString::from_index`]. Panics above 64 bits.
    pub fn to_index(&self) -> u64 {
        assert!(self.0.len() <= 64, "bit string too long for a cell index");
        self.0.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    /// Every string of length `len`, in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "enumeration depth too large");
        (0..(1u64 << len)).map(move |v| BitString::from_index(v, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.0.get(i).copied()
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut bits = self.0.clone();
        bits.push(bit);
        BitString(bits)
    }

    pub fn parent(&self) -> Option<BitString> {
        if self.0.is_empty() {
            None
        } else {
            Some(BitString(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn sibling(&self) -> Option<BitString> {
        let last = *self.0.last()?;
        let mut bits = self.0.clone();
        *bits.last_mut().unwrap() = !last;
        Some(BitString(bits))
    }

    /// The first `len` bits. Panics if `len > self.len()`.
    pub fn prefix(&self, len: usize) -> BitString {
        BitString(self.0[..len].to_vec())
    }

    /// `self ⊑ other`: `self` is an initial segment of `other` (not necessarily proper).
    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn comparable(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        BitString(self.0.iter().chain(other.0.iter()).copied().collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Malformed {
                    what: "bit string",
                    detail: format!("{s:?} contains {c:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString)
    }
}

/// `μ([σ]) = 2^-|σ|`.
pub fn cylinder_measure(sigma: &BitString) -> Rational {
    dyadic(sigma.len())
}

/// A finite initial segment of a point of Cantor space. There is no
/// implicit continuation: questions about bits past the end are undecided.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PointPrefix(BitString);

impl PointPrefix {
    pub fn new(bits: BitString) -> Self {
        PointPrefix(bits)
    }

    pub fn bits(&self) -> &BitString {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, i: usize) -> Result<bool> {
        self.0.get(i).ok_or(Error::InsufficientPrecision {
            required: i + 1,
            given: self.0.len(),
        })
    }

    /// The first `depth` bits, or an error if the prefix is shorter.
    pub fn truncate(&self, depth: usize) -> Result<BitString> {
        if self.0.len() < depth {
            return Err(Error::InsufficientPrecision {
                required: depth,
                given: self.0.len(),
            });
        }
        Ok(self.0.prefix(depth))
    }

    /// Whether every point extending this prefix lies in `[sigma]`:
    /// `Some(true)` if `sigma` is an initial segment of the prefix,
    /// `Some(false)` if they disagree on a bit the prefix carries, and
    /// `None` when the prefix ends before `sigma` is resolved.
    pub fn in_cylinder(&self, sigma: &BitString) -> Option<bool> {
        if sigma.is_prefix_of(&self.0) {
            Some(true)
        } else if self.0.is_prefix_of(sigma) {
            None
        } else {
            Some(false)
        }
    }
}

impl From<BitString> for PointPrefix {
    fn from(bits: BitString) -> Self {
        PointPrefix(bits)
    }
}

impl fmt::Display for PointPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Finite union of cylinders, kept in canonical form.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClopenSet {
    generators: BTreeSet<BitString>,
}

impl ClopenSet {
    pub fn empty() -> Self {
        ClopenSet::default()
    }

    pub fn full() -> Self {
        ClopenSet::cylinder(BitString::empty())
    }

    pub fn cylinder(sigma: BitString) -> Self {
        ClopenSet {
            generators: BTreeSet::from([sigma]),
        }
    }

    /// Canonical form of an arbitrary generator collection: drop generators
    /// extending another one, then merge sibling pairs into their parent
    /// until none remain.
    pub fn normalize(generators: impl IntoIterator<Item = BitString>) -> Self {
        let mut sorted: Vec<BitString> = generators.into_iter().collect();
        sorted.sort();
        sorted.dedup();

        // In lexicographic order every extension of `p` directly follows `p`.
        let mut antichain: BTreeSet<BitString> = BTreeSet::new();
        let mut last: Option<BitString> = None;
        for s in sorted {
            if let Some(p) = &last {
                if p.is_prefix_of(&s) {
                    continue;
                }
            }
            antichain.insert(s.clone());
            last = Some(s);
        }

        // Merging only ever shortens strings, so one pass over lengths in
        // decreasing order reaches the fixpoint.
        let max_len = antichain.iter().map(BitString::len).max().unwrap_or(0);
        for len in (1..=max_len).rev() {
            let at_len: Vec<BitString> = antichain.iter().filter(|s| s.len() == len).cloned().collect();
            for s in at_len {
                if !antichain.contains(&s) {
                    continue;
                }
                let sibling = s.sibling().expect("non-empty string");
                if antichain.contains(&sibling) {
                    antichain.remove(&s);
                    antichain.remove(&sibling);
                    antichain.insert(s.parent().expect("non-empty string"));
                }
            }
        }
        ClopenSet { generators: antichain }
    }

    pub fn generators(&self) -> impl Iterator<Item = &BitString> + '_ {
        self.generators.iter()
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.generators.len() == 1 && self.generators.contains(&BitString::empty())
    }

    /// Length of the longest generator (0 for the empty set).
    pub fn max_len(&self) -> usize {
        self.generators.iter().map(BitString::len).max().unwrap_or(0)
    }

    pub fn measure(&self) -> Rational {
        let depth = self.max_len();
        let numerator = self
            .generators
            .iter()
            .fold(BigInt::zero(), |acc, g| acc + (BigInt::one() << (depth - g.len())));
        Rational::new(numerator, BigInt::one() << depth)
    }

    pub fn union(&self, other: &ClopenSet) -> ClopenSet {
        ClopenSet::normalize(self.generators.iter().chain(other.generators.iter()).cloned())
    }

    pub fn intersect(&self, other: &ClopenSet) -> ClopenSet {
        let mut out = Vec::new();
        for a in &self.generators {
            for b in &other.generators {
                if a.is_prefix_of(b) {
                    out.push(b.clone());
                } else if b.is_prefix_of(a) {
                    out.push(a.clone());
                }
            }
        }
        ClopenSet::normalize(out)
    }

    pub fn complement(&self) -> ClopenSet {
        fn walk(gens: &[BitString], prefix: BitString, out: &mut Vec<BitString>) {
            if gens.is_empty() {
                out.push(prefix);
                return;
            }
            if gens[0] == prefix {
                return;
            }
            let at = prefix.len();
            let split = gens.partition_point(|g| !g.bits()[at]);
            walk(&gens[..split], prefix.child(false), out);
            walk(&gens[split..], prefix.child(true), out);
        }
        let gens: Vec<BitString> = self.generators.iter().cloned().collect();
        let mut out = Vec::new();
        walk(&gens, BitString::empty(), &mut out);
        ClopenSet::normalize(out)
    }

    pub fn difference(&self, other: &ClopenSet) -> ClopenSet {
        self.intersect(&other.complement())
    }

    /// Every generator of `self` extends some generator of `other`; complete
    /// for containment because `other` is canonical.
    pub fn is_subset(&self, other: &ClopenSet) -> bool {
        self.generators.iter().all(|a| other.contains_cylinder(a))
    }

    /// `[sigma] ⊆ self`.
    pub fn contains_cylinder(&self, sigma: &BitString) -> bool {
        self.generators.iter().any(|g| g.is_prefix_of(sigma))
    }

    /// `[sigma] ∩ self = ∅`.
    pub fn avoids_cylinder(&self, sigma: &BitString) -> bool {
        !self.generators.iter().any(|g| g.comparable(sigma))
    }

    /// Three-valued membership of every point extending `point`.
    pub fn contains_point(&self, point: &PointPrefix) -> Option<bool> {
        if self.contains_cylinder(point.bits()) {
            Some(true)
        } else if self.avoids_cylinder(point.bits()) {
            Some(false)
        } else {
            None
        }
    }

    /// The length-`depth` strings whose cylinders lie inside the set.
    pub fn members_at_depth(&self, depth: usize) -> Result<BTreeSet<BitString>> {
        let required = self.max_len();
        if depth < required {
            return Err(Error::DepthTooSmall { required, given: depth });
        }
        let mut out = BTreeSet::new();
        for g in &self.generators {
            let free = depth - g.len();
            for tail in BitString::all_of_length(free) {
                out.insert(g.concat(&tail));
            }
        }
        Ok(out)
    }
}

impl fmt::Display for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, g) in self.generators.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "\"{g}\"")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for ClopenSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromIterator<BitString> for ClopenSet {
    fn from_iter<I: IntoIterator<Item = BitString>>(iter: I) -> Self {
        ClopenSet::normalize(iter)
    }
}

/// Boolean operations as a single entry point, mirroring the scenario
/// language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetOp {
    Union,
    Intersect,
    Difference,
    Complement,
}

pub fn algebra(op: SetOp, a: &ClopenSet, b: Option<&ClopenSet>) -> Result<ClopenSet> {
    let need_b = || {
        b.ok_or(Error::Malformed {
            what: "set operation",
            detail: format!("{op:?} needs two operands"),
        })
    };
    Ok(match op {
        SetOp::Union => a.union(need_b()?),
        SetOp::Intersect => a.intersect(need_b()?),
        SetOp::Difference => a.difference(need_b()?),
        SetOp::Complement => a.complement(),
    })
}

#[cfg(test)]
pub(crate) fn bs(s: &str) -> BitString {
    s.parse().unwrap()
}

#[cfg(test)]
pub(crate) fn set(gens: &[&str]) -> ClopenSet {
    ClopenSet::normalize(gens.iter().map(|g| bs(g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Raw brute-force membership over an uncanonicalized generator list.
    fn raw_members(gens: &[BitString], depth: usize) -> BTreeSet<BitString> {
        BitString::all_of_length(depth)
            .filter(|x| gens.iter().any(|g| g.is_prefix_of(x)))
            .collect()
    }

    fn strs(items: &BTreeSet<BitString>) -> Vec<String> {
        items.iter().map(|b| b.to_string()).collect()
    }

    #[test]
    fn cylinder_measures() {
        assert_eq!(cylinder_measure(&bs("010")), ratio(1, 8));
        assert_eq!(cylinder_measure(&bs("")), integer(1));
        assert_eq!(cylinder_measure(&bs("1")), ratio(1, 2));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(set(&["0", "01"]), ClopenSet::cylinder(bs("0")));
        assert_eq!(set(&["0", "1"]), ClopenSet::full());
        let merged = set(&["00", "01", "11"]);
        assert_eq!(
            merged.generators().cloned().collect::<Vec<_>>(),
            vec![bs("0"), bs("11")]
        );
        let raw = [bs("00"), bs("01"), bs("11")];
        assert_eq!(merged.members_at_depth(2).unwrap(), raw_members(&raw, 2));
    }

    #[test]
    fn measure_examples() {
        assert_eq!(set(&["0"]).measure(), ratio(1, 2));
        assert_eq!(set(&["00", "11"]).measure(), ratio(1, 2));
        assert_eq!(set(&[""]).measure(), integer(1));
        assert_eq!(ClopenSet::empty().measure(), integer(0));
    }

    #[test]
    fn algebra_examples() {
        assert_eq!(set(&["0"]).intersect(&set(&["01", "1"])), set(&["01"]));
        assert_eq!(set(&["1"]).complement(), set(&["0"]));
        assert_eq!(set(&[""]).difference(&set(&["00"])), set(&["01", "1"]));
        assert_eq!(
            algebra(SetOp::Union, &set(&["0"]), Some(&set(&["1"]))).unwrap(),
            ClopenSet::full()
        );
        assert!(algebra(SetOp::Intersect, &set(&["0"]), None).is_err());
        assert_eq!(ClopenSet::empty().complement(), ClopenSet::full());
        assert_eq!(ClopenSet::full().complement(), ClopenSet::empty());
    }

    #[test]
    fn subset_examples() {
        assert!(set(&["01"]).is_subset(&set(&["0"])));
        assert!(!set(&["0"]).is_subset(&set(&["01"])));
        assert!(set(&["00", "11"]).is_subset(&set(&[""])));
        assert!(ClopenSet::empty().is_subset(&ClopenSet::empty()));
    }

    #[test]
    fn members_at_depth_examples() {
        assert_eq!(strs(&set(&["0"]).members_at_depth(2).unwrap()), ["00", "01"]);
        assert_eq!(strs(&set(&[""]).members_at_depth(1).unwrap()), ["0", "1"]);
        assert_eq!(
            strs(&set(&["00", "11"]).members_at_depth(3).unwrap()),
            ["000", "001", "110", "111"]
        );
        assert_eq!(
            set(&["010"]).members_at_depth(2),
            Err(Error::DepthTooSmall { required: 3, given: 2 })
        );
    }

    #[test]
    fn point_prefix_is_never_extended() {
        let y = PointPrefix::new(bs("01"));
        assert_eq!(y.in_cylinder(&bs("0")), Some(true));
        assert_eq!(y.in_cylinder(&bs("1")), Some(false));
        assert_eq!(y.in_cylinder(&bs("011")), None);
        assert_eq!(y.in_cylinder(&bs("001")), Some(false));
        assert!(y.bit(2).is_err());
        assert!(y.truncate(3).is_err());
        assert_eq!(set(&["010", "011"]).contains_point(&y), Some(true));
        assert_eq!(set(&["010"]).contains_point(&y), None);
    }

    #[test]
    fn rational_serialization() {
        assert_eq!(format_rational(&ratio(2, 8)), "1/4");
        assert_eq!(format_rational(&integer(1)), "1/1");
        assert_eq!(parse_rational("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-2").unwrap(), integer(-2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(is_dyadic(&ratio(3, 8)));
        assert!(!is_dyadic(&ratio(1, 3)));
    }

    #[test]
    fn bit_string_helpers() {
        assert_eq!(BitString::from_index(5, 4), bs("0101"));
        assert_eq!(bs("0101").to_index(), 5);
        assert_eq!(bs("01").sibling(), Some(bs("00")));
        assert_eq!(bs("").parent(), None);
        assert!("012".parse::<BitString>().is_err());
        assert_eq!(BitString::all_of_length(2).count(), 4);
    }
}
