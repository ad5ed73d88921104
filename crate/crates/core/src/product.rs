//! Coordinates of Cantor space under the Cantor pairing.
//!
//! A point `W` is read as the sequence of points `W_i` with
//! `W_i(j) = W(⟨i,j⟩)`. Preimages of cylinders under these projections are
//! clopen, and preimages along distinct coordinates are independent, which
//! is what drives the geometric measure bound of the `G_n` construction.

use num_integer::Roots;
use num_traits::{One, Pow};

use crate::clopen::{format_rational, BitString, ClopenSet, PointPrefix, Rational};
use crate::codes::{BasicOpen, PiCode, SigmaCode};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

/// Cantor pairing `⟨i,j⟩ = (i+j)(i+j+1)/2 + j`.
pub fn pair(i: usize, j: usize) -> usize {
    let s = i + j;
    s * (s + 1) / 2 + j
}

pub fn unpair(n: usize) -> (usize, usize) {
    let mut w = ((8 * n as u128 + 1).sqrt() as usize - 1) / 2;
    // Guard against rounding at the diagonal boundaries.
    while w * (w + 1) / 2 > n {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= n {
        w += 1;
    }
    let j = n - w * (w + 1) / 2;
    (w - j, j)
}

/// Least depth at which every bit constrained by a length-`len` cylinder on
/// coordinate `i` is in range.
pub fn required_depth(i: usize, len: usize) -> usize {
    if len == 0 {
        0
    } else {
        pair(i, len - 1) + 1
    }
}

/// `π_i⁻¹[σ]`: the points whose bit `⟨i,j⟩` equals `σ(j)` for `j < |σ|`.
pub fn project_preimage(i: usize, sigma: &BitString, depth: usize) -> Result<ClopenSet> {
    let required = required_depth(i, sigma.len());
    if depth < required {
        return Err(Error::DepthTooSmall { required, given: depth });
    }
    Ok(preimage_cylinder(i, sigma))
}

fn preimage_cylinder(i: usize, sigma: &BitString) -> ClopenSet {
    let len = required_depth(i, sigma.len());
    let mut fixed: Vec<Option<bool>> = vec![None; len];
    for (j, &bit) in sigma.bits().iter().enumerate() {
        fixed[pair(i, j)] = Some(bit);
    }
    let free: Vec<usize> = (0..len).filter(|&p| fixed[p].is_none()).collect();
    let mut generators = Vec::with_capacity(1 << free.len());
    for assignment in 0..1u64 << free.len() {
        let mut bits: Vec<bool> = fixed.iter().map(|b| b.unwrap_or(false)).collect();
        for (k, &p) in free.iter().enumerate() {
            bits[p] = assignment >> k & 1 == 1;
        }
        generators.push(BitString::from_bits(bits));
    }
    ClopenSet::normalize(generators)
}

/// `π_i⁻¹(D)` for a clopen `D`.
pub fn preimage(i: usize, set: &ClopenSet, depth: usize) -> Result<ClopenSet> {
    let required = required_depth(i, set.max_len());
    if depth < required {
        return Err(Error::DepthTooSmall { required, given: depth });
    }
    Ok(set
        .generators()
        .fold(ClopenSet::empty(), |acc, g| acc.union(&preimage_cylinder(i, g))))
}

/// The longest prefix of `Y_i` that `Y` determines.
pub fn slice(point: &PointPrefix, i: usize) -> PointPrefix {
    let bits = point.bits().bits();
    let out = (0..)
        .map(|j| pair(i, j))
        .take_while(|&p| p < bits.len())
        .map(|p| bits[p]);
    PointPrefix::new(BitString::from_bits(out))
}

/// Returns `(μ(π_i⁻¹D ∩ π_j⁻¹E), μ(D)·μ(E))`; the two agree for `i ≠ j`.
pub fn independence_check(
    i: usize,
    d: &ClopenSet,
    j: usize,
    e: &ClopenSet,
    depth: usize,
) -> Result<(Rational, Rational)> {
    if i == j {
        return Err(Error::SameCoordinate(i));
    }
    let joint = preimage(i, d, depth)?.intersect(&preimage(j, e, depth)?);
    Ok((joint.measure(), d.measure() * e.measure()))
}

/// Output of [`gn_construction`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnConstruction {
    pub n: usize,
    /// Exact measure `δ̄` of the exhausted complement code.
    pub delta_bar: Rational,
    /// `δ̄ⁿ`.
    pub bound: Rational,
    /// Stage `k` contributes the generators of `⋂_{i≤n} π_i⁻¹(⋃_{j≤k}[σ_j])`.
    pub code: SigmaCode,
    pub set: ClopenSet,
    pub measure: Rational,
    pub depth: usize,
}

impl GnConstruction {
    /// Recounts the set at the recorded depth and rechecks the bound.
    pub fn verify(&self) -> Result<()> {
        let members = self.set.members_at_depth(self.depth)?;
        let counted = Rational::new(members.len().into(), num_bigint::BigInt::one() << self.depth);
        if counted != self.measure || self.code.recorded_union() != self.set {
            return Err(Error::CertificationFailure("G_n does not match its enumeration".into()));
        }
        if self.measure > self.bound || self.bound != Pow::pow(&self.delta_bar, self.n) {
            return Err(Error::CertificationFailure(format!(
                "measure {} exceeds {}",
                format_rational(&self.measure),
                format_rational(&self.bound)
            )));
        }
        Ok(())
    }
}

/// `G_n = ⋃_k ⋂_{i≤n} π_i⁻¹(⋃_{j≤k}[σ_j])` for the exhausted code of a
/// clopen set `C̄` with pairwise disjoint generators.
pub fn gn_construction(cbar: &SigmaCode, n: usize, depth: usize) -> Result<GnConstruction> {
    if !cbar.is_exhausted() {
        return Err(Error::NotExhausted("complement code"));
    }
    let cylinders: Vec<&BitString> = cbar.stages().iter().filter_map(BasicOpen::cylinder).collect();
    for (a, first) in cylinders.iter().enumerate() {
        for second in &cylinders[a + 1..] {
            if first.comparable(second) {
                return Err(Error::NotDisjoint {
                    first: (*first).clone(),
                    second: (*second).clone(),
                });
            }
        }
    }
    let required = required_depth(n, cbar.max_cylinder_len());
    if depth < required {
        return Err(Error::DepthTooSmall { required, given: depth });
    }
    let mut stages = Vec::new();
    let mut prefix = ClopenSet::empty();
    let mut set = ClopenSet::empty();
    for cylinder in &cylinders {
        prefix = prefix.union(&ClopenSet::cylinder((*cylinder).clone()));
        let mut level = ClopenSet::full();
        for i in 0..=n {
            level = level.intersect(&preimage(i, &prefix, depth)?);
        }
        stages.extend(level.generators().cloned().map(BasicOpen::Cylinder));
        set = set.union(&level);
    }
    let delta_bar = cbar.recorded_union().measure();
    let out = GnConstruction {
        n,
        bound: Pow::pow(&delta_bar, n),
        delta_bar,
        code: SigmaCode::new(stages, true),
        measure: set.measure(),
        set,
        depth,
    };
    out.verify()?;
    Ok(out)
}

/// The least coordinate `i ≤ max_index` whose slice is certified to lie in
/// the exhausted closed set `C`.
pub fn extract_element(point: &PointPrefix, closed: &PiCode, max_index: usize) -> Result<Verdict<ExtractedElement>> {
    if !closed.is_exhausted() {
        return Err(Error::NotExhausted("closed code"));
    }
    for i in 0..=max_index {
        let coordinate = slice(point, i);
        if let Verdict::Proved(avoided) = closed.membership(&coordinate, usize::MAX) {
            return Ok(Verdict::Proved(ExtractedElement {
                index: i,
                slice: coordinate,
                avoided,
            }));
        }
    }
    Ok(Verdict::Unknown { horizon: max_index + 1 })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractedElement {
    pub index: usize,
    pub slice: PointPrefix,
    /// The complement union that the slice is decided outside of.
    pub avoided: ClopenSet,
}

impl ExtractedElement {
    pub fn replay(&self, point: &PointPrefix, closed: &PiCode) -> bool {
        slice(point, self.index) == self.slice
            && closed.replay_membership(&self.slice, &Verdict::Proved(self.avoided.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clopen::{bs, integer, ratio, set};

    #[test]
    fn pairing_examples() {
        assert_eq!(pair(0, 0), 0);
        assert_eq!(pair(1, 0), 1);
        assert_eq!(pair(0, 1), 2);
        for i in 0..=30 {
            for j in 0..=30 {
                assert_eq!(unpair(pair(i, j)), (i, j));
            }
        }
        for n in 0..500 {
            let (i, j) = unpair(n);
            assert_eq!(pair(i, j), n);
        }
    }

    #[test]
    fn project_preimage_examples() {
        let p = project_preimage(0, &bs("1"), 1).unwrap();
        assert_eq!((p.clone(), p.measure()), (set(&["1"]), ratio(1, 2)));
        assert_eq!(project_preimage(1, &bs("1"), 2).unwrap(), set(&["01", "11"]));
        assert_eq!(project_preimage(0, &bs(""), 1).unwrap(), ClopenSet::full());
        assert_eq!(
            project_preimage(1, &bs("1"), 1),
            Err(Error::DepthTooSmall { required: 2, given: 1 })
        );
    }

    #[test]
    fn slice_examples() {
        assert_eq!(slice(&PointPrefix::new(bs("10")), 1).bits(), &bs("0"));
        assert_eq!(slice(&PointPrefix::new(bs("1")), 0).bits(), &bs("1"));
        assert!(slice(&PointPrefix::new(bs("")), 3).is_empty());
    }

    #[test]
    fn independence_examples() {
        let check = |i, d: &[&str], j, e: &[&str]| independence_check(i, &set(d), j, &set(e), 2).unwrap();
        assert_eq!(check(0, &["1"], 1, &["1"]), (ratio(1, 4), ratio(1, 4)));
        assert_eq!(check(0, &[""], 1, &["0"]), (ratio(1, 2), ratio(1, 2)));
        assert_eq!(check(0, &["0"], 1, &["0", "1"]), (ratio(1, 2), ratio(1, 2)));
        assert_eq!(
            independence_check(1, &set(&["0"]), 1, &set(&["0"]), 4),
            Err(Error::SameCoordinate(1))
        );
    }

    #[test]
    fn gn_examples() {
        let cbar = SigmaCode::from_cylinders([bs("1")], true);
        let g1 = gn_construction(&cbar, 1, 2).unwrap();
        assert_eq!(
            (g1.set.clone(), g1.measure.clone(), g1.bound.clone()),
            (set(&["11"]), ratio(1, 4), ratio(1, 2))
        );
        let g0 = gn_construction(&cbar, 0, 1).unwrap();
        assert_eq!(
            (g0.set.clone(), g0.measure.clone(), g0.bound.clone()),
            (set(&["1"]), ratio(1, 2), integer(1))
        );
        let empty = SigmaCode::new(vec![BasicOpen::Empty], true);
        for n in 0..3 {
            let g = gn_construction(&empty, n, 8).unwrap();
            assert!(g.set.is_empty() && g.measure == integer(0));
        }
        let overlapping = SigmaCode::from_cylinders([bs("1"), bs("10")], true);
        assert!(matches!(
            gn_construction(&overlapping, 1, 4),
            Err(Error::NotDisjoint { .. })
        ));
        assert!(matches!(gn_construction(&cbar, 1, 1), Err(Error::DepthTooSmall { .. })));
    }

    #[test]
    fn extract_element_examples() {
        let closed = PiCode::new(SigmaCode::from_cylinders([bs("1")], true));
        let y = PointPrefix::new(bs("01"));
        let v = extract_element(&y, &closed, 1).unwrap();
        let e = v.proved().unwrap();
        assert_eq!(e.index, 0);
        assert!(e.replay(&y, &closed));
        assert!(extract_element(&PointPrefix::new(bs("11")), &closed, 0)
            .unwrap()
            .is_unknown());
        let y = PointPrefix::new(bs("10"));
        assert_eq!(extract_element(&y, &closed, 1).unwrap().proved().unwrap().index, 1);
    }
}
