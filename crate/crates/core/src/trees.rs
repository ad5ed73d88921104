//! Finite binary trees as codes for closed sets.
//!
//! A [`FiniteTree`] is a prefix-closed set of strings no longer than
//! `max_level`. All path claims are claims at depth `max_level`: a "path"
//! is a node on the last level.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::One;

use crate::clopen::{format_rational, BitString, Rational};
use crate::codes::{Pi2Code, PiCode, SigmaCode};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteTree {
    nodes: BTreeSet<BitString>,
    max_level: usize,
}

impl FiniteTree {
    pub fn new(nodes: impl IntoIterator<Item = BitString>, max_level: usize) -> Result<Self> {
        let nodes: BTreeSet<BitString> = nodes.into_iter().collect();
        for node in &nodes {
            if node.len() > max_level {
                return Err(Error::Malformed {
                    what: "tree",
                    detail: format!("node {node} is deeper than level {max_level}"),
                });
            }
            if let Some(parent) = node.parent() {
                if !nodes.contains(&parent) {
                    return Err(Error::Malformed {
                        what: "tree",
                        detail: format!("node {node} is missing its parent"),
                    });
                }
            }
        }
        Ok(FiniteTree { nodes, max_level })
    }

    /// Every string of length at most `max_level` whose prefixes all satisfy
    /// `keep`.
    pub fn from_predicate(max_level: usize, mut keep: impl FnMut(&BitString) -> bool) -> Self {
        let mut nodes = BTreeSet::new();
        let mut frontier = vec![BitString::empty()];
        while let Some(node) = frontier.pop() {
            if !keep(&node) {
                continue;
            }
            if node.len() < max_level {
                frontier.push(node.child(false));
                frontier.push(node.child(true));
            }
            nodes.insert(node);
        }
        FiniteTree { nodes, max_level }
    }

    pub fn full(max_level: usize) -> Self {
        FiniteTree::from_predicate(max_level, |_| true)
    }

    pub fn nodes(&self) -> &BTreeSet<BitString> {
        &self.nodes
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn contains(&self, node: &BitString) -> bool {
        self.nodes.contains(node)
    }

    pub fn level(&self, n: usize) -> impl Iterator<Item = &BitString> + '_ {
        self.nodes.iter().filter(move |s| s.len() == n)
    }

    /// Fraction of the `2ⁿ` strings of length `n` that are nodes.
    pub fn density(&self, n: usize) -> Result<Rational> {
        if n > self.max_level {
            return Err(Error::LevelExceeded {
                requested: n,
                max_level: self.max_level,
            });
        }
        Ok(Rational::new(self.level(n).count().into(), BigInt::one() << n))
    }

    fn descendants_at_bottom(&self, node: &BitString) -> usize {
        self.level(self.max_level).filter(|s| node.is_prefix_of(s)).count()
    }
}

/// Proved with the level densities when every level has density above
/// `δ`; Refuted with the first level that does not.
pub fn wwkl_hypothesis(tree: &FiniteTree, delta: &Rational) -> Verdict<Vec<Rational>, usize> {
    let mut densities = Vec::with_capacity(tree.max_level + 1);
    for n in 0..=tree.max_level {
        let d = tree.density(n).expect("level within range");
        if &d <= delta {
            return Verdict::Refuted(n);
        }
        densities.push(d);
    }
    Verdict::Proved(densities)
}

/// The tree of strings whose cylinder is not covered by the complement of
/// the exhausted closed set `C`.
pub fn closed_to_tree(closed: &PiCode, max_level: usize) -> Result<FiniteTree> {
    if !closed.is_exhausted() {
        return Err(Error::NotExhausted("closed code"));
    }
    let required = closed.max_cylinder_len();
    if max_level < required {
        return Err(Error::DepthTooSmall {
            required,
            given: max_level,
        });
    }
    let cover = closed.complement().recorded_union();
    Ok(FiniteTree::from_predicate(max_level, |s| !cover.contains_cylinder(s)))
}

/// Closed code whose complement enumerates the minimal non-nodes.
pub fn tree_to_closed(tree: &FiniteTree) -> PiCode {
    let mut excluded = Vec::new();
    if !tree.contains(&BitString::empty()) {
        excluded.push(BitString::empty());
    } else {
        for node in tree.nodes.iter().filter(|s| s.len() < tree.max_level) {
            for bit in [false, true] {
                let child = node.child(bit);
                if !tree.contains(&child) {
                    excluded.push(child);
                }
            }
        }
    }
    excluded.sort();
    PiCode::new(SigmaCode::from_cylinders(excluded, true))
}

/// A node on the last level found by greedy descent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathWitness {
    pub path: BitString,
    /// Level densities certifying the hypothesis.
    pub densities: Vec<Rational>,
    /// Bottom-level descendant counts of the `0` and `1` child at each step.
    pub child_counts: Vec<(usize, usize)>,
}

impl PathWitness {
    /// Every prefix of the path is a node and the path reaches the last level.
    pub fn verify(&self, tree: &FiniteTree) -> bool {
        self.path.len() == tree.max_level && (0..=self.path.len()).all(|k| tree.contains(&self.path.prefix(k)))
    }
}

/// Descends from the root, always into the child with the most descendants
/// on the last level (ties go to the 0-child).
pub fn find_path(tree: &FiniteTree, delta: &Rational) -> Result<PathWitness> {
    let densities = match wwkl_hypothesis(tree, delta) {
        Verdict::Proved(d) => d,
        Verdict::Refuted(n) => {
            return Err(Error::HypothesisNotProved(format!(
                "level {n} has density at most {}",
                format_rational(delta)
            )))
        }
        Verdict::Unknown { .. } => unreachable!("finite trees are decided"),
    };
    let mut path = BitString::empty();
    let mut child_counts = Vec::with_capacity(tree.max_level);
    while path.len() < tree.max_level {
        let zero = tree.descendants_at_bottom(&path.child(false));
        let one = tree.descendants_at_bottom(&path.child(true));
        child_counts.push((zero, one));
        path = path.child(one > zero);
    }
    let witness = PathWitness {
        path,
        densities,
        child_counts,
    };
    if !witness.verify(tree) {
        return Err(Error::CertificationFailure("greedy descent left the tree".into()));
    }
    Ok(witness)
}

/// A finite table of `f(σ, m) ∈ {0,1}` for `|σ| ≤ max_level`, `m < stages`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeApproximation {
    values: BTreeMap<(BitString, usize), bool>,
    stages: usize,
    max_level: usize,
}

impl TreeApproximation {
    /// Entries outside the table are left undefined.
    pub fn new(values: BTreeMap<(BitString, usize), bool>, stages: usize, max_level: usize) -> Self {
        TreeApproximation {
            values,
            stages,
            max_level,
        }
    }

    pub fn from_fn(max_level: usize, stages: usize, mut f: impl FnMut(&BitString, usize) -> bool) -> Self {
        let mut values = BTreeMap::new();
        for len in 0..=max_level {
            for s in BitString::all_of_length(len) {
                for m in 0..stages {
                    let v = f(&s, m);
                    values.insert((s.clone(), m), v);
                }
            }
        }
        TreeApproximation::new(values, stages, max_level)
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn get(&self, node: &BitString, stage: usize) -> Result<bool> {
        self.values
            .get(&(node.clone(), stage))
            .copied()
            .ok_or_else(|| Error::PartialApproximation {
                node: node.clone(),
                stage,
            })
    }

    /// `σ ∈ T_m`: `f(τ, m) = 1` for every `τ ⊑ σ`.
    pub fn in_stage_tree(&self, node: &BitString, stage: usize) -> Result<bool> {
        for k in 0..=node.len() {
            if !self.get(&node.prefix(k), stage)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn stage_tree(&self, stage: usize) -> Result<FiniteTree> {
        let mut nodes = Vec::new();
        for len in 0..=self.max_level {
            for s in BitString::all_of_length(len) {
                if self.in_stage_tree(&s, stage)? {
                    nodes.push(s);
                }
            }
        }
        FiniteTree::new(nodes, self.max_level)
    }
}

/// The `Π⁰₂` code with rows `G_n = ⋃{[σ] : |σ| = n, ∃k > n σ ∈ T_k}` for
/// `n = 0..=max_level`, the existential ranging over recorded stages. Needs
/// at least `max_level + 2` stages so every row has a candidate `k`.
pub fn limit_tree_to_pi2(approx: &TreeApproximation, max_level: usize) -> Result<Pi2Code> {
    if max_level > approx.max_level {
        return Err(Error::LevelExceeded {
            requested: max_level,
            max_level: approx.max_level,
        });
    }
    if approx.stages < max_level + 2 {
        return Err(Error::PartialApproximation {
            node: BitString::empty(),
            stage: max_level + 1,
        });
    }
    let mut rows = Vec::with_capacity(max_level + 1);
    for n in 0..=max_level {
        let mut cylinders = Vec::new();
        for s in BitString::all_of_length(n) {
            let mut found = false;
            for k in n + 1..approx.stages {
                if approx.in_stage_tree(&s, k)? {
                    found = true;
                    break;
                }
            }
            if found {
                cylinders.push(s);
            }
        }
        rows.push(SigmaCode::from_cylinders(cylinders, true));
    }
    Pi2Code::strict(rows).map_err(|e| Error::CertificationFailure(e.to_string()))
}

/// The tree of the last recorded stage, provided the last two stages agree
/// everywhere; Unknown otherwise, since no stabilization modulus is known.
pub fn stabilized_tree(approx: &TreeApproximation) -> Result<Verdict<FiniteTree, ()>> {
    if approx.stages < 2 {
        return Ok(Verdict::Unknown { horizon: approx.stages });
    }
    let (last, previous) = (approx.stages - 1, approx.stages - 2);
    for len in 0..=approx.max_level {
        for s in BitString::all_of_length(len) {
            if approx.get(&s, last)? != approx.get(&s, previous)? {
                return Ok(Verdict::Unknown { horizon: approx.stages });
            }
        }
    }
    Ok(Verdict::Proved(approx.stage_tree(last)?))
}

/// Depth-`d` members of the closed set coded by `closed`, when exhausted.
pub fn closed_members(closed: &PiCode, depth: usize) -> Result<BTreeSet<BitString>> {
    if !closed.is_exhausted() {
        return Err(Error::NotExhausted("closed code"));
    }
    closed.recorded_set().members_at_depth(depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clopen::{bs, integer, ratio, set, ClopenSet};

    fn extensions_of_zero(max_level: usize) -> FiniteTree {
        FiniteTree::from_predicate(max_level, |s| s.comparable(&bs("0")))
    }

    fn avoiding_11(max_level: usize) -> FiniteTree {
        FiniteTree::from_predicate(max_level, |s| !s.to_string().contains("11"))
    }

    #[test]
    fn density_examples() {
        assert_eq!(FiniteTree::full(3).density(3).unwrap(), integer(1));
        assert_eq!(extensions_of_zero(2).density(2).unwrap(), ratio(1, 2));
        assert_eq!(avoiding_11(2).density(2).unwrap(), ratio(3, 4));
        assert!(matches!(
            avoiding_11(2).density(3),
            Err(Error::LevelExceeded {
                requested: 3,
                max_level: 2
            })
        ));
    }

    #[test]
    fn tree_constructor_checks_prefix_closure() {
        assert!(FiniteTree::new([bs(""), bs("01")], 2).is_err());
        assert!(FiniteTree::new([bs(""), bs("0"), bs("01")], 1).is_err());
        assert!(FiniteTree::new([bs(""), bs("0"), bs("01")], 2).is_ok());
    }

    #[test]
    fn wwkl_examples() {
        assert!(wwkl_hypothesis(&extensions_of_zero(3), &ratio(1, 4)).is_proved());
        assert_eq!(
            wwkl_hypothesis(&extensions_of_zero(3), &ratio(1, 2)),
            Verdict::Refuted(1)
        );
        let pruned = FiniteTree::new([bs(""), bs("0"), bs("1")], 3).unwrap();
        assert_eq!(wwkl_hypothesis(&pruned, &ratio(1, 8)), Verdict::Refuted(2));
    }

    #[test]
    fn closed_to_tree_examples() {
        let c = PiCode::new(SigmaCode::from_cylinders([bs("1")], true));
        let t = closed_to_tree(&c, 2).unwrap();
        assert_eq!(t.nodes(), &[bs(""), bs("0"), bs("00"), bs("01")].into_iter().collect());

        let c = PiCode::new(SigmaCode::from_cylinders([bs("")], true));
        assert!(closed_to_tree(&c, 2).unwrap().nodes().is_empty());

        let c = PiCode::new(SigmaCode::from_cylinders([bs("11")], true));
        assert_eq!(closed_to_tree(&c, 2).unwrap(), avoiding_11(2));

        let partial = PiCode::new(SigmaCode::from_cylinders([bs("1")], false));
        assert!(closed_to_tree(&partial, 2).is_err());
    }

    #[test]
    fn tree_to_closed_examples() {
        assert!(tree_to_closed(&FiniteTree::full(3)).complement().is_empty());
        assert_eq!(
            tree_to_closed(&extensions_of_zero(3)).complement().recorded_union(),
            set(&["1"])
        );
        assert_eq!(
            tree_to_closed(&avoiding_11(2)).complement().recorded_union(),
            set(&["11"])
        );
        let empty = FiniteTree::new([], 2).unwrap();
        assert!(tree_to_closed(&empty).recorded_set().is_empty());
    }

    #[test]
    fn find_path_examples() {
        assert_eq!(find_path(&extensions_of_zero(3), &ratio(1, 4)).unwrap().path, bs("000"));
        assert_eq!(find_path(&FiniteTree::full(2), &ratio(1, 2)).unwrap().path, bs("00"));
        let w = find_path(&avoiding_11(2), &ratio(1, 2)).unwrap();
        assert_eq!((w.path.clone(), w.child_counts[0]), (bs("00"), (2, 1)));
        assert!(matches!(
            find_path(&extensions_of_zero(3), &ratio(1, 2)),
            Err(Error::HypothesisNotProved(_))
        ));
    }

    #[test]
    fn limit_tree_examples() {
        let f = TreeApproximation::from_fn(2, 4, |s, _| s.comparable(&bs("0")));
        let code = limit_tree_to_pi2(&f, 2).unwrap();
        let unions: Vec<_> = code.rows().iter().map(SigmaCode::recorded_union).collect();
        assert_eq!(unions, vec![ClopenSet::full(), set(&["0"]), set(&["0"])]);

        let f = TreeApproximation::from_fn(2, 4, |_, _| true);
        let code = limit_tree_to_pi2(&f, 2).unwrap();
        assert!(code.rows().iter().all(|r| r.recorded_union().is_full()));

        let f = TreeApproximation::from_fn(2, 4, |s, m| m >= 1 && s.comparable(&bs("1")));
        let code = limit_tree_to_pi2(&f, 2).unwrap();
        assert_eq!(code.rows()[1].recorded_union(), set(&["1"]));
        assert_eq!(code.rows()[2].recorded_union(), set(&["1"]));

        let short = TreeApproximation::from_fn(2, 3, |_, _| true);
        assert!(matches!(
            limit_tree_to_pi2(&short, 2),
            Err(Error::PartialApproximation { .. })
        ));
        let holes = TreeApproximation::new(BTreeMap::new(), 4, 2);
        assert!(matches!(
            limit_tree_to_pi2(&holes, 2),
            Err(Error::PartialApproximation { .. })
        ));
    }

    #[test]
    fn stabilization() {
        let f = TreeApproximation::from_fn(2, 4, |s, _| s.comparable(&bs("0")));
        assert_eq!(
            stabilized_tree(&f).unwrap().into_proved().unwrap(),
            extensions_of_zero(2)
        );
        let flip = TreeApproximation::from_fn(2, 4, |_, m| m % 2 == 0);
        assert!(stabilized_tree(&flip).unwrap().is_unknown());
    }
}
