mod common;

use cantor_core::clopen::{BitString, ClopenSet, PointPrefix};
use cantor_core::codes::{PiCode, SigmaCode};
use cantor_core::product::{extract_element, gn_construction, independence_check, pair, slice, unpair};
use cantor_core::trees::{
    closed_members, closed_to_tree, find_path, limit_tree_to_pi2, tree_to_closed, wwkl_hypothesis, FiniteTree,
    TreeApproximation,
};
use common::*;
use proptest::prelude::*;

fn short_strings() -> Vec<BitString> {
    (0..=2).flat_map(BitString::all_of_length).collect()
}

/// Every antichain of strings of length 1..=2, as exhausted codes.
fn disjoint_families() -> Vec<Vec<BitString>> {
    let candidates: Vec<BitString> = (1..=2).flat_map(BitString::all_of_length).collect();
    let mut out = Vec::new();
    for mask in 0u32..1 << candidates.len() {
        let chosen: Vec<BitString> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, s)| s.clone())
            .collect();
        let disjoint = chosen
            .iter()
            .enumerate()
            .all(|(i, a)| chosen[i + 1..].iter().all(|b| !a.comparable(b)));
        if disjoint {
            out.push(chosen);
        }
    }
    out
}

#[test]
fn pairing_round_trips() {
    for i in 0..=30 {
        for j in 0..=30 {
            assert_eq!(unpair(pair(i, j)), (i, j));
        }
    }
}

#[test]
fn independence_is_exact_for_short_cylinders() {
    for i in 0..=2 {
        for j in (0..=2).filter(|&j| j != i) {
            for s in short_strings() {
                for t in short_strings() {
                    let (joint, product) = independence_check(
                        i,
                        &ClopenSet::cylinder(s.clone()),
                        j,
                        &ClopenSet::cylinder(t.clone()),
                        8,
                    )
                    .unwrap();
                    assert_eq!(joint, product, "i={i} σ={s} j={j} τ={t}");
                }
            }
        }
    }
}

#[test]
fn gn_measure_is_bounded_and_decreasing() {
    for family in disjoint_families() {
        let cbar = SigmaCode::from_cylinders(family.clone(), true);
        let mut previous: Option<ClopenSet> = None;
        for n in 0..=3 {
            let depth = pair(n, 1) + 1;
            let g = gn_construction(&cbar, n, depth).unwrap();
            let members = g.set.members_at_depth(depth).unwrap().len();
            assert_eq!(count_measure(members, depth), g.measure);
            assert!(g.measure <= g.bound, "{family:?} n={n}");
            if let Some(prev) = &previous {
                assert!(g.set.is_subset(prev));
            }
            previous = Some(g.set);
        }
    }
}

proptest! {
    #[test]
    fn slice_reads_paired_bits(y in bits(12), i in 0usize..4) {
        let s = slice(&PointPrefix::new(y.clone()), i);
        for (j, bit) in s.bits().bits().iter().enumerate() {
            prop_assert_eq!(Some(*bit), y.get(pair(i, j)));
        }
        prop_assert!(pair(i, s.len()) >= y.len());
    }

    #[test]
    fn extracted_elements_replay(y in bits(10), gens in generators(2, 3), max_index in 0usize..4) {
        let closed = PiCode::new(SigmaCode::from_cylinders(gens, true));
        let point = PointPrefix::new(y);
        if let Some(e) = extract_element(&point, &closed, max_index).unwrap().proved() {
            prop_assert!(e.replay(&point, &closed));
            prop_assert!(e.index <= max_index);
        }
    }

    #[test]
    fn closed_sets_and_trees_correspond(gens in generators(3, 4), extra in 0usize..2) {
        let closed = PiCode::new(SigmaCode::from_cylinders(gens, true));
        let d = closed.max_cylinder_len() + extra;
        let tree = closed_to_tree(&closed, d).unwrap();
        let members = closed_members(&closed, d).unwrap();
        let bottom: std::collections::BTreeSet<BitString> = tree.level(d).cloned().collect();
        prop_assert_eq!(&bottom, &members);
        prop_assert_eq!(tree.density(d).unwrap(), closed.recorded_set().measure());
        let back = tree_to_closed(&tree);
        prop_assert_eq!(back.recorded_set(), closed.recorded_set());
        prop_assert_eq!(closed_to_tree(&back, d).unwrap(), tree);
    }

    #[test]
    fn find_path_succeeds_on_positive_trees(gens in generators(3, 3), num in 1i64..8) {
        let closed = PiCode::new(SigmaCode::from_cylinders(gens, true));
        let d = closed.max_cylinder_len().max(1);
        let tree = closed_to_tree(&closed, d).unwrap();
        let delta = rational(num, 8);
        match wwkl_hypothesis(&tree, &delta) {
            cantor_core::Verdict::Proved(_) => {
                let w = find_path(&tree, &delta).unwrap();
                prop_assert!(w.verify(&tree));
                prop_assert!(closed.recorded_set().contains_cylinder(&w.path));
            }
            _ => prop_assert!(find_path(&tree, &delta).is_err()),
        }
    }

    #[test]
    fn limit_tree_rows_decrease(table in prop::collection::vec(any::<bool>(), 7 * 4)) {
        let approx = TreeApproximation::from_fn(2, 4, |s, m| {
            let index = (1usize << s.len()) - 1 + s.to_index() as usize;
            table[index * 4 + m]
        });
        let code = limit_tree_to_pi2(&approx, 2).unwrap();
        prop_assert!(code.is_strict());
        let unions: Vec<ClopenSet> = code.rows().iter().map(SigmaCode::recorded_union).collect();
        for w in unions.windows(2) {
            prop_assert!(w[1].is_subset(&w[0]));
        }
        // A string in T_k for every k ≥ 1 lies in every row at its length.
        for s in BitString::all_of_length(2) {
            if (1..4).all(|k| approx.in_stage_tree(&s, k).unwrap()) {
                for (n, row) in unions.iter().enumerate() {
                    prop_assert!(row.contains_cylinder(&s.prefix(n)));
                }
            }
        }
    }
}

#[test]
fn full_and_empty_trees() {
    let full = FiniteTree::full(3);
    assert!(tree_to_closed(&full).recorded_set().is_full());
    let empty = FiniteTree::new([], 3).unwrap();
    assert!(tree_to_closed(&empty).recorded_set().is_empty());
}
