mod common;

use cantor_core::clopen::{dyadic, BitString, PointPrefix, Rational};
use cantor_core::convergence::{
    convergence_set, counterexample_from_gdelta, dct_check, egorov_witness, integral_cauchy, interleave_cauchy,
    violation_set, Dominator, Mode, SimpleSequence, Target,
};
use cantor_core::integration::{truncation_bound, L1Name, SimpleFunction};
use cantor_core::{Outcome, Verdict};
use common::*;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn nonnegative(max_depth: usize) -> impl Strategy<Value = SimpleFunction> {
    prop::collection::vec((0i64..=4, bits(max_depth)), 0..=3)
        .prop_map(|terms| from_raw(&terms).map(|c| c.clone().min(Rational::from_integer(1.into()))))
}

fn sequence(max_depth: usize, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = SimpleSequence> {
    prop::collection::vec(simple_function(max_depth, 3), len).prop_map(SimpleSequence::new)
}

/// `∀k ≤ H ∃m < H−1 ∀n ∈ (m, H) |g_n − g_m| ≤ 2⁻ᵏ` on one cell.
fn cauchy_formula(values: &[Rational]) -> bool {
    let h = values.len();
    (0..=h).all(|k| {
        let eps = dyadic(k);
        (0..h.saturating_sub(1)).any(|m| (m + 1..h).all(|n| (&values[n] - &values[m]).abs() <= eps))
    })
}

fn limit_formula(values: &[Rational]) -> bool {
    let h = values.len();
    (0..=h).all(|k| {
        let eps = dyadic(k);
        (0..h.saturating_sub(1)).any(|m| (m + 1..h).all(|n| values[n].abs() <= eps))
    })
}

proptest! {
    #[test]
    fn integral_is_linear(f in simple_function(3, 4), g in simple_function(3, 4), c in -2i64..=2) {
        let c = Rational::from_integer(c.into());
        prop_assert_eq!(f.add(&g).integral(), f.integral() + g.integral());
        prop_assert_eq!(f.scale(&c).integral(), &c * f.integral());
    }

    #[test]
    fn norm_bounds_integral(f in simple_function(3, 4), g in simple_function(3, 4)) {
        prop_assert!(f.integral().abs() <= f.l1_norm());
        prop_assert!(f.add(&g).l1_norm() <= f.l1_norm() + g.l1_norm());
    }

    #[test]
    fn lattice_identity(f in simple_function(3, 4), num in -4i64..=4) {
        let k = rational(num, 2);
        let lhs = f.min_const(&k).add(&f.max_const(&k));
        prop_assert_eq!(lhs, f.add(&SimpleFunction::constant(k)));
    }

    #[test]
    fn eval_matches_raw_sum(terms in raw_terms(3, 4), y in bits(4)) {
        let f = from_raw(&terms);
        let point = y.concat(&BitString::from_bits(vec![false; 3]));
        let expected: Rational = terms
            .iter()
            .filter(|(_, s)| s.is_prefix_of(&point))
            .map(|(c, _)| Rational::from_integer((*c).into()))
            .sum();
        prop_assert_eq!(f.eval(&PointPrefix::new(point)).unwrap(), expected);
    }

    #[test]
    fn truncation_bound_residual(f in nonnegative(3), eps_num in 1i64..=4) {
        let name = L1Name::stationary(f.scale(&rational(3, 1)));
        let epsilon = rational(eps_num, 8);
        let bound = truncation_bound(&name, &epsilon).unwrap();
        let last = name.entries().last().unwrap();
        prop_assert!(last.sub(&last.truncate(&bound.k_rational())).l1_norm() < epsilon);
        prop_assert!(bound.verify(&name));
    }

    #[test]
    fn violation_sets_are_antitone(seq in sequence(3, 1..=5), k in 0usize..3) {
        let eps = dyadic(k + 1);
        let looser = dyadic(k);
        for mode in [Mode::Convergence, Mode::Cauchy] {
            for n in 0..seq.horizon() {
                let a = violation_set(&seq, n, &eps, mode).unwrap();
                if n + 1 < seq.horizon() {
                    prop_assert!(violation_set(&seq, n + 1, &eps, mode).unwrap().is_subset(&a));
                }
                prop_assert!(violation_set(&seq, n, &looser, mode).unwrap().is_subset(&a));
            }
        }
    }

    #[test]
    fn egorov_certificates_replay(seq in sequence(3, 1..=5), cauchy in any::<bool>()) {
        let mode = if cauchy { Mode::Cauchy } else { Mode::Convergence };
        match egorov_witness(&seq, &rational(1, 2), &rational(1, 4), mode).unwrap() {
            Verdict::Proved(cert) => prop_assert!(cert.verify(&seq).is_ok()),
            Verdict::Refuted(last) => prop_assert!(last.measure() >= rational(1, 4)),
            Verdict::Unknown { .. } => prop_assert!(false, "finite data never leaves Egorov unknown"),
        }
    }

    #[test]
    fn dct_proves_sequences_with_vanishing_tail(
        head in prop::collection::vec(nonnegative(3), 0..=4),
        zeros in 1usize..=3,
        k in 1usize..=3,
    ) {
        let mut functions = head;
        functions.extend(std::iter::repeat_n(SimpleFunction::zero(), zeros));
        let seq = SimpleSequence::new(functions);
        let one = rational(1, 1);
        let epsilon = dyadic(k);
        let cert = dct_check(&seq, Dominator::Constant(&one), &epsilon).unwrap().into_proved().unwrap();
        prop_assert!(cert.verify(&seq));
        let half = &epsilon / Rational::from_integer(2.into());
        for t in &cert.terms {
            prop_assert!(t.lower <= half && t.upper < half && t.integral < epsilon);
        }
    }

    #[test]
    fn counterexample_and_interleave(code in pi2(3, 3, 3), d in 1usize..=3) {
        let strict = code.strictify();
        let delta = dyadic(d);
        if let Ok(c) = counterexample_from_gdelta(&strict, &delta, 4) {
            prop_assert!(c.verify(&strict, 4).is_ok());
            prop_assert!(c.sequence.integrals().iter().all(|i| *i > delta));
            let inter = interleave_cauchy(&c.sequence);
            prop_assert!(inter.verify(&c.sequence));
            prop_assert!(inter.gaps.iter().all(|g| *g > &delta / Rational::from_integer(2.into())));
        } else {
            prop_assert!(!strict.measure_gt(&delta).unwrap().is_proved());
        }
    }

    #[test]
    fn interleave_gaps_are_half_integrals(seq in sequence(3, 0..=5)) {
        let inter = interleave_cauchy(&seq);
        prop_assert!(inter.verify(&seq));
        for (gap, f) in inter.gaps.iter().zip(seq.functions()) {
            prop_assert_eq!(gap.clone(), f.integral().abs() / Rational::from_integer(2.into()));
        }
        if inter.gaps.last().is_some_and(|g| !g.is_zero()) {
            let eps = inter.gaps.last().unwrap().clone();
            prop_assert!(integral_cauchy(&inter.sequence, &eps).unwrap().is_refuted());
        }
    }

    #[test]
    fn convergence_set_matches_formula(seq in sequence(3, 0..=6), target in prop::option::of(simple_function(3, 2))) {
        let code = match &target {
            None => convergence_set(&seq, &Target::Cauchy),
            Some(f) => convergence_set(&seq, &Target::Limit(f.clone())),
        };
        for cell in BitString::all_of_length(4) {
            let values: Vec<Rational> = seq
                .functions()
                .iter()
                .map(|f| f.value_on(&cell) - target.as_ref().map_or_else(Rational::zero, |t| t.value_on(&cell)))
                .collect();
            let expected = if target.is_some() { limit_formula(&values) } else { cauchy_formula(&values) };
            let v = code.membership(&PointPrefix::new(cell.clone()), usize::MAX);
            prop_assert_eq!(v.outcome(), Outcome::from_bool(Some(expected)), "cell {}", cell);
            prop_assert!(code.replay_membership(&PointPrefix::new(cell), &v));
        }
    }
}
