//! Strategies and point-level oracles shared by the property tests.
//!
//! The oracles never touch `ClopenSet` internals: they enumerate every
//! depth-`d` string and test prefixes directly.

#![allow(dead_code)]

use cantor_core::clopen::{BitString, ClopenSet, PointPrefix, Rational};
use cantor_core::codes::{BasicOpen, Pi2Code, SigmaCode};
use cantor_core::integration::SimpleFunction;
use num_bigint::BigInt;
use proptest::prelude::*;

pub fn bits(max_len: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(BitString::from_bits)
}

pub fn generators(max_len: usize, max_count: usize) -> impl Strategy<Value = Vec<BitString>> {
    prop::collection::vec(bits(max_len), 0..=max_count)
}

pub fn basic_open(max_len: usize) -> impl Strategy<Value = BasicOpen> {
    prop_oneof![
        1 => Just(BasicOpen::Empty),
        6 => bits(max_len).prop_map(BasicOpen::Cylinder),
    ]
}

pub fn sigma(max_len: usize, max_stages: usize) -> impl Strategy<Value = SigmaCode> {
    (
        prop::collection::vec(basic_open(max_len), 0..=max_stages),
        any::<bool>(),
    )
        .prop_map(|(stages, exhausted)| SigmaCode::new(stages, exhausted))
}

pub fn exhausted_sigma(max_len: usize, max_stages: usize) -> impl Strategy<Value = SigmaCode> {
    prop::collection::vec(basic_open(max_len), 0..=max_stages).prop_map(|s| SigmaCode::new(s, true))
}

pub fn pi2(rows: usize, stages: usize, max_len: usize) -> impl Strategy<Value = Pi2Code> {
    prop::collection::vec(exhausted_sigma(max_len, stages), 0..=rows).prop_map(Pi2Code::new)
}

pub fn simple_function(max_depth: usize, max_terms: usize) -> impl Strategy<Value = SimpleFunction> {
    raw_terms(max_depth, max_terms).prop_map(|terms| from_raw(&terms))
}

pub fn raw_terms(max_depth: usize, max_terms: usize) -> impl Strategy<Value = Vec<(i64, BitString)>> {
    prop::collection::vec((-2i64..=2, bits(max_depth)), 0..=max_terms)
}

pub fn from_raw(terms: &[(i64, BitString)]) -> SimpleFunction {
    SimpleFunction::from_terms(terms.iter().map(|(c, s)| (Rational::from_integer((*c).into()), s)))
}

/// Every string of length `depth`.
pub fn points(depth: usize) -> Vec<BitString> {
    BitString::all_of_length(depth).collect()
}

pub fn covers(gens: &[BitString], point: &BitString) -> bool {
    gens.iter().any(|g| g.is_prefix_of(point))
}

pub fn count_measure(members: usize, depth: usize) -> Rational {
    Rational::new(BigInt::from(members), BigInt::from(1) << depth)
}

pub fn oracle_measure(gens: &[BitString], depth: usize) -> Rational {
    count_measure(points(depth).iter().filter(|p| covers(gens, p)).count(), depth)
}

/// Membership of every depth-`depth` point in a clopen set, by prefix test.
pub fn indicator(set: &ClopenSet, depth: usize) -> Vec<bool> {
    let gens: Vec<BitString> = set.generators().cloned().collect();
    points(depth).iter().map(|p| covers(&gens, p)).collect()
}

pub fn recorded_cylinders(code: &SigmaCode) -> Vec<BitString> {
    code.stages().iter().filter_map(BasicOpen::cylinder).cloned().collect()
}

/// Depth-`depth` membership in the set coded by an exhausted Π⁰₂ code.
pub fn pi2_oracle(code: &Pi2Code, point: &BitString) -> bool {
    code.rows().iter().all(|row| covers(&recorded_cylinders(row), point))
}

pub fn prefix(point: &BitString) -> PointPrefix {
    PointPrefix::new(point.clone())
}

pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
