//! Martin-Löf and Σ⁰₂ tests and per-point deficiency reports.
//!
//! Level `i` of a test must have measure at most `2⁻ⁱ`. A point passes a
//! test once some level is certified not to contain it.

use crate::clopen::{dyadic, format_rational, ClopenSet, PointPrefix, Rational};
use crate::codes::{BasicOpen, LevelCode, LevelKind, SigmaCode, Witness};
use crate::error::{Error, Result};
use crate::verdict::Verdict;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MLTest {
    levels: Vec<SigmaCode>,
}

impl MLTest {
    pub fn new(levels: Vec<SigmaCode>) -> Self {
        MLTest { levels }
    }

    pub fn levels(&self) -> &[SigmaCode] {
        &self.levels
    }
}

/// A violation of the level bound: level `level` exceeds `2^-level` once
/// `stages` stages are enumerated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundViolation {
    pub level: usize,
    pub stages: usize,
    pub measure: Rational,
}

/// Proved when every recorded prefix of level `i` has measure at most `2⁻ⁱ`.
pub fn validate_ml_test(test: &MLTest) -> Verdict<(), BoundViolation> {
    for (level, code) in test.levels.iter().enumerate() {
        if let Verdict::Proved(w) = code.measure_gt(&dyadic(level)) {
            return Verdict::Refuted(BoundViolation {
                level,
                stages: w.stages,
                measure: w.measure,
            });
        }
    }
    Verdict::Proved(())
}

/// Level `i` of the output interleaves level `i + k + 1` of every input
/// test `k`, so its measure is below `Σ_k 2^-(i+k+1) < 2⁻ⁱ`. The output has
/// as many levels as every input can supply.
pub fn union_tests(tests: &[MLTest]) -> Result<MLTest> {
    if tests.iter().any(|t| !validate_ml_test(t).is_proved()) {
        return Err(Error::ValidationMissing("input test"));
    }
    let count = tests
        .iter()
        .enumerate()
        .map(|(k, t)| t.levels.len().saturating_sub(k + 1))
        .min()
        .unwrap_or(0);
    let levels = (0..count)
        .map(|i| {
            let sources: Vec<&SigmaCode> = tests.iter().enumerate().map(|(k, t)| &t.levels[i + k + 1]).collect();
            let longest = sources.iter().map(|s| s.len()).max().unwrap_or(0);
            let mut stages: Vec<BasicOpen> = Vec::new();
            for t in 0..longest {
                for source in &sources {
                    if let Some(stage) = source.stages().get(t) {
                        stages.push(stage.clone());
                    }
                }
            }
            SigmaCode::new(stages, sources.iter().all(|s| s.is_exhausted()))
        })
        .collect();
    Ok(MLTest::new(levels))
}

/// Levels are strict Σ⁰₂ codes: unions of increasing closed sets.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Sigma2Test {
    levels: Vec<LevelCode>,
}

impl Sigma2Test {
    pub fn new(levels: Vec<LevelCode>) -> Result<Self> {
        for (i, level) in levels.iter().enumerate() {
            if level.level() != 2 || level.kind() != LevelKind::Sigma {
                return Err(Error::Malformed {
                    what: "Σ⁰₂ test",
                    detail: format!("level {i} is not a Σ⁰₂ code"),
                });
            }
            if !level.is_strict() {
                return Err(Error::NotStrict(format!("level {i} of the Σ⁰₂ test")));
            }
        }
        Ok(Sigma2Test { levels })
    }

    pub fn levels(&self) -> &[LevelCode] {
        &self.levels
    }
}

/// Rejects a level once the union of its exhausted closed children, a
/// certified lower bound on its measure, exceeds `2⁻ⁱ`. Otherwise the level
/// is accepted at the recorded horizon.
pub fn validate_sigma2_test(test: &Sigma2Test) -> Verdict<(), BoundViolation> {
    for (level, code) in test.levels.iter().enumerate() {
        let mut lower = ClopenSet::empty();
        for (k, child) in code.children().iter().enumerate() {
            if !child.is_exhausted() {
                continue;
            }
            lower = lower.union(&child.recorded_set());
            let measure = lower.measure();
            if measure > dyadic(level) {
                return Verdict::Refuted(BoundViolation {
                    level,
                    stages: k + 1,
                    measure,
                });
            }
        }
    }
    Verdict::Proved(())
}

/// Anything with levels whose membership can be queried.
pub trait RandomnessTest {
    fn level_count(&self) -> usize;
    fn level_membership(&self, level: usize, point: &PointPrefix) -> Verdict<Witness, Witness>;
    fn replay_level(&self, level: usize, point: &PointPrefix, verdict: &Verdict<Witness, Witness>) -> bool;
}

impl RandomnessTest for MLTest {
    fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn level_membership(&self, level: usize, point: &PointPrefix) -> Verdict<Witness, Witness> {
        self.levels[level]
            .membership(point, usize::MAX)
            .map_proved(Witness::Stage)
            .map_refuted(Witness::Avoids)
    }

    fn replay_level(&self, level: usize, point: &PointPrefix, verdict: &Verdict<Witness, Witness>) -> bool {
        LevelCode::Open(self.levels[level].clone()).replay_membership(point, verdict)
    }
}

impl RandomnessTest for Sigma2Test {
    fn level_count(&self) -> usize {
        self.levels.len()
    }

    fn level_membership(&self, level: usize, point: &PointPrefix) -> Verdict<Witness, Witness> {
        self.levels[level].membership(point, usize::MAX)
    }

    fn replay_level(&self, level: usize, point: &PointPrefix, verdict: &Verdict<Witness, Witness>) -> bool {
        self.levels[level].replay_membership(point, verdict)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeficiencyReport {
    pub verdicts: Vec<Verdict<Witness, Witness>>,
    /// Least level certified not to contain the point.
    pub passing: Option<usize>,
}

impl DeficiencyReport {
    pub fn replay(&self, point: &PointPrefix, test: &dyn RandomnessTest) -> bool {
        self.verdicts.len() == test.level_count()
            && self
                .verdicts
                .iter()
                .enumerate()
                .all(|(i, v)| test.replay_level(i, point, v))
            && self.passing == expected_passing(&self.verdicts)
    }
}

fn expected_passing(verdicts: &[Verdict<Witness, Witness>]) -> Option<usize> {
    if verdicts.is_empty() {
        return Some(0);
    }
    verdicts.iter().position(Verdict::is_refuted)
}

/// Membership of `point` in every level at its precision. An empty test is
/// passed vacuously at level 0.
pub fn deficiency(point: &PointPrefix, test: &dyn RandomnessTest) -> DeficiencyReport {
    let verdicts: Vec<_> = (0..test.level_count())
        .map(|i| test.level_membership(i, point))
        .collect();
    let passing = expected_passing(&verdicts);
    DeficiencyReport { verdicts, passing }
}

/// Describes a violation for reports.
pub fn describe_violation(v: &BoundViolation) -> String {
    format!(
        "level {} reaches measure {} after {} stages",
        v.level,
        format_rational(&v.measure),
        v.stages
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clopen::{bs, BitString};
    use crate::codes::PiCode;

    fn zeros_test(levels: usize) -> MLTest {
        MLTest::new(
            (0..levels)
                .map(|i| SigmaCode::from_cylinders([BitString::from_bits(vec![false; i])], true))
                .collect(),
        )
    }

    fn pt(s: &str) -> PointPrefix {
        PointPrefix::new(bs(s))
    }

    #[test]
    fn validate_examples() {
        assert!(validate_ml_test(&zeros_test(5)).is_proved());
        let full = MLTest::new(vec![SigmaCode::from_cylinders([bs("")], true); 3]);
        assert_eq!(validate_ml_test(&full).refuted().unwrap().level, 1);
        assert!(validate_ml_test(&MLTest::default()).is_proved());
    }

    #[test]
    fn union_examples() {
        let u = union_tests(&[zeros_test(5), zeros_test(5)]).unwrap();
        assert_eq!(u.levels().len(), 3);
        assert_eq!(
            u.levels()[0].stages(),
            &[BasicOpen::Cylinder(bs("0")), BasicOpen::Cylinder(bs("00"))]
        );
        assert!(validate_ml_test(&u).is_proved());

        let single = union_tests(&[zeros_test(4)]).unwrap();
        assert_eq!(single.levels(), &zeros_test(4).levels()[1..]);
        assert!(union_tests(&[]).unwrap().levels().is_empty());

        let bad = MLTest::new(vec![SigmaCode::from_cylinders([bs("")], true); 3]);
        assert_eq!(union_tests(&[bad]), Err(Error::ValidationMissing("input test")));
    }

    #[test]
    fn deficiency_examples() {
        let t = zeros_test(4);
        let r = deficiency(&pt("111"), &t);
        assert_eq!(r.passing, Some(1));
        assert!(r.replay(&pt("111"), &t));
        let r = deficiency(&pt("000"), &t);
        assert!(r.verdicts.iter().all(Verdict::is_proved));
        assert_eq!(r.passing, None);
        assert_eq!(deficiency(&pt("0"), &MLTest::default()).passing, Some(0));
    }

    #[test]
    fn sigma2_tests() {
        let closed =
            |gens: &[&str]| LevelCode::Closed(PiCode::new(SigmaCode::from_cylinders(gens.iter().map(|s| bs(s)), true)));
        let level0 = LevelCode::union(2, vec![closed(&["1"]), closed(&[])]).unwrap();
        let level1 = LevelCode::union(2, vec![closed(&["1"]), closed(&["11"])]).unwrap();
        let test = Sigma2Test::new(vec![level0.clone(), level1]).unwrap();
        assert_eq!(validate_sigma2_test(&test).refuted().unwrap().level, 1);
        let ok = Sigma2Test::new(vec![level0, LevelCode::union(2, vec![closed(&["1"])]).unwrap()]).unwrap();
        assert!(validate_sigma2_test(&ok).is_proved());
        let r = deficiency(&pt("11"), &ok);
        assert_eq!(r.passing, Some(1));
        assert!(r.replay(&pt("11"), &ok));

        let decreasing = LevelCode::union(2, vec![closed(&[]), closed(&["1"])]).unwrap();
        assert!(matches!(Sigma2Test::new(vec![decreasing]), Err(Error::NotStrict(_))));
    }
}
