//! Three-valued certified outcomes.
//!
//! Measure and membership predicates on effective codes are only
//! semi-decidable, so every check reports one of three results: a positive
//! answer with a witness that can be replayed, a negative answer with a
//! witness, or an admission that the recorded data runs out before the
//! question is settled.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict<P, R = P> {
    Proved(P),
    Refuted(R),
    /// The recorded enumeration (or point precision) ends at `horizon`
    /// before a witness either way is found.
    Unknown {
        horizon: usize,
    },
}

impl<P, R> Verdict<P, R> {
    pub fn is_proved(&self) -> bool {
        matches!(self, Verdict::Proved(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted(_))
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    pub fn proved(&self) -> Option<&P> {
        match self {
            Verdict::Proved(p) => Some(p),
            _ => None,
        }
    }

    pub fn refuted(&self) -> Option<&R> {
        match self {
            Verdict::Refuted(r) => Some(r),
            _ => None,
        }
    }

    pub fn into_proved(self) -> Option<P> {
        match self {
            Verdict::Proved(p) => Some(p),
            _ => None,
        }
    }

    pub fn map_proved<Q>(self, f: impl FnOnce(P) -> Q) -> Verdict<Q, R> {
        match self {
            Verdict::Proved(p) => Verdict::Proved(f(p)),
            Verdict::Refuted(r) => Verdict::Refuted(r),
            Verdict::Unknown { horizon } => Verdict::Unknown { horizon },
        }
    }

    pub fn map_refuted<S>(self, f: impl FnOnce(R) -> S) -> Verdict<P, S> {
        match self {
            Verdict::Proved(p) => Verdict::Proved(p),
            Verdict::Refuted(r) => Verdict::Refuted(f(r)),
            Verdict::Unknown { horizon } => Verdict::Unknown { horizon },
        }
    }

    /// Drops the witnesses, keeping only the outcome.
    pub fn outcome(&self) -> Outcome {
        match self {
            Verdict::Proved(_) => Outcome::Proved,
            Verdict::Refuted(_) => Outcome::Refuted,
            Verdict::Unknown { .. } => Outcome::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Proved,
    Refuted,
    Unknown,
}

impl Outcome {
    pub fn from_bool(value: Option<bool>) -> Self {
        match value {
            Some(true) => Outcome::Proved,
            Some(false) => Outcome::Refuted,
            None => Outcome::Unknown,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Proved => "proved",
            Outcome::Refuted => "refuted",
            Outcome::Unknown => "unknown",
        })
    }
}
