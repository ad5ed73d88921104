use thiserror::Error;

use crate::clopen::BitString;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("depth {given} is below the required depth {required}")]
    DepthTooSmall { required: usize, given: usize },

    #[error("stage {requested} exceeds the {recorded} recorded stages")]
    HorizonExceeded { requested: usize, recorded: usize },

    #[error("row {row} cannot certify a measure above {threshold}")]
    WitnessMissing { row: usize, threshold: String },

    #[error("{0} is not exhausted")]
    NotExhausted(&'static str),

    #[error("code is not strict: {0}")]
    NotStrict(String),

    #[error("certification failed: {0}")]
    CertificationFailure(String),

    #[error("generators {first} and {second} overlap")]
    NotDisjoint { first: BitString, second: BitString },

    #[error("coordinates must differ (both are {0})")]
    SameCoordinate(usize),

    #[error("level {requested} exceeds the tree height {max_level}")]
    LevelExceeded { requested: usize, max_level: usize },

    #[error("hypothesis not proved: {0}")]
    HypothesisNotProved(String),

    #[error("approximation undefined at node {node} stage {stage}")]
    PartialApproximation { node: BitString, stage: usize },

    #[error("point prefix of length {given} cannot resolve depth {required}")]
    InsufficientPrecision { required: usize, given: usize },

    #[error("no recorded entry reaches a modulus below {0}")]
    HorizonTooShort(String),

    #[error("{0} has not been validated")]
    ValidationMissing(&'static str),

    #[error("function {index} exceeds its dominator")]
    DominationViolated { index: usize },

    #[error("function {index} takes a negative value")]
    Negative { index: usize },

    #[error("malformed {what}: {detail}")]
    Malformed { what: &'static str, detail: String },
}
