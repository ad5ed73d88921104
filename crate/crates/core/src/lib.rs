//! Exact computable measure theory on Cantor space.
//!
//! Every object here is finite: clopen sets are canonical unions of
//! cylinders, effective open sets are staged enumerations of basic opens
//! with an explicit `exhausted` marker, and integrable functions are named
//! by finite Cauchy sequences of simple functions. All arithmetic is exact.
//! Claims about infinite objects are made relative to the recorded
//! enumeration, and every positive or negative answer carries a witness
//! that can be replayed.

pub mod clopen;
pub mod codes;
pub mod convergence;
pub mod error;
pub mod integration;
pub mod product;
pub mod randomness;
pub mod trees;
pub mod verdict;

pub use clopen::{BitString, ClopenSet, PointPrefix, Rational};
pub use error::{Error, Result};
pub use verdict::{Outcome, Verdict};
