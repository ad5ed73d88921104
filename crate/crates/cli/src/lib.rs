//! Scenario files for the `cantor` command: declarations of sets, codes,
//! trees, sequences and tests, and `run` commands that execute named
//! pipelines and check their results.

pub mod pipelines;
pub mod report;
pub mod scenario;
pub mod syntax;

pub use pipelines::{Pipeline, PIPELINES};
pub use report::{render_structured, render_text, run, Options, Report};
pub use scenario::{parse_scenario, LoadError, Scenario};
