//! Running a scenario and rendering the report tree.

use cantor_core::clopen::{format_rational, parse_rational};
use serde_json::{json, Map, Value as Json};

use crate::pipelines::{execute, Context, Pipeline};
use crate::scenario::{Expected, Scenario};

pub const DEFAULT_DEPTH: usize = 8;
pub const MAX_DEPTH: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub depth: usize,
    /// Run only the commands of this pipeline.
    pub pipeline: Option<Pipeline>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            depth: DEFAULT_DEPTH,
            pipeline: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub tree: Json,
    pub expectations_passed: usize,
    pub expectations_failed: usize,
    pub replay_failures: usize,
    pub errors: usize,
}

impl Report {
    pub fn all_expectations_pass(&self) -> bool {
        self.expectations_failed == 0
    }
}

fn expected_json(e: &Expected) -> Json {
    match e {
        Expected::Rational(r) => Json::String(format_rational(r)),
        Expected::Text(s) => Json::String(s.clone()),
        Expected::Word(w) => match w.as_str() {
            "true" => Json::Bool(true),
            "false" => Json::Bool(false),
            "none" => Json::Null,
            _ => Json::String(w.clone()),
        },
        Expected::List(items) => Json::Array(items.iter().map(expected_json).collect()),
    }
}

/// Compares an expectation with a reported value. Numbers compare as exact
/// rationals whether reported as `p/q` strings or as integers.
pub fn matches(expected: &Expected, actual: &Json) -> bool {
    match expected {
        Expected::Rational(r) => match actual {
            Json::String(s) => parse_rational(s).is_ok_and(|a| &a == r),
            Json::Number(n) => n.as_u64().is_some_and(|n| r.is_integer() && r.to_integer() == n.into()),
            _ => false,
        },
        Expected::List(items) => match actual {
            Json::Array(values) => values.len() == items.len() && items.iter().zip(values).all(|(e, a)| matches(e, a)),
            _ => false,
        },
        other => &expected_json(other) == actual,
    }
}

pub fn run(scenario: &Scenario, options: Options) -> Report {
    let ctx = Context { depth: options.depth };
    let mut commands = Vec::new();
    let (mut passed, mut failed, mut replay_failures, mut errors) = (0, 0, 0, 0);
    for cmd in &scenario.commands {
        if options.pipeline.is_some_and(|p| p != cmd.pipeline) {
            continue;
        }
        let mut entry = Map::new();
        entry.insert("line".into(), cmd.pos.line.into());
        entry.insert("pipeline".into(), cmd.pipeline.name().into());
        entry.insert(
            "args".into(),
            Json::Object(
                cmd.arg_text
                    .iter()
                    .map(|(k, v)| (k.clone(), Json::String(v.clone())))
                    .collect(),
            ),
        );
        let summary = match execute(cmd, ctx) {
            Ok(exec) => {
                entry.insert("status".into(), "ok".into());
                entry.insert("outcome".into(), exec.outcome.to_string().into());
                entry.insert("summary".into(), Json::Object(exec.summary.clone()));
                entry.insert("certificate".into(), exec.certificate);
                entry.insert("replay".into(), if exec.replay { "passed" } else { "failed" }.into());
                if !exec.replay {
                    replay_failures += 1;
                }
                Some(exec.summary)
            }
            Err(e) => {
                errors += 1;
                entry.insert("status".into(), "error".into());
                entry.insert("error".into(), e.to_string().into());
                None
            }
        };
        let mut expectations = Vec::new();
        for exp in &cmd.expects {
            let actual = summary
                .as_ref()
                .and_then(|s| s.get(&exp.key))
                .cloned()
                .unwrap_or(Json::Null);
            let ok = summary.is_some() && matches(&exp.expected, &actual);
            if ok {
                passed += 1;
            } else {
                failed += 1;
            }
            expectations.push(json!({
                "key": exp.key,
                "expected": expected_json(&exp.expected),
                "actual": actual,
                "passed": ok,
            }));
        }
        if !expectations.is_empty() {
            entry.insert("expectations".into(), Json::Array(expectations));
        }
        commands.push(Json::Object(entry));
    }
    let tree = json!({
        "pairing": "cantor",
        "depth": options.depth,
        "commands": commands,
        "totals": {
            "commands": commands.len(),
            "errors": errors,
            "replay_failures": replay_failures,
            "expectations_passed": passed,
            "expectations_failed": failed,
        },
    });
    Report {
        tree,
        expectations_passed: passed,
        expectations_failed: failed,
        replay_failures,
        errors,
    }
}

pub fn render_structured(tree: &Json) -> String {
    let mut out = serde_json::to_string_pretty(tree).expect("report trees serialize");
    out.push('\n');
    out
}

fn scalar(value: &Json) -> Option<String> {
    match value {
        Json::Null => Some("none".into()),
        Json::Bool(b) => Some(b.to_string()),
        Json::Number(n) => Some(n.to_string()),
        Json::String(s) => Some(s.clone()),
        Json::Array(items) if items.iter().all(|i| !i.is_object()) => {
            let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
            parts.map(|p| format!("[{}]", p.join(", ")))
        }
        _ => None,
    }
}

fn render_into(value: &Json, indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    match value {
        Json::Object(map) => {
            for (k, v) in map {
                match scalar(v) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(v, indent + 2, out);
                    }
                }
            }
        }
        Json::Array(items) => {
            for item in items {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}-\n"));
                        render_into(item, indent + 2, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

/// Indented plain-text rendering of a report tree.
pub fn render_text(tree: &Json) -> String {
    let mut out = String::new();
    render_into(tree, 0, &mut out);
    out
}
