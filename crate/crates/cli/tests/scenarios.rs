use std::path::PathBuf;
use std::process::Command;

use cantor_cli::scenario::LoadError;
use cantor_cli::{parse_scenario, render_structured, render_text, run, Options, Pipeline};

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn tour() -> String {
    std::fs::read_to_string(scenario_path("tour.cantor")).unwrap()
}

#[test]
fn tour_passes_every_expectation() {
    let scenario = parse_scenario(&tour()).unwrap();
    let report = run(&scenario, Options::default());
    assert_eq!(report.errors, 0, "{}", render_text(&report.tree));
    assert_eq!(report.replay_failures, 0);
    assert_eq!(report.expectations_failed, 0, "{}", render_text(&report.tree));
    assert!(report.expectations_passed > 50);
}

#[test]
fn every_pipeline_appears_in_the_tour() {
    let scenario = parse_scenario(&tour()).unwrap();
    for (pipeline, name) in cantor_cli::PIPELINES {
        assert!(
            scenario.commands.iter().any(|c| c.pipeline == pipeline),
            "{name} is not exercised"
        );
    }
}

#[test]
fn pipeline_filter() {
    let scenario = parse_scenario(&tour()).unwrap();
    let options = Options {
        pipeline: Some(Pipeline::Dct),
        ..Options::default()
    };
    let report = run(&scenario, options);
    let commands = report.tree["commands"].as_array().unwrap();
    assert_eq!(commands.len(), 3);
    assert!(commands.iter().all(|c| c["pipeline"] == "dct"));
}

#[test]
fn failing_expectations_are_reported() {
    let text = "let a : clopen = {\"0\"}\nrun measure set=a expect measure=1/4\n";
    let report = run(&parse_scenario(text).unwrap(), Options::default());
    assert_eq!(report.expectations_failed, 1);
    let exp = &report.tree["commands"][0]["expectations"][0];
    assert_eq!(exp["actual"], "1/2");
    assert_eq!(exp["passed"], false);
}

#[test]
fn pipeline_errors_name_the_operation() {
    let text = "let g : pi2 = strict [[\"0\"]]\nrun pos-to-counterexample code=g delta=1/2 expect functions=1\n";
    let report = run(&parse_scenario(text).unwrap(), Options::default());
    assert_eq!(report.errors, 1);
    let cmd = &report.tree["commands"][0];
    assert_eq!(cmd["status"], "error");
    assert!(cmd["error"]
        .as_str()
        .unwrap()
        .starts_with("counterexample_from_gdelta:"));
    assert_eq!(report.expectations_failed, 1);
}

#[test]
fn load_errors_have_positions() {
    let e = parse_scenario("let a : clopen = {\"0\"}\n\nrun measure set=b\n").unwrap_err();
    assert!(matches!(e, LoadError::Unresolved { .. }));
    assert_eq!(e.pos().line, 3);
    let e = parse_scenario("let a : clopen = {\"2\"}\n").unwrap_err();
    assert!(matches!(e, LoadError::Invariant { .. }));
    let e = parse_scenario("run nonsense\n").unwrap_err();
    assert!(e.to_string().contains("unknown pipeline"));
}

#[test]
fn reports_are_byte_identical() {
    let scenario = parse_scenario(&tour()).unwrap();
    let a = render_structured(&run(&scenario, Options::default()).tree);
    let b = render_structured(&run(&parse_scenario(&tour()).unwrap(), Options::default()).tree);
    assert_eq!(a, b);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cantor");
    let ok = Command::new(bin)
        .args([
            "run",
            scenario_path("tour.cantor").to_str().unwrap(),
            "--format",
            "structured",
        ])
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let tree: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(tree["totals"]["expectations_failed"], 0);

    let dir = std::env::temp_dir().join(format!("cantor-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let failing = dir.join("failing.cantor");
    std::fs::write(
        &failing,
        "let a : clopen = {\"0\"}\nrun measure set=a expect measure=1\n",
    )
    .unwrap();
    let report = dir.join("report.txt");
    let out = Command::new(bin)
        .args(["run", failing.to_str().unwrap(), "--report", report.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(std::fs::read_to_string(&report).unwrap().contains("passed: false"));

    let out = Command::new(bin)
        .args(["run", failing.to_str().unwrap(), "--depth", "17"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}
