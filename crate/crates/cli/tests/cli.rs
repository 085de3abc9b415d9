//! End-to-end tests of the binary over the shipped instance documents.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_school-choice"))
}

fn instances() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("JSON output")
}

#[test]
fn run_da_on_the_five_student_instance() {
    let instance = instances().join("fx_ex2.json");
    let out = run(&["run", "--mechanism", "da", "--instance", instance.to_str().unwrap()]);
    let doc = stdout_json(&out);
    assert_eq!(doc["matching"]["1"], "s3");
    assert_eq!(doc["matching"]["2"], "s2");
    assert_eq!(doc["matching"]["3"], "s1");
    assert_eq!(doc["matching"]["4"], "s1");
    assert_eq!(doc["matching"]["5"], "s4");
}

#[test]
fn run_with_trace_reports_rounds() {
    let instance = instances().join("fx_d3.json");
    let out = run(&[
        "run",
        "--mechanism",
        "da",
        "--trace",
        "--instance",
        instance.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    assert!(doc["trace"].as_array().unwrap().len() >= 2);
}

#[test]
fn audit_and_enumerate_agree_on_the_median_instance() {
    let instance = instances().join("fx_d2.json");
    let out = run(&["enumerate", "--instance", instance.to_str().unwrap()]);
    let doc = stdout_json(&out);
    assert_eq!(doc["count"], 3);

    let matching = doc["matchings"][0].clone();
    let tmp = std::env::temp_dir().join("school-choice-test-matching.json");
    std::fs::write(&tmp, serde_json::to_string(&matching).unwrap()).unwrap();
    let out = run(&[
        "audit",
        "--instance",
        instance.to_str().unwrap(),
        "--matching",
        tmp.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["stable"], true);
}

#[test]
fn cycles_walkthrough_matches_the_fixture() {
    let out = run(&[
        "cycles",
        "--instance",
        instances().join("fx_d3.json").to_str().unwrap(),
        "--profile-a",
        instances().join("fx_d3_profile_a.json").to_str().unwrap(),
        "--profile-b",
        instances().join("fx_d3_profile_b.json").to_str().unwrap(),
        "--student",
        "1",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["cycle"], serde_json::json!(["2", "4", "3", "5"]));
    assert_eq!(doc["cycle_blockers"], serde_json::json!(["1"]));
    assert_eq!(doc["nodes"], serde_json::json!(["2", "3", "4", "5"]));
}

#[test]
fn cycles_rejects_multi_student_deviations() {
    let out = run(&[
        "cycles",
        "--instance",
        instances().join("fx_d3.json").to_str().unwrap(),
        "--profile-a",
        instances().join("fx_d3_profile_a.json").to_str().unwrap(),
        "--profile-b",
        instances().join("fx_d3_profile_b.json").to_str().unwrap(),
        "--student",
        "2",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("only `--student` may deviate"));
}

#[test]
fn check_finds_the_median_bossiness() {
    let out = run(&[
        "check",
        "--axiom",
        "local-non-bossy",
        "--mechanism",
        "median",
        "--instance",
        instances().join("fx_d2.json").to_str().unwrap(),
        "--exhaustive",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["holds"], false);
    assert_eq!(doc["counterexamples"][0]["violation"]["kind"], "local-bossiness");
}

#[test]
fn check_da_strategy_proofness_holds() {
    let out = run(&[
        "check",
        "--axiom",
        "strategy-proof",
        "--mechanism",
        "da",
        "--instance",
        instances().join("fx_a1.json").to_str().unwrap(),
        "--exhaustive",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["holds"], true);
}

#[test]
fn characterize_recovers_da_priorities() {
    let out = run(&[
        "characterize",
        "--mechanism",
        "da",
        "--universe",
        instances().join("fx_ek1.json").to_str().unwrap(),
        "--exhaustive",
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["equivalent"], true);
    assert_eq!(
        doc["recovered_priorities"]["s2"],
        serde_json::json!(["1", "2", "3", "4"])
    );
    for axiom in doc["axioms"].as_array().unwrap() {
        assert_eq!(axiom["holds"], true);
    }
}

#[test]
fn reproduce_all_is_the_regression_gate() {
    let out = run(&["reproduce", "all"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["fixtures"].as_array().unwrap().len(), 12);
}

#[test]
fn unknown_fixture_fails_loudly() {
    let out = run(&["reproduce", "FX-NOPE"]);
    assert!(!out.status.success());
}

#[test]
fn trivial_sweep_reports_zero_counterexamples() {
    let out = run(&["sweep", "--kind", "theorem1", "--n", "1", "--s", "1"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["counterexamples"].as_array().unwrap().len(), 0);
}

#[test]
fn sweep_reports_are_byte_identical_across_runs() {
    let args = [
        "sweep", "--kind", "theorem3", "--n", "3", "--s", "2", "--samples", "50", "--seed", "9",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn budget_env_var_is_honoured() {
    let out = bin()
        .args([
            "enumerate",
            "--instance",
            instances().join("fx_ex2.json").to_str().unwrap(),
        ])
        .env("SCHOOL_CHOICE_BUDGET", "2")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
}

#[test]
fn choice_table_instance_runs_through_choice_da() {
    let instance = instances().join("fx_b1.json");
    let out = run(&[
        "run",
        "--mechanism",
        "da-choice",
        "--instance",
        instance.to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["matching"]["1"], "s1");
    assert_eq!(doc["matching"]["2"], "s3");
    assert_eq!(doc["matching"]["3"], "s1");
    assert_eq!(doc["matching"]["4"], "s2");
    // priority mechanisms refuse the table school
    let out = run(&["run", "--mechanism", "da", "--instance", instance.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("choice table"));
}

#[test]
fn colleague_profile_drives_da_bar() {
    let out = run(&[
        "run",
        "--mechanism",
        "da-bar",
        "--instance",
        instances().join("fx_ex2.json").to_str().unwrap(),
        "--ext-profile",
        instances().join("fx_ex2_colleagues.json").to_str().unwrap(),
    ]);
    let doc = stdout_json(&out);
    assert_eq!(doc["matching"]["2"], "s2");
    assert_eq!(doc["matching"]["3"], "s1");
    assert_eq!(doc["defaulted_colleague_orders"].as_array().unwrap().len(), 5);
    assert!(String::from_utf8_lossy(&out.stderr).contains("defaulted"));
}

#[test]
fn shipped_instances_match_the_registry() {
    let text = std::fs::read_to_string(instances().join("fx_ex2.json")).unwrap();
    let parsed = school_choice::instance::parse_instance(&text).unwrap();
    assert_eq!(parsed.context, school_choice::fixtures::fx_ex2_context());
    assert_eq!(parsed.profile, Some(school_choice::fixtures::fx_ex2_profile()));
}
