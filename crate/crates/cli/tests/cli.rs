use std::path::PathBuf;
use std::process::{Command, Output};

use eacode::codes::{self, fixture, Fixture};
use serde_json::Value;

fn eacode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eacode"))
        .args(args)
        .env_remove("EACODE_TOL_RANK")
        .env_remove("EACODE_TOL_RESIDUAL")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn run(args: &[&str]) -> (i32, String) {
    let out = eacode(args);
    (out.status.code().expect("exit code"), stdout(&out))
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let (code, text) = run(&full);
    (code, serde_json::from_str(&text).unwrap_or(Value::Null))
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn analyze_steane_degenerate() {
    let (code, text) = run(&["analyze", "--fixture", "steane", "--subset", "4,5,6,7"]);
    assert_eq!(code, 0);
    assert!(text.contains("correctable: yes, class: degenerate, C: 4"), "{text}");
}

#[test]
fn analyze_pi_pure() {
    let (code, text) = run(&["analyze", "--fixture", "pi_4_2_2", "--subset", "4"]);
    assert_eq!(code, 0);
    assert!(text.contains("class: pure"), "{text}");
}

#[test]
fn whole_code_erasure_is_not_correctable() {
    let (code, text) = run(&["analyze", "--fixture", "steane", "--subset", "1,2,3,4,5,6,7"]);
    assert_eq!(code, 2);
    assert!(text.contains("correctable: no"));
    let (code, text) = run(&["analyze", "--fixture", "pi_4_2_2", "--subset", "3,4"]);
    assert_eq!(code, 2);
    assert!(text.contains("correctable: no"));
}

#[test]
fn decompose_examples() {
    let (code, text) = run(&["decompose", "--fixture", "pi_7_2_3", "--subset", "6,7"]);
    assert_eq!(code, 0);
    assert!(text.contains("((5,2,3;3)), ebit cost 2"), "{text}");
    let (code, text) = run(&["decompose", "--fixture", "xp_7_8_2", "--subset", "7"]);
    assert_eq!(code, 0);
    assert!(text.contains("((6,8,2;2))"), "{text}");
    let (code, text) = run(&["decompose", "--fixture", "five_qubit", "--subset", "4,5"]);
    assert_eq!(code, 0);
    assert!(text.contains("stabilizer: [[3,1,3;2]]"), "{text}");
}

#[test]
fn decompose_violation_exit_code() {
    let (code, _) = run(&["decompose", "--fixture", "pi_4_2_2", "--subset", "3,4"]);
    assert_eq!(code, 3);
}

#[test]
fn verify_examples() {
    let five = ["verify", "--fixture", "five_qubit", "--subset", "4,5"];
    let (code, text) = run(&[&five[..], &["--model", "noisy", "--weight", "1"]].concat());
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("result: pass"));
    let (code, _) = run(&[&five[..], &["--model", "noiseless", "--weight", "1", "--presend"]].concat());
    assert_eq!(code, 0);
    let out = eacode(&["verify", "--fixture", "steane", "--subset", "4,5,6,7", "--compressed", "--model", "noisy"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("noiseless"));
    let (code, _) = run(&["verify", "--fixture", "pi_4_2_2", "--subset", "4", "--model", "noiseless", "--weight", "0"]);
    assert_eq!(code, 0);
}

#[test]
fn verify_explore_reports_without_verdict() {
    let (code, report) = json(&[
        "verify", "--fixture", "steane", "--subset", "4,5,6,7", "--compressed", "--model", "noisy", "--weight", "1",
        "--explore",
    ]);
    assert_eq!(code, 0);
    assert_eq!(report["exploratory"], Value::Bool(true));
    assert!(report["min_fidelity"].as_f64().is_some());
}

#[test]
fn verify_weight_beyond_distance_is_input_error() {
    let (code, _) = run(&["verify", "--fixture", "pi_4_2_2", "--subset", "4", "--weight", "1"]);
    assert_eq!(code, 1);
}

#[test]
fn distance_scan_and_fixtures() {
    assert_eq!(run(&["distance", "--fixture", "steane"]), (0, "3\n".to_string()));
    let (code, text) = run(&["distance", "--fixture", "pi_4_2_2", "--max-weight", "1"]);
    assert_eq!((code, text.trim()), (0, ">= 2"));
    let (code, rows) = json(&["scan", "--fixture", "five_qubit", "--size", "2"]);
    assert_eq!(code, 0);
    let rows = rows.as_array().unwrap().clone();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|r| r["trichotomy"] == "pure"));
    let (code, text) = run(&["fixtures", "--list"]);
    assert_eq!(code, 0);
    let names: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(names, ["five_qubit", "steane", "pi_4_2_2", "pi_7_2_3", "xp_7_8_2"]);
}

#[test]
fn emitted_fixtures_round_trip() {
    for f in Fixture::ALL {
        let path = scratch(&format!("{f}.json"));
        let (code, _) = run(&["fixtures", "--emit", f.name(), "--output", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&path).unwrap();
        let loaded = codes::code_from_json(&text).unwrap();
        let original = fixture(f).unwrap();
        let gap = (codes::projector(&loaded) - codes::projector(&original)).norm();
        assert!(gap <= 1e-12, "{f}: {gap:e}");
        let (code, reloaded) = run(&["distance", "--input", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        let want = codes::min_distance(&original, original.n()).unwrap().to_string();
        assert_eq!(reloaded.trim(), want);
    }
}

#[test]
fn stabilizer_inputs() {
    let inline = ["--stabilizers", "XZZXI,ZYYZI,ZZXIX,YYZIZ"];
    let (code, text) = run(&[&["decompose"][..], &inline, &["--subset", "4,5"]].concat());
    assert_eq!(code, 0);
    assert!(text.contains("[[3,1,3;2]]"));
    let path = scratch("five_qubit_stab.json");
    let (code, _) = run(&["fixtures", "--emit", "five_qubit", "--stabilizers", "--output", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (code, text) = run(&["analyze", "--input", path.to_str().unwrap(), "--subset", "1,2"]);
    assert_eq!(code, 0);
    assert!(text.contains("class: pure"));
    let (code, _) = run(&["analyze", "--stabilizers=-XX,ZZ", "--subset", "1"]);
    assert_eq!(code, 0);
    // anticommuting generators without extension give an empty codespace
    let (code, _) = run(&["analyze", "--stabilizers", "XZZ,ZYY", "--subset", "1"]);
    assert_eq!(code, 1);
}

#[test]
fn input_errors() {
    assert_eq!(run(&["analyze", "--fixture", "toric", "--subset", "1"]).0, 1);
    assert_eq!(run(&["analyze", "--fixture", "steane", "--subset", "0"]).0, 1);
    assert_eq!(run(&["analyze", "--fixture", "steane", "--subset", "8"]).0, 1);
    assert_eq!(run(&["analyze", "--stabilizers", "XQ", "--subset", "1"]).0, 1);
    assert_eq!(run(&["analyze", "--input", "/nonexistent.json", "--subset", "1"]).0, 1);
    assert_eq!(run(&["analyze", "--fixture", "steane", "--stabilizers", "XX", "--subset", "1"]).0, 1);
    assert_eq!(run(&["analyze", "--subset", "1"]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
}

#[test]
fn text_and_json_agree() {
    let args = ["analyze", "--fixture", "pi_7_2_3", "--subset", "6,7"];
    let (_, text) = run(&args);
    let (_, report) = json(&args);
    let residual = report["max_residual"].as_f64().unwrap();
    assert!(text.contains(&format!("max residual: {residual:e}")));
    let spectrum: Vec<f64> = serde_json::from_value(report["rho_b_spectrum"].clone()).unwrap();
    assert!(text.contains(&format!("{spectrum:?}")));
    let (_, text) = run(&["decompose", "--fixture", "pi_7_2_3", "--subset", "6,7"]);
    let (_, report) = json(&["decompose", "--fixture", "pi_7_2_3", "--subset", "6,7"]);
    assert_eq!(report["compressed"]["parameters"], "((5,2,3;3))");
    assert_eq!(report["compressed"]["ebit_cost"], 2);
    let defect = report["decomposition"]["isometry_defect"].as_f64().unwrap();
    assert!(text.contains(&format!("isometry defect: {defect:e}")));
}

#[test]
fn full_lambda_only_on_request() {
    let (_, plain) = json(&["analyze", "--fixture", "pi_4_2_2", "--subset", "4"]);
    assert!(plain.get("lambda").is_none());
    let (_, full) = json(&["analyze", "--fixture", "pi_4_2_2", "--subset", "4", "--full"]);
    assert_eq!(full["lambda"].as_array().unwrap().len(), 4);
}

#[test]
fn tolerance_precedence() {
    let base = ["analyze", "--fixture", "pi_4_2_2", "--subset", "4"];
    let with_env = |value: &str, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_eacode"))
            .args(base)
            .args(extra)
            .env("EACODE_TOL_RESIDUAL", value)
            .output()
            .unwrap()
            .status
            .code()
    };
    // a negative slack rejects everything, so the env value is visibly in effect
    assert_eq!(with_env("-1", &[]), Some(2));
    assert_eq!(with_env("-1", &["--tol-residual", "1e-8"]), Some(0));
    assert_eq!(with_env("1e-8", &["--tol-residual=-1"]), Some(2));
    assert_eq!(run(&base).0, 0);
    assert_eq!(with_env("abc", &[]), Some(1));
}
