//! Exit-code and report-shape contract of the `ptlab` binary, exercised
//! over the bundled circuit corpus.

use std::process::{Command, Output};

use serde_json::Value;

fn circuits(name: &str) -> String {
    format!("{}/circuits/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn ptlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report(output: &Output) -> Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("exit code")
}

#[test]
fn check_leak_broadcast() {
    let out = ptlab(&["check", "leak", &circuits("broadcast2.ptc"), "--json-only"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["results"]["kind"], "Broadcast");
    assert_eq!(r["results"]["holds"], true);
    assert_eq!(r["schema_version"], 1);
    assert!(out.stderr.is_empty());
}

#[test]
fn check_pure_noisy_channel_fails_with_pattern() {
    let out = ptlab(&["check", "pure", &circuits("noisy_channel.ptc"), "--json-only"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert_eq!(r["results"]["holds"], false);
    assert!(r["results"]["violation"].as_str().unwrap().contains("nonzero"));
}

#[test]
fn check_causal_cap_fails() {
    let out = ptlab(&["check", "causal", &circuits("cap.ptc")]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert_eq!(r["results"]["holds"], false);
    assert!(r["results"]["residual"].as_f64().unwrap() > 0.5);
    assert!(!out.stderr.is_empty());
}

#[test]
fn quality_values() {
    let out = ptlab(&["quality", &circuits("broadcast4.ptc"), "--json-only"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!((r["results"]["normalized"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let out = ptlab(&["quality", &circuits("constant_leak.ptc"), "--json-only"]);
    let r = report(&out);
    assert!(r["results"]["normalized"].as_f64().unwrap().abs() < 1e-9);

    let out = ptlab(&["quality", &circuits("mixture_quarter.ptc"), "--json-only"]);
    let r = report(&out);
    assert!((r["results"]["normalized"].as_f64().unwrap() - 0.25).abs() < 1e-9);
}

#[test]
fn quality_of_non_leak_fails() {
    let out = ptlab(&["quality", &circuits("noisy_channel.ptc"), "--json-only"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert!(r["results"]["error"].as_str().unwrap().contains("not a leak"));
}

#[test]
fn construct_dephasing_with_apply() {
    let out = ptlab(&[
        "construct",
        &circuits("dephasing_copy.ptc"),
        "--apply",
        &circuits("hadamard.ptc"),
        "--json-only",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert_eq!(r["results"]["dephasing_instance"], true);
    let m = &r["results"]["extracted_classical"];
    for row in 0..2 {
        for col in 0..2 {
            let re = m[row][col][0].as_f64().unwrap();
            assert!((re - 0.5).abs() < 1e-9);
        }
    }
}

#[test]
fn construct_rejects_non_idempotent_marginal() {
    let out = ptlab(&["construct", &circuits("mixture_flipped.ptc"), "--json-only"]);
    assert_eq!(code(&out), 1);
    let r = report(&out);
    assert!(r["results"]["error"].as_str().unwrap().contains("idempotent"));
}

#[test]
fn construct_on_a_leak_is_the_identity_construction() {
    let out = ptlab(&[
        "construct",
        &circuits("broadcast2.ptc"),
        "--apply",
        &circuits("noisy_channel.ptc"),
        "--json-only",
    ]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(r["results"]["membership_residual"].as_f64().unwrap() < 1e-12);
}

#[test]
fn parse_reports_canonical_form() {
    let out = ptlab(&["parse", &circuits("yanking.ptc"), "--json-only"]);
    assert_eq!(code(&out), 0);
    let r = report(&out);
    assert!(r["results"]["canonical"]
        .as_str()
        .unwrap()
        .contains("cap(A) * id(A)"));
    assert_eq!(r["results"]["has_main"], true);
}

#[test]
fn parse_error_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ptc");
    std::fs::write(&path, "system A = classical(2)\nmain = id(B)").unwrap();
    let out = ptlab(&["parse", path.to_str().unwrap(), "--json-only"]);
    assert_eq!(code(&out), 2);
    let r = report(&out);
    assert!(r["results"]["error"].as_str().unwrap().contains("line 2"));
}

#[test]
fn missing_file_exits_2() {
    let out = ptlab(&["check", "leak", "no_such_file.ptc", "--json-only"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn tolerance_env_override_must_be_numeric() {
    let out = Command::new(env!("CARGO_BIN_EXE_ptlab"))
        .args(["check", "causal", &circuits("broadcast2.ptc"), "--json-only"])
        .env("PTLAB_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn reports_are_json_across_the_corpus() {
    let dir = format!("{}/circuits", env!("CARGO_MANIFEST_DIR"));
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("ptc") {
            continue;
        }
        for what in ["causal", "cp", "leak", "broadcast", "pure"] {
            let out = ptlab(&["check", what, path.to_str().unwrap(), "--json-only"]);
            let parsed: Result<Value, _> = serde_json::from_slice(&out.stdout);
            assert!(
                parsed.is_ok(),
                "check {what} {path:?} produced non-JSON stdout"
            );
            assert!(code(&out) <= 2);
        }
    }
}
