use std::path::Path;
use std::process::{Command, Output};

use mring_cli::{emit_config, parse_config, report_body, RunConfig};
use mring_core::MismatchMode;
use proptest::prelude::*;
use serde_json::Value;

fn mring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mring"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const ZERO_FIELD: &str = r#"{"n1":7,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0}"#;
const WEAK_FIELD: &str = r#"{"n1":4,"n2":4,"theta_over_pi":0.25,"alpha_over_pi":0.05}"#;

#[test]
fn profile_csv_has_closing_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", ZERO_FIELD);
    let out = dir.path().join("p.csv");
    let status = mring(&[
        "profile",
        "--config",
        &cfg,
        "--energy",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "site,prob_a,prob_b");
    assert_eq!(rows.len(), 16);
    assert_eq!(
        rows[1].split_once(',').unwrap().1,
        rows[15].split_once(',').unwrap().1
    );
    let a: Vec<f64> = rows[1..15]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn transfer_writes_report_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", WEAK_FIELD);
    let report = dir.path().join("r.json");
    let csv = dir.path().join("m.csv");
    let out = mring(&[
        "transfer",
        "--config",
        &cfg,
        "--out",
        report.to_str().unwrap(),
        "--per-site",
        csv.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    for key in [
        "M",
        "theta_over_pi",
        "alpha_over_pi",
        "period_T",
        "steps_applied",
        "mismatch_raw",
        "mismatch_aligned",
        "per_site_mismatch",
        "c_plus",
        "c_minus",
        "residual_R2",
        "manifest",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["steps_applied"], 64);
    assert_eq!(v["alpha_over_pi"].as_f64().unwrap(), 0.05);
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.last().unwrap().as_str(), "manifest");
    let outputs = v["manifest"]["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("site,mismatch\n"));
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn spectrum_modes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", ZERO_FIELD);
    let numeric = mring(&["spectrum", "--config", &cfg, "--numeric"]);
    let v: Value = serde_json::from_slice(&numeric.stdout).unwrap();
    assert_eq!(v["quasi_energies"].as_array().unwrap().len(), 28);
    let analytic = mring(&["spectrum", "--config", &cfg, "--analytic"]);
    let v: Value = serde_json::from_slice(&analytic.stdout).unwrap();
    assert_eq!(v["solutions"].as_array().unwrap().len(), 4);
}

#[test]
fn sequence_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", WEAK_FIELD);
    let out = mring(&["sequence", "--config", &cfg, "--gates", "1"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["target_label"], "|1>");
    assert_eq!(v["total_steps"], 64);
    assert!(
        mring(&["sequence", "--config", &cfg, "--gates", "12"])
            .status
            .code()
            == Some(2)
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{"n1":0,"n2":7,"theta_over_pi":0.25,"alpha_over_pi":0}"#,
    );
    let out = mring(&["transfer", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n1"));

    let strong = write_config(
        dir.path(),
        "s.json",
        r#"{"n1":4,"n2":4,"theta_over_pi":0.25,"alpha_over_pi":0.2}"#,
    );
    assert_eq!(
        mring(&["transfer", "--config", &strong]).status.code(),
        Some(3)
    );

    let short = write_config(dir.path(), "p.json", WEAK_FIELD);
    assert_eq!(
        mring(&["period", "--config", &short, "--horizon", "50"])
            .status
            .code(),
        Some(4)
    );

    assert_eq!(
        mring(&["transfer", "--config", "/nonexistent/c.json"])
            .status
            .code(),
        Some(2)
    );
    let unwritable = mring(&[
        "transfer",
        "--config",
        &short,
        "--out",
        "/nonexistent/dir/r.json",
    ]);
    assert_eq!(unwritable.status.code(), Some(1));
}

#[test]
fn period_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", WEAK_FIELD);
    let out = mring(&["period", "--config", &cfg, "--horizon", "2000"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["period_measured"].as_f64().unwrap() - 128.1).abs() < 2.0);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", WEAK_FIELD);
    let a = mring(&["transfer", "--config", &cfg]).stdout;
    let b = mring(&["transfer", "--config", &cfg]).stdout;
    let (a, b) = (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap());
    assert_eq!(report_body(&a), report_body(&b));
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    (
        1usize..50,
        1usize..50,
        1e-6f64..0.499,
        -1.0f64..1.0,
        prop::option::of(0usize..10_000),
        prop::option::of(prop::bool::ANY),
    )
        .prop_map(|(n1, n2, t, a, steps, raw)| RunConfig {
            n1,
            n2,
            theta_over_pi: t,
            alpha_over_pi: a,
            steps,
            mode: raw.map(|r| {
                if r {
                    MismatchMode::Raw
                } else {
                    MismatchMode::PhaseAligned
                }
            }),
        })
}

proptest! {
    #[test]
    fn config_round_trip(c in run_config()) {
        let text = emit_config(&c).unwrap();
        prop_assert_eq!(parse_config(&text).unwrap(), c);
    }
}
