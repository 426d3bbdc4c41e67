use std::path::Path;
use std::process::{Command, Output};

fn isrht(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isrht"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn assert_ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_project_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&isrht(&["synth", "--n", "20", "--seed", "5", "--out", "synth.txt", "--dim", "300"], d));
    assert_ok(&isrht(
        &[
            "project", "--data", "synth.txt", "--out", "z.txt", "--method", "isrht-supervised", "--r", "4",
            "--model-out", "model.json",
        ],
        d,
    ));
    let z = std::fs::read_to_string(d.join("z.txt")).unwrap();
    assert_eq!(z.lines().count(), 40);

    // re-applying the saved model reproduces the embedding
    assert_ok(&isrht(&["project", "--data", "synth.txt", "--out", "z2.txt", "--model", "model.json"], d));
    assert_eq!(std::fs::read_to_string(d.join("z2.txt")).unwrap(), z);

    let out = isrht(&["inspect", "model.json"], d);
    assert_ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("isrht-supervised") && text.contains("padded dim:  512"), "{text}");
}

#[test]
fn run_writes_the_configured_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_ok(&isrht(&["synth", "--n", "30", "--out", "data.txt"], d));
    std::fs::write(
        d.join("cfg.json"),
        r#"{"train_path": "data.txt", "methods": ["srht", "achlioptas"], "r_values": [1],
            "repetitions": 2, "c_grid": [1.0], "output": "out.json", "format": "json"}"#,
    )
    .unwrap();
    assert_ok(&isrht(&["run", "--config", "cfg.json"], d));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("out.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert_eq!(report["aggregates"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"train_path": "x", "methods": ["nope"], "r_values": [1]}"#).unwrap();
    let out = isrht(&["run", "--config", "cfg.json"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));

    let out = isrht(&["project", "--data", "missing.txt", "--out", "z.txt", "--method", "srht", "--r", "2"], d);
    assert!(!out.status.success());
    let out = isrht(&["inspect", "missing.json"], d);
    assert!(!out.status.success());
}
