use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn aucad(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aucad")).args(args).current_dir(cwd).output().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn offline_without_fixtures_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = aucad(&["--offline", "mine"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fixtures"));
}

#[test]
fn missing_inputs_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().to_str().unwrap();
    assert_eq!(aucad(&["--offline", "--fixtures", fx, "extract"], dir.path()).status.code(), Some(2));
    assert_eq!(aucad(&["--config", "nope.toml", "run"], dir.path()).status.code(), Some(2));
    assert_eq!(aucad(&["eval", "--truth", "t.jsonl", "--responses", "r.jsonl"], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("aucad.toml"), "[tracker]\npage_size = 0\n").unwrap();
    assert_eq!(aucad(&["--config", "aucad.toml", "mine"], dir.path()).status.code(), Some(1));
    std::fs::write(dir.path().join("aucad.toml"), "unknown_key = true\n").unwrap();
    assert_eq!(aucad(&["--config", "aucad.toml", "mine"], dir.path()).status.code(), Some(1));
}

#[test]
fn eval_matches_hand_labelled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let eval = fixtures().join("eval");
    let arg = |name: &str| eval.join(name).to_str().unwrap().to_string();
    let out = aucad(
        &[
            "eval",
            "--truth",
            &arg("truth.jsonl"),
            "--responses",
            &arg("responses.jsonl"),
            "--level-matrix",
            &arg("level_matrix.json"),
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    let summary = stdout_json(&out);
    assert_eq!(summary["unmatched_responses"], 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report, summary["report"]);
    assert_eq!(report["samples"], 9);
    assert_eq!(report["missing"], 2);

    // Per-sample expectations counted by hand; e6 drops the log, e7 has no response.
    let bleu_e8 = (1.0f64 / 12.0).powf(0.25);
    let bleu_e9 = (-0.25f64).exp();
    let expected: [(&str, [f64; 8]); 9] = [
        ("e1", [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        ("e2", [1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        ("e3", [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        ("e4", [1.0, 1.0, 1.0, 2.0 / 3.0, 0.0, 1.0, 1.0, 1.0]),
        ("e5", [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 1.0, 2.0 / 3.0]),
        ("e6", [0.0; 8]),
        ("e7", [0.0; 8]),
        ("e8", [1.0, 1.0, 1.0, 5.0 / 6.0, bleu_e8, 1.0, 1.0, 1.0]),
        ("e9", [1.0, 1.0, 1.0, 1.0, bleu_e9, 1.0, 1.0, 1.0]),
    ];
    let names = ["pa", "la", "adj_la", "ma", "bleu_dm", "vp", "vr", "vf1"];
    let per_sample = report["per_sample"].as_array().unwrap();
    for (id, values) in &expected {
        let got = per_sample.iter().find(|s| s["id"] == *id).unwrap();
        for (name, want) in names.iter().zip(values) {
            let v = got[name].as_f64().unwrap();
            assert!((v - want).abs() < 1e-12, "{id}.{name}: {v} vs {want}");
        }
    }
    for (k, name) in names.iter().enumerate() {
        let mean = expected.iter().map(|(_, v)| v[k]).sum::<f64>() / 9.0;
        let got = report["means"][name].as_f64().unwrap();
        assert!((got - mean).abs() < 1e-12, "mean {name}: {got} vs {mean}");
    }
}

#[test]
fn prompt_prints_template() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("A.java"), "void f() {\n  g();\n}\n").unwrap();
    let out = aucad(&["prompt", "A.java"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("Recommend the optimal log statements in the following given codes.\n"));
    assert!(text.ends_with("Code:\n```void f() {\n  g();\n}```"), "{text}");
}

#[test]
fn kappa_over_journal() {
    let dir = tempfile::tempdir().unwrap();
    let rows = [("a", "ann1", true), ("b", "ann1", true), ("c", "ann1", false), ("d", "ann1", false)]
        .into_iter()
        .chain([("a", "ann2", true), ("b", "ann2", false), ("c", "ann2", false), ("d", "ann2", true)]);
    let journal: String = rows
        .map(|(e, a, r)| {
            serde_json::json!({"entry_id": e, "annotator": a, "relevant": r, "note": "", "timestamp": "t"}).to_string() + "\n"
        })
        .collect();
    std::fs::write(dir.path().join("labels.jsonl"), journal).unwrap();
    let summary = stdout_json(&aucad(&["kappa", "--journal", "labels.jsonl"], dir.path()));
    assert_eq!(summary["subset_size"], 4);
    assert_eq!(summary["stats"]["kappa"], 0.0);
}
