use std::net::SocketAddr;
use std::path::Path;
use std::sync::mpsc;
use std::sync::Arc;

use aucad_core::metrics::cohens_kappa;
use aucad_core::pairs::read_jsonl;
use aucad_core::review::AnnotationRecord;
use aucad_review_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};

fn entry(i: usize) -> Value {
    json!({
        "id": format!("{i:032x}"),
        "project": "DEMO",
        "issue_key": format!("DEMO-{}", i % 7 + 1),
        "issue_url": format!("https://issues.example.org/browse/DEMO-{}", i % 7 + 1),
        "issue_title": "Raise log level for failed flush",
        "repo": "apache/demo",
        "sha": "ab".repeat(20),
        "file_path": format!("src/F{i}.java"),
        "method_signature": "void flush()",
        "method_before": "void flush() {\n  LOG.debug(\"flush failed\");\n}",
        "method_after": "void flush() {\n  LOG.warn(\"flush failed\");\n}",
        "log_before": "LOG.debug(\"flush failed\");",
        "log_after": "LOG.warn(\"flush failed\");",
        "level_before": "DEBUG",
        "level_after": "WARN",
        "context_rule": "MethodOnly",
        "prompt": "p",
        "chosen": "void flush() {\n  LOG.warn(\"flush failed\");\n}",
        "rejected": "void flush() {\n  LOG.debug(\"flush failed\");\n}",
        "relevance": "Unreviewed"
    })
}

fn write_lines(path: &Path, values: &[Value]) {
    let text: String = values.iter().map(|v| v.to_string() + "\n").collect();
    std::fs::write(path, text).unwrap();
}

fn config(dir: &Path, n: usize, per: usize) -> ServiceConfig {
    let entries = dir.join("entries.jsonl");
    if !entries.exists() {
        write_lines(&entries, &(0..n).map(entry).collect::<Vec<_>>());
        let issue = json!({
            "key": "DEMO-1", "project": "DEMO", "title": "Raise log level for failed flush",
            "description": "Flush failures are only visible at DEBUG.",
            "comments": [{"author": "dev", "body": "Fixed in the linked commit."}],
            "issue_type": "Bug", "resolution_date": "2020-03-04",
            "url": "https://issues.example.org/browse/DEMO-1"
        });
        write_lines(&dir.join("issues.jsonl"), &[issue]);
    }
    ServiceConfig {
        entries,
        issues: Some(dir.join("issues.jsonl")),
        journal: dir.join("labels.jsonl"),
        annotators: vec!["ann1".into(), "ann2".into()],
        per_annotator: per,
        seed: 11,
        adjudicator: Some("lead".into()),
        export_path: dir.join("reviewed.jsonl"),
        static_dir: None,
    }
}

/// Serves on an ephemeral port from a background runtime.
fn start(config: &ServiceConfig) -> String {
    let state = Arc::new(AppState::load(config).unwrap());
    let (tx, rx) = mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, router(state, None)).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    fn new(base: String) -> Self {
        let agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
        Client { base, agent }
    }

    fn get(&self, path: &str) -> (u16, Value) {
        let mut resp = self.agent.get(&format!("{}{path}", self.base)).call().unwrap();
        let status = resp.status().as_u16();
        (status, serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap_or(Value::Null))
    }

    fn send(&self, method: &str, path: &str, annotator: Option<&str>, body: Value) -> (u16, Value) {
        let url = format!("{}{path}", self.base);
        let req = match method {
            "PUT" => self.agent.put(&url),
            _ => self.agent.post(&url),
        };
        let req = match annotator {
            Some(a) => req.header("X-Annotator", a),
            None => req,
        };
        let mut resp = req.content_type("application/json").send(body.to_string()).unwrap();
        let status = resp.status().as_u16();
        (status, serde_json::from_str(&resp.body_mut().read_to_string().unwrap()).unwrap_or(Value::Null))
    }

    fn label(&self, id: &str, annotator: &str, relevant: bool) -> (u16, Value) {
        self.send("PUT", &format!("/api/entries/{id}/label"), Some(annotator), json!({ "relevant": relevant }))
    }
}

fn ids(c: &Client, annotator: &str) -> Vec<String> {
    let (_, page) = c.get(&format!("/api/entries?annotator={annotator}&limit=500"));
    page["items"].as_array().unwrap().iter().map(|i| i["id"].as_str().unwrap().to_string()).collect()
}

#[test]
fn label_round_trip_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 6, 4);
    let c = Client::new(start(&cfg));
    let id = ids(&c, "ann1")[0].clone();

    let (status, ack) = c.label(&id, "ann1", true);
    assert_eq!(status, 200);
    assert_eq!(ack["appended"], true);
    let (_, packet) = c.get(&format!("/api/entries/{id}"));
    assert_eq!(packet["labels"]["ann1"]["relevant"], true);
    assert_eq!(packet["origin_code"], entry(0)["method_before"]);

    let (_, ack) = c.label(&id, "ann1", false);
    assert_eq!(ack["history_len"], 2);
    let (_, ack) = c.label(&id, "ann1", false);
    assert_eq!(ack["appended"], false);

    // A second service over the same journal sees the same state.
    let c2 = Client::new(start(&cfg));
    let (_, again) = c2.get(&format!("/api/entries/{id}"));
    assert_eq!(again["labels"]["ann1"]["relevant"], false);
    assert_eq!(again["history_len"], 2);
}

#[test]
fn packet_carries_issue_context() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(start(&config(dir.path(), 7, 7)));
    let (status, packet) = c.get(&format!("/api/entries/{:032x}", 0));
    assert_eq!(status, 200);
    assert_eq!(packet["issue"]["description"], "Flush failures are only visible at DEBUG.");
    assert_eq!(packet["issue"]["comments"][0]["body"], "Fixed in the linked commit.");
    assert_eq!(packet["accepted_fix"], entry(0)["method_after"]);
    assert_eq!(packet["level_after"], "WARN");
}

#[test]
fn error_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(start(&config(dir.path(), 10, 6)));
    assert_eq!(c.get("/api/entries/nope").0, 404);
    assert_eq!(c.label("nope", "ann1", true).0, 404);
    let mine = ids(&c, "ann1");
    let theirs = ids(&c, "ann2").into_iter().find(|i| !mine.contains(i)).unwrap();
    assert_eq!(c.label(&theirs, "ann1", true).0, 403);
    assert_eq!(c.label(&theirs, "lead", true).0, 200);
    assert_eq!(c.send("PUT", &format!("/api/entries/{theirs}/label"), None, json!({"relevant": true})).0, 400);
    let (status, _) =
        c.send("PUT", &format!("/api/entries/{theirs}/label"), None, json!({"relevant": true, "annotator": "ann2"}));
    assert_eq!(status, 200);
    assert_eq!(c.get("/api/entries?annotator=ghost").0, 404);
    assert_eq!(c.get("/api/entries?cursor=x").0, 400);
}

#[test]
fn pagination_and_plan() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(start(&config(dir.path(), 10, 6)));
    let (_, plan) = c.get("/api/plan");
    assert_eq!(plan["overlap_ids"].as_array().unwrap().len(), 2);
    let (_, first) = c.get("/api/entries?annotator=ann1&limit=4");
    assert_eq!(first["total"], 6);
    assert_eq!(first["next_cursor"], "4");
    let (_, second) = c.get("/api/entries?annotator=ann1&limit=4&cursor=4");
    assert_eq!(second["items"].as_array().unwrap().len(), 2);
    assert_eq!(second["next_cursor"], Value::Null);
    assert_eq!(plan["assignments"]["ann1"][4], second["items"][0]["id"]);
}

#[test]
fn kappa_and_blocked_export() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(start(&config(dir.path(), 4, 4)));
    let (_, empty) = c.get("/api/stats/kappa");
    assert_eq!(empty["stats"], Value::Null);
    assert_eq!(empty["subset_size"], 0);

    let (_, plan) = c.get("/api/plan");
    let overlap: Vec<String> =
        plan["overlap_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    for (id, (a, b)) in overlap.iter().zip([(true, true), (true, false), (false, false), (false, true)]) {
        c.label(id, "ann1", a);
        c.label(id, "ann2", b);
    }
    let (_, k) = c.get("/api/stats/kappa");
    assert_eq!(k["stats"]["kappa"], 0.0);
    assert_eq!(k["stats"]["p_o"], 0.5);

    let (status, blocked) = c.send("POST", "/api/export", None, json!({}));
    assert_eq!(status, 409);
    let listed: Vec<&str> = blocked["unresolved"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    let mut expected = vec![overlap[1].as_str(), overlap[3].as_str()];
    expected.sort();
    assert_eq!(listed, expected);

    let (status, partial) = c.send("POST", "/api/export", None, json!({"allow_partial": true}));
    assert_eq!(status, 200);
    assert_eq!(partial["exported"], 1);
    assert_eq!(partial["unresolved"].as_array().unwrap().len(), 2);
}

#[test]
fn full_review_retention() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 826, 500);
    let c = Client::new(start(&cfg));
    let (_, plan) = c.get("/api/plan");
    assert_eq!(plan["overlap_ids"].as_array().unwrap().len(), 174);

    // 18 entries judged non-relevant by everyone who sees them; the first
    // overlap entries get a split vote that the lead resolves as relevant.
    let mut all: Vec<String> = (0..826).map(|i| format!("{i:032x}")).collect();
    all.sort();
    let rejected: Vec<&String> = all.iter().rev().take(18).collect();
    let overlap: Vec<String> =
        plan["overlap_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let contested: Vec<&String> = overlap.iter().filter(|id| !rejected.contains(id)).take(5).collect();
    for annotator in ["ann1", "ann2"] {
        for id in ids(&c, annotator) {
            let relevant = !rejected.contains(&&id) && !(annotator == "ann2" && contested.contains(&&id));
            assert_eq!(c.label(&id, annotator, relevant).0, 200);
        }
    }
    assert_eq!(c.send("POST", "/api/export", None, json!({})).0, 409);
    for id in &contested {
        c.label(id, "lead", true);
    }
    let (status, summary) = c.send("POST", "/api/export", None, json!({}));
    assert_eq!(status, 200, "{summary}");
    assert_eq!(summary["exported"], 808);
    assert_eq!(summary["non_relevant"], 18);
    assert_eq!(format!("{:.1}", summary["retention"].as_f64().unwrap() * 100.0), "97.8");
    assert_eq!(read_jsonl::<Value>(&cfg.export_path).unwrap().len(), 808);

    // The service's kappa equals the library value computed from the journal.
    let journal: Vec<AnnotationRecord> = read_jsonl(&cfg.journal).unwrap();
    let label = |id: &str, who: &str| journal.iter().rev().find(|r| r.entry_id == id && r.annotator == who).map(|r| r.relevant);
    let (a, b): (Vec<bool>, Vec<bool>) =
        overlap.iter().map(|id| (label(id, "ann1").unwrap(), label(id, "ann2").unwrap())).unzip();
    let (_, k) = c.get("/api/stats/kappa");
    assert_eq!(k["stats"]["kappa"].as_f64().unwrap(), cohens_kappa(&a, &b).unwrap().kappa);
    assert_eq!(k["subset_size"], 174);
}
