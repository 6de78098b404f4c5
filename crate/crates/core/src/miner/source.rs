use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{matches_summary, IssueComment, LogIssue, MinerConfig, QueryPlan};
use crate::http::{bounded_map, HttpClient, TransportError};

/// One search-response payload as returned by the tracker.
#[derive(Debug, Clone)]
pub struct RawPage {
    /// File name or request URL the payload came from.
    pub origin: String,
    pub body: String,
}

pub trait IssueSource {
    fn fetch_pages(&self, plan: &QueryPlan) -> Result<Vec<RawPage>, MineError>;
}

#[derive(Debug, thiserror::Error)]
pub enum MineError {
    #[error(transparent)]
    Config(#[from] super::ConfigError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Recorded search responses, one JSON file per page. Files are consumed in
/// lexicographic name order, so `page-0001.json`, `page-0002.json`, ...
pub struct FixtureIssueSource {
    dir: PathBuf,
}

impl FixtureIssueSource {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FixtureIssueSource { dir: dir.into() }
    }
}

impl IssueSource for FixtureIssueSource {
    fn fetch_pages(&self, plan: &QueryPlan) -> Result<Vec<RawPage>, MineError> {
        let io = |source| MineError::Io { path: self.dir.clone(), source };
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        if let Some(max) = plan.max_pages {
            files.truncate(max);
        }
        files
            .into_iter()
            .map(|path| {
                let body = fs::read_to_string(&path).map_err(|source| MineError::Io { path: path.clone(), source })?;
                Ok(RawPage { origin: file_name(&path), body })
            })
            .collect()
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Live Jira REST search (`/rest/api/2/search`).
pub struct JiraIssueSource {
    base_url: String,
    client: HttpClient,
    concurrency: usize,
}

const SEARCH_FIELDS: &str = "summary,description,comment,issuetype,resolutiondate,project";

impl JiraIssueSource {
    pub fn new(base_url: impl Into<String>, client: HttpClient, concurrency: usize) -> Self {
        JiraIssueSource { base_url: base_url.into().trim_end_matches('/').to_string(), client, concurrency }
    }

    fn page_url(&self, plan: &QueryPlan, start_at: usize) -> String {
        format!(
            "{}/rest/api/2/search?jql={}&startAt={}&maxResults={}&fields={}",
            self.base_url,
            percent_encode(&plan.query_text),
            start_at,
            plan.page_size,
            SEARCH_FIELDS
        )
    }
}

impl IssueSource for JiraIssueSource {
    fn fetch_pages(&self, plan: &QueryPlan) -> Result<Vec<RawPage>, MineError> {
        let first_url = self.page_url(plan, 0);
        let first = self.client.get(&first_url, "application/json")?.unwrap_or_default();
        let total = serde_json::from_str::<Value>(&first)
            .ok()
            .and_then(|v| v.get("total").and_then(Value::as_u64))
            .unwrap_or(0) as usize;
        let mut pages = total.div_ceil(plan.page_size.max(1));
        if let Some(max) = plan.max_pages {
            pages = pages.min(max);
        }
        let rest: Vec<usize> = (1..pages).collect();
        let fetched = bounded_map(rest, self.concurrency, |page| {
            let url = self.page_url(plan, page * plan.page_size);
            self.client.get(&url, "application/json").map(|b| RawPage { origin: url, body: b.unwrap_or_default() })
        });
        let mut out = vec![RawPage { origin: first_url, body: first }];
        for page in fetched {
            out.push(page?);
        }
        Ok(out)
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len() * 3);
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseFailure {
    pub origin: String,
    pub key: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineStats {
    pub pages: usize,
    pub fetched: usize,
    pub kept: usize,
    pub filtered_out: usize,
    pub duplicates: usize,
    pub parse_errors: Vec<ParseFailure>,
}

#[derive(Debug, Clone, Default)]
pub struct MineOutcome {
    pub issues: Vec<LogIssue>,
    pub stats: MineStats,
}

#[derive(Deserialize)]
struct WireIssue {
    key: String,
    fields: WireFields,
}

#[derive(Deserialize)]
struct WireFields {
    summary: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    comment: Option<WireComments>,
    issuetype: WireNamed,
    #[serde(default)]
    resolutiondate: Option<String>,
    project: WireProject,
}

#[derive(Deserialize)]
struct WireComments {
    #[serde(default)]
    comments: Vec<WireComment>,
}

#[derive(Deserialize)]
struct WireComment {
    #[serde(default)]
    author: Option<WireAuthor>,
    #[serde(default)]
    body: String,
}

#[derive(Deserialize)]
struct WireAuthor {
    #[serde(default, rename = "displayName")]
    display_name: Option<String>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Deserialize)]
struct WireNamed {
    name: String,
}

#[derive(Deserialize)]
struct WireProject {
    key: String,
}

fn parse_issue(value: Value, browse_base: &str) -> Result<LogIssue, String> {
    let wire: WireIssue = serde_json::from_value(value).map_err(|e| e.to_string())?;
    let resolution_date = match wire.fields.resolutiondate.as_deref() {
        None | Some("") => None,
        Some(raw) => Some(
            raw.get(..10)
                .and_then(|d| NaiveDate::parse_from_str(d, "%Y-%m-%d").ok())
                .ok_or_else(|| format!("bad resolutiondate `{raw}`"))?,
        ),
    };
    let comments = wire
        .fields
        .comment
        .map(|c| c.comments)
        .unwrap_or_default()
        .into_iter()
        .map(|c| IssueComment {
            author: c.author.and_then(|a| a.display_name.or(a.name)).unwrap_or_default(),
            body: c.body,
        })
        .collect();
    Ok(LogIssue {
        url: format!("{}/browse/{}", browse_base.trim_end_matches('/'), wire.key),
        key: wire.key,
        project: wire.fields.project.key,
        title: wire.fields.summary,
        description: wire.fields.description.unwrap_or_default(),
        comments,
        issue_type: wire.fields.issuetype.name,
        resolution_date,
    })
}

fn keep_issue(issue: &LogIssue, config: &MinerConfig) -> bool {
    if !matches_summary(&issue.title, config) {
        return false;
    }
    if !config.issue_types.is_empty()
        && !config.issue_types.iter().any(|t| t.eq_ignore_ascii_case(&issue.issue_type))
    {
        return false;
    }
    if !config.projects.is_empty() && !config.projects.iter().any(|p| p == &issue.project) {
        return false;
    }
    if config.require_resolved {
        return issue
            .resolution_date
            .is_some_and(|d| config.date_from <= d && d <= config.date_to);
    }
    true
}

/// Fetches, parses and re-filters every page of a query.
///
/// Malformed issues (or whole pages) are recorded in the stats and skipped.
/// Output is deduplicated by key and ordered by project, then issue number.
pub fn fetch_issues(
    source: &dyn IssueSource,
    plan: &QueryPlan,
    config: &MinerConfig,
    browse_base: &str,
) -> Result<MineOutcome, MineError> {
    config.validate()?;
    let pages = source.fetch_pages(plan)?;
    let mut outcome = MineOutcome::default();
    outcome.stats.pages = pages.len();
    let mut seen = BTreeSet::new();

    for page in pages {
        let issues = match serde_json::from_str::<Value>(&page.body) {
            Ok(Value::Object(mut obj)) => match obj.remove("issues") {
                Some(Value::Array(items)) => items,
                _ => {
                    outcome.stats.parse_errors.push(ParseFailure {
                        origin: page.origin,
                        key: None,
                        message: "payload has no `issues` array".into(),
                    });
                    continue;
                }
            },
            Ok(_) => {
                outcome.stats.parse_errors.push(ParseFailure {
                    origin: page.origin,
                    key: None,
                    message: "payload is not a JSON object".into(),
                });
                continue;
            }
            Err(e) => {
                outcome.stats.parse_errors.push(ParseFailure { origin: page.origin, key: None, message: e.to_string() });
                continue;
            }
        };
        for raw in issues {
            let key = raw.get("key").and_then(Value::as_str).map(str::to_string);
            outcome.stats.fetched += 1;
            match parse_issue(raw, browse_base) {
                Ok(issue) => {
                    if !keep_issue(&issue, config) {
                        outcome.stats.filtered_out += 1;
                    } else if !seen.insert(issue.key.clone()) {
                        outcome.stats.duplicates += 1;
                    } else {
                        outcome.issues.push(issue);
                    }
                }
                Err(message) => {
                    log::warn!("{}: skipping issue {:?}: {message}", page.origin, key);
                    outcome.stats.parse_errors.push(ParseFailure { origin: page.origin.clone(), key, message });
                }
            }
        }
    }
    outcome.issues.sort_by_key(LogIssue::sort_key);
    outcome.stats.kept = outcome.issues.len();
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issue_json(key: &str, summary: &str, ty: &str, resolved: Option<&str>) -> Value {
        serde_json::json!({
            "key": key,
            "fields": {
                "summary": summary,
                "description": "desc",
                "comment": {"comments": [{"author": {"displayName": "Ann"}, "body": "see PR"}]},
                "issuetype": {"name": ty},
                "resolutiondate": resolved,
                "project": {"key": key.split('-').next().unwrap()}
            }
        })
    }

    struct Pages(Vec<String>);

    impl IssueSource for Pages {
        fn fetch_pages(&self, _: &QueryPlan) -> Result<Vec<RawPage>, MineError> {
            Ok(self
                .0
                .iter()
                .enumerate()
                .map(|(i, b)| RawPage { origin: format!("p{i}"), body: b.clone() })
                .collect())
        }
    }

    fn plan() -> QueryPlan {
        super::super::build_query(&MinerConfig::default()).unwrap()
    }

    #[test]
    fn filters_dedups_and_sorts() {
        let page1 = serde_json::json!({"issues": [
            issue_json("FLINK-20", "Log level too high", "Bug", Some("2020-01-02T00:00:00.000+0000")),
            issue_json("FLINK-3", "Improve logging", "Improvement", Some("2019-01-02T00:00:00.000+0000")),
            issue_json("FLINK-4", "Cannot log in", "Bug", Some("2019-01-02T00:00:00.000+0000")),
        ]});
        let page2 = serde_json::json!({"issues": [
            issue_json("FLINK-20", "Log level too high", "Bug", Some("2020-01-02T00:00:00.000+0000")),
            issue_json("AVRO-9", "print stack trace", "Task", Some("2019-01-02T00:00:00.000+0000")),
            issue_json("AVRO-10", "Remove logger", "Bug", None),
            issue_json("AVRO-11", "Remove logger", "Bug", Some("2025-02-01T00:00:00.000+0000")),
        ]});
        let src = Pages(vec![page1.to_string(), page2.to_string()]);
        let out = fetch_issues(&src, &plan(), &MinerConfig::default(), "https://issues.apache.org/jira").unwrap();
        let keys: Vec<_> = out.issues.iter().map(|i| i.key.as_str()).collect();
        assert_eq!(keys, ["FLINK-3", "FLINK-20"]);
        assert_eq!(out.stats.fetched, 7);
        assert_eq!(out.stats.duplicates, 1);
        assert_eq!(out.stats.filtered_out, 4);
        assert_eq!(out.issues[0].url, "https://issues.apache.org/jira/browse/FLINK-3");
        assert_eq!(out.issues[0].comments[0].author, "Ann");
    }

    #[test]
    fn corrupt_issue_is_skipped() {
        let page = serde_json::json!({"issues": [
            issue_json("HDFS-1", "Add logging", "Bug", Some("2020-01-02T00:00:00.000+0000")),
            {"key": "HDFS-2", "fields": {"summary": 7}},
        ]});
        let src = Pages(vec![page.to_string(), "not json".into()]);
        let out = fetch_issues(&src, &plan(), &MinerConfig::default(), "x").unwrap();
        assert_eq!(out.issues.len(), 1);
        assert_eq!(out.stats.parse_errors.len(), 2);
        assert_eq!(out.stats.parse_errors[0].key.as_deref(), Some("HDFS-2"));
    }

    #[test]
    fn encodes_jql() {
        assert_eq!(percent_encode("a b\"c"), "a%20b%22c");
    }
}
