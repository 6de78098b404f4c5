use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::bundle::CommitBundle;
use super::{extract_links, is_sha, LinkKind, RepoLink};
use crate::http::{bounded_map, HttpClient, TransportError};
use crate::miner::LogIssue;

/// One commit event of a pull request (or issue) timeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineCommit {
    pub sha: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitFile {
    pub filename: String,
    pub status: String,
    #[serde(default)]
    pub previous_filename: Option<String>,
    /// Absent when the forge truncates large diffs.
    #[serde(default)]
    pub patch: Option<String>,
}

/// Subset of the GitHub "get a commit" payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitPayload {
    pub sha: String,
    #[serde(default)]
    pub parents: Vec<ParentRef>,
    #[serde(default)]
    pub files: Vec<CommitFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParentRef {
    pub sha: String,
}

/// Read access to a code forge. `Ok(None)` means "does not exist".
pub trait Forge: Sync {
    fn timeline(&self, repo: &str, number: u64) -> Result<Option<Vec<TimelineCommit>>, LinkError>;
    fn commit(&self, repo: &str, sha: &str) -> Result<Option<CommitPayload>, LinkError>;
    fn file_at(&self, repo: &str, sha: &str, path: &str) -> Result<Option<String>, LinkError>;
}

#[derive(Debug, thiserror::Error)]
pub enum LinkError {
    #[error("unresolvable link {repo}#{identifier}: {reason}")]
    Unresolvable { repo: String, identifier: String, reason: String },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("malformed forge payload from {origin}: {message}")]
    Payload { origin: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl LinkError {
    pub fn is_fatal(&self) -> bool {
        matches!(self, LinkError::Transport(t) if t.is_fatal()) || matches!(self, LinkError::Io { .. })
    }
}

/// Timeline events carrying a commit, in the order the forge lists them.
fn timeline_commits(events: &[Value]) -> Vec<TimelineCommit> {
    events
        .iter()
        .filter_map(|e| {
            let sha = match e.get("event").and_then(Value::as_str)? {
                "committed" => e.get("sha"),
                "referenced" => e.get("commit_id"),
                _ => None,
            }?;
            sha.as_str().map(|s| TimelineCommit { sha: s.to_string() })
        })
        .collect()
}

fn parse_payload<T: serde::de::DeserializeOwned>(origin: &str, body: &str) -> Result<T, LinkError> {
    serde_json::from_str(body).map_err(|e| LinkError::Payload { origin: origin.to_string(), message: e.to_string() })
}

/// Recorded forge responses laid out like the REST paths:
///
/// ```text
/// repos/<owner>/<name>/commits/<sha>.json
/// repos/<owner>/<name>/issues/<number>/timeline.json
/// repos/<owner>/<name>/contents/<sha>/<path>
/// ```
pub struct FixtureForge {
    root: PathBuf,
}

impl FixtureForge {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        FixtureForge { root: root.into() }
    }

    fn read(&self, rel: String) -> Result<Option<(String, String)>, LinkError> {
        let path = self.root.join("repos").join(&rel);
        match fs::read_to_string(&path) {
            Ok(body) => Ok(Some((rel, body))),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(source) => Err(LinkError::Io { path, source }),
        }
    }
}

impl Forge for FixtureForge {
    fn timeline(&self, repo: &str, number: u64) -> Result<Option<Vec<TimelineCommit>>, LinkError> {
        self.read(format!("{repo}/issues/{number}/timeline.json"))?
            .map(|(origin, body)| parse_payload::<Vec<Value>>(&origin, &body).map(|events| timeline_commits(&events)))
            .transpose()
    }

    fn commit(&self, repo: &str, sha: &str) -> Result<Option<CommitPayload>, LinkError> {
        self.read(format!("{repo}/commits/{sha}.json"))?
            .map(|(origin, body)| parse_payload(&origin, &body))
            .transpose()
    }

    fn file_at(&self, repo: &str, sha: &str, path: &str) -> Result<Option<String>, LinkError> {
        Ok(self.read(format!("{repo}/contents/{sha}/{path}"))?.map(|(_, body)| body))
    }
}

/// GitHub REST API v3.
pub struct GitHubForge {
    api_base: String,
    client: HttpClient,
}

impl GitHubForge {
    pub fn new(api_base: impl Into<String>, client: HttpClient) -> Self {
        GitHubForge { api_base: api_base.into().trim_end_matches('/').to_string(), client }
    }
}

impl Forge for GitHubForge {
    fn timeline(&self, repo: &str, number: u64) -> Result<Option<Vec<TimelineCommit>>, LinkError> {
        let mut events = Vec::new();
        for page in 1.. {
            let url = format!("{}/repos/{repo}/issues/{number}/timeline?per_page=100&page={page}", self.api_base);
            let Some(body) = self.client.get(&url, "application/vnd.github+json")? else {
                return Ok(if page == 1 { None } else { Some(timeline_commits(&events)) });
            };
            let batch: Vec<Value> = parse_payload(&url, &body)?;
            let done = batch.len() < 100;
            events.extend(batch);
            if done {
                break;
            }
        }
        Ok(Some(timeline_commits(&events)))
    }

    fn commit(&self, repo: &str, sha: &str) -> Result<Option<CommitPayload>, LinkError> {
        let url = format!("{}/repos/{repo}/commits/{sha}", self.api_base);
        self.client
            .get(&url, "application/vnd.github+json")?
            .map(|body| parse_payload(&url, &body))
            .transpose()
    }

    fn file_at(&self, repo: &str, sha: &str, path: &str) -> Result<Option<String>, LinkError> {
        let url = format!("{}/repos/{repo}/contents/{path}?ref={sha}", self.api_base);
        Ok(self.client.get(&url, "application/vnd.github.raw+json")?)
    }
}

fn unresolvable(link: &RepoLink, reason: impl Into<String>) -> LinkError {
    LinkError::Unresolvable { repo: link.repo.clone(), identifier: link.identifier.clone(), reason: reason.into() }
}

/// The chronologically last commit of a pull request (or issue) timeline
/// that the forge can still serve; force-pushed-away heads are skipped.
pub fn resolve_pull_request(link: &RepoLink, forge: &dyn Forge) -> Result<String, LinkError> {
    let number = link.number().ok_or_else(|| unresolvable(link, "not a pull request or issue link"))?;
    let commits = forge
        .timeline(&link.repo, number)?
        .ok_or_else(|| unresolvable(link, "timeline not found"))?;
    for candidate in commits.iter().rev() {
        if is_sha(&candidate.sha) && forge.commit(&link.repo, &candidate.sha)?.is_some() {
            return Ok(candidate.sha.clone());
        }
    }
    Err(unresolvable(link, "no valid commit in timeline"))
}

fn file_section(file: &CommitFile) -> Option<String> {
    let patch = file.patch.as_deref()?;
    let old = file.previous_filename.as_deref().unwrap_or(&file.filename);
    let mut out = format!("diff --git a/{old} b/{}\n", file.filename);
    match file.status.as_str() {
        "added" => {
            out.push_str("new file mode 100644\n");
            out.push_str(&format!("--- /dev/null\n+++ b/{}\n", file.filename));
        }
        "removed" => {
            out.push_str("deleted file mode 100644\n");
            out.push_str(&format!("--- a/{old}\n+++ /dev/null\n"));
        }
        _ => out.push_str(&format!("--- a/{old}\n+++ b/{}\n", file.filename)),
    }
    if !patch.is_empty() {
        out.push_str(patch);
        if !patch.ends_with('\n') {
            out.push('\n');
        }
    }
    Some(out)
}

/// Assembles the bundle of one commit: a unified diff built from the
/// per-file patches and the post-commit content of every surviving file.
///
/// `extra_paths` are fetched too (file references outside the diff).
pub fn fetch_commit_bundle(
    repo: &str,
    sha: &str,
    extra_paths: &[String],
    forge: &dyn Forge,
) -> Result<CommitBundle, LinkError> {
    let payload = forge.commit(repo, sha)?.ok_or_else(|| LinkError::Unresolvable {
        repo: repo.to_string(),
        identifier: sha.to_string(),
        reason: "commit not found".into(),
    })?;
    let mut diff_text = String::new();
    let mut files_after = BTreeMap::new();
    let mut deleted = BTreeSet::new();
    let mut truncated = false;
    for file in &payload.files {
        match file_section(file) {
            Some(section) => diff_text.push_str(&section),
            None => {
                log::warn!("{repo}@{sha}: forge omitted the patch for {}", file.filename);
                truncated = true;
                continue;
            }
        }
        if file.status == "removed" {
            deleted.insert(file.filename.clone());
            continue;
        }
        match forge.file_at(repo, sha, &file.filename)? {
            Some(content) => {
                files_after.insert(file.filename.clone(), content);
            }
            None => {
                return Err(LinkError::Payload {
                    origin: format!("{repo}@{sha}"),
                    message: format!("content of {} is unavailable", file.filename),
                })
            }
        }
    }
    for path in extra_paths {
        if files_after.contains_key(path) {
            continue;
        }
        if let Some(content) = forge.file_at(repo, sha, path)? {
            files_after.insert(path.clone(), content);
        }
    }
    Ok(CommitBundle {
        repo: repo.to_string(),
        sha: payload.sha,
        parent_sha: payload.parents.first().map(|p| p.sha.clone()).unwrap_or_else(|| "0".repeat(40)),
        diff_text,
        files_after,
        deleted,
        truncated,
        issue_keys: Vec::new(),
    })
}

/// One row of `links.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub issue_key: String,
    pub kind: LinkKind,
    pub repo: String,
    pub identifier: String,
    pub source_field: String,
    pub resolved_sha: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub issues: usize,
    pub links: usize,
    pub unrecognized_urls: usize,
    pub unresolvable: usize,
    pub bundles: usize,
    pub truncated_bundles: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LinkOutcome {
    pub bundles: Vec<CommitBundle>,
    pub records: Vec<LinkRecord>,
    pub stats: LinkStats,
}

/// Resolves every link of every issue and fetches one bundle per distinct
/// (repo, sha). A bundle referenced by several issues carries all their keys.
pub fn link_issues(issues: &[LogIssue], forge: &dyn Forge, concurrency: usize) -> Result<LinkOutcome, LinkError> {
    let mut outcome = LinkOutcome::default();
    outcome.stats.issues = issues.len();

    let mut pending: Vec<(String, RepoLink)> = Vec::new();
    for issue in issues {
        let extraction = extract_links(issue);
        outcome.stats.unrecognized_urls += extraction.unrecognized;
        pending.extend(extraction.links.into_iter().map(|l| (issue.key.clone(), l)));
    }
    outcome.stats.links = pending.len();

    let resolved = bounded_map(pending, concurrency, |(key, link)| {
        let sha = match link.kind {
            LinkKind::Commit => Ok(link.identifier.clone()),
            LinkKind::FileRef => Ok(link.file_ref().map(|(s, _)| s.to_string()).unwrap_or_default()),
            LinkKind::PullRequest | LinkKind::ForgeIssue => resolve_pull_request(&link, forge),
        };
        (key, link, sha)
    });

    // (repo, sha) -> (issue keys, extra file paths)
    let mut targets: BTreeMap<(String, String), (Vec<String>, Vec<String>)> = BTreeMap::new();
    for (key, link, sha) in resolved {
        let mut record = LinkRecord {
            issue_key: key.clone(),
            kind: link.kind,
            repo: link.repo.clone(),
            identifier: link.identifier.clone(),
            source_field: link.source_field.clone(),
            resolved_sha: None,
            error: None,
        };
        match sha {
            Ok(sha) => {
                let entry = targets.entry((link.repo.clone(), sha.clone())).or_default();
                if !entry.0.contains(&key) {
                    entry.0.push(key);
                }
                if let Some((_, path)) = link.file_ref() {
                    entry.1.push(path.to_string());
                }
                record.resolved_sha = Some(sha);
            }
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => {
                outcome.stats.unresolvable += 1;
                record.error = Some(e.to_string());
            }
        }
        outcome.records.push(record);
    }

    let jobs: Vec<_> = targets.into_iter().collect();
    let fetched = bounded_map(jobs, concurrency, |((repo, sha), (keys, extra))| {
        (repo.clone(), sha.clone(), fetch_commit_bundle(&repo, &sha, &extra, forge).map(|mut b| {
            b.issue_keys = keys;
            b
        }))
    });
    for (repo, sha, result) in fetched {
        match result {
            Ok(bundle) => {
                outcome.stats.truncated_bundles += usize::from(bundle.truncated);
                outcome.bundles.push(bundle);
            }
            Err(e) if e.is_fatal() => return Err(e),
            Err(e) => {
                outcome.stats.unresolvable += 1;
                for record in outcome.records.iter_mut().filter(|r| {
                    r.repo == repo && r.resolved_sha.as_deref() == Some(sha.as_str())
                }) {
                    record.error = Some(e.to_string());
                    record.resolved_sha = None;
                }
            }
        }
    }
    outcome.stats.bundles = outcome.bundles.len();
    Ok(outcome)
}
