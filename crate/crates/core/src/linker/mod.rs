//! Forge references in issue text and their resolution to commit bundles.

mod bundle;
mod forge;

pub use bundle::{read_bundles, write_bundles, BundleError, CommitBundle};
pub use forge::{
    fetch_commit_bundle, link_issues, resolve_pull_request, CommitFile, CommitPayload, FixtureForge, Forge,
    GitHubForge, LinkError, LinkOutcome, LinkRecord, LinkStats, TimelineCommit,
};

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::miner::LogIssue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkKind {
    Commit,
    FileRef,
    ForgeIssue,
    PullRequest,
}

/// A recognised forge reference.
///
/// `identifier` is a 40-hex sha for `Commit`, `sha:path` for `FileRef` and a
/// decimal number for `PullRequest` / `ForgeIssue`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepoLink {
    pub kind: LinkKind,
    pub repo: String,
    pub identifier: String,
    /// `description` or `comment:<index>`.
    pub source_field: String,
}

impl RepoLink {
    pub fn number(&self) -> Option<u64> {
        match self.kind {
            LinkKind::PullRequest | LinkKind::ForgeIssue => self.identifier.parse().ok().filter(|n| *n > 0),
            _ => None,
        }
    }

    /// `(sha, path)` of a file reference.
    pub fn file_ref(&self) -> Option<(&str, &str)> {
        match self.kind {
            LinkKind::FileRef => self.identifier.split_once(':'),
            _ => None,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            LinkKind::Commit => is_sha(&self.identifier),
            LinkKind::FileRef => self.file_ref().is_some_and(|(sha, path)| is_sha(sha) && !path.is_empty()),
            LinkKind::PullRequest | LinkKind::ForgeIssue => self.number().is_some(),
        }
    }
}

pub fn is_sha(s: &str) -> bool {
    s.len() == 40 && s.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkExtraction {
    pub links: Vec<RepoLink>,
    /// URLs that are not GitHub/GitBox commit, blob, issue or pull links.
    pub unrecognized: usize,
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"https?://[^\s<>"'\[\]{}|\\^`]+"#).unwrap())
}

fn github_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^https?://(?:www\.)?github\.com/([\w.-]+)/([\w.-]+?)(?:\.git)?/(commit|pull|issues|blob)/([^?#]+)")
            .unwrap()
    })
}

fn gitbox_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^https?://(?:gitbox|git-wip-us)\.apache\.org/repos/asf(?:\?(.+)|/([\w.-]+?)(?:\.git)?/commit/([0-9a-f]{40}))")
            .unwrap()
    })
}

/// Extracts forge links from the description, then each comment, in
/// document order. GitBox links are rewritten to their GitHub mirror
/// (`apache/<name>`). Duplicates keep their first occurrence.
pub fn extract_links(issue: &LogIssue) -> LinkExtraction {
    let mut out = LinkExtraction::default();
    let mut seen = HashSet::new();
    let fields = std::iter::once(("description".to_string(), issue.description.as_str())).chain(
        issue
            .comments
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("comment:{i}"), c.body.as_str())),
    );
    for (field, text) in fields {
        for m in url_re().find_iter(text) {
            let url = m.as_str().trim_end_matches(['.', ',', ';', ':', ')', '!', '?']);
            match classify_url(url, &field) {
                Some(link) => {
                    if seen.insert((link.kind, link.repo.clone(), link.identifier.clone())) {
                        out.links.push(link);
                    }
                }
                None => out.unrecognized += 1,
            }
        }
    }
    out
}

fn classify_url(url: &str, field: &str) -> Option<RepoLink> {
    let make = |kind, repo: String, identifier: String| {
        let link = RepoLink { kind, repo: repo.to_lowercase(), identifier, source_field: field.to_string() };
        link.is_well_formed().then_some(link)
    };
    if let Some(c) = github_re().captures(url) {
        let repo = format!("{}/{}", &c[1], &c[2]);
        let rest = &c[4];
        let head = rest.split('/').next().unwrap_or_default();
        return match &c[3] {
            "commit" => make(LinkKind::Commit, repo, head.to_lowercase()),
            "pull" => make(LinkKind::PullRequest, repo, head.to_string()),
            "issues" => make(LinkKind::ForgeIssue, repo, head.to_string()),
            "blob" => {
                let (sha, path) = rest.split_once('/')?;
                make(LinkKind::FileRef, repo, format!("{}:{}", sha.to_lowercase(), path))
            }
            _ => None,
        };
    }
    let c = gitbox_re().captures(url)?;
    if let (Some(name), Some(sha)) = (c.get(2), c.get(3)) {
        return make(LinkKind::Commit, format!("apache/{}", name.as_str()), sha.as_str().to_string());
    }
    // Gitweb style: ?p=flink.git;a=commit;h=<sha>  /  ?p=flink.git;a=blob;f=<path>;hb=<sha>
    let params: Vec<(&str, &str)> = c.get(1)?.as_str().split([';', '&']).filter_map(|kv| kv.split_once('=')).collect();
    let get = |k: &str| params.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
    let name = get("p")?.trim_end_matches(".git");
    let repo = format!("apache/{name}");
    match get("a")? {
        "commit" | "commitdiff" => make(LinkKind::Commit, repo, get("h")?.to_string()),
        "blob" => make(LinkKind::FileRef, repo, format!("{}:{}", get("hb")?, get("f")?)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::IssueComment;

    const SHA: &str = "0123456789abcdef0123456789abcdef01234567";

    fn issue(description: &str, comments: &[&str]) -> LogIssue {
        LogIssue {
            key: "FLINK-1".into(),
            project: "FLINK".into(),
            title: "t".into(),
            description: description.into(),
            comments: comments
                .iter()
                .map(|b| IssueComment { author: "a".into(), body: b.to_string() })
                .collect(),
            issue_type: "Bug".into(),
            resolution_date: None,
            url: String::new(),
        }
    }

    #[test]
    fn commit_link_in_description() {
        let out = extract_links(&issue(&format!("Fixed in https://github.com/apache/flink/commit/{SHA}."), &[]));
        assert_eq!(out.links.len(), 1);
        let l = &out.links[0];
        assert_eq!((l.kind, l.repo.as_str(), l.identifier.as_str()), (LinkKind::Commit, "apache/flink", SHA));
        assert_eq!(l.source_field, "description");
    }

    #[test]
    fn pull_request_in_comment() {
        let out = extract_links(&issue("", &["merged via https://github.com/apache/flink/pull/4711/files"]));
        assert_eq!(out.links[0].kind, LinkKind::PullRequest);
        assert_eq!(out.links[0].number(), Some(4711));
        assert_eq!(out.links[0].source_field, "comment:0");
    }

    #[test]
    fn no_urls() {
        assert_eq!(extract_links(&issue("nothing here", &["or here"])), LinkExtraction::default());
    }

    #[test]
    fn gitbox_rewritten_to_github() {
        let text = format!(
            "https://gitbox.apache.org/repos/asf?p=hadoop.git;a=commit;h={SHA} and \
             https://gitbox.apache.org/repos/asf/kafka.git/commit/{SHA} and \
             https://gitbox.apache.org/repos/asf?p=hive.git;a=blob;f=ql/src/A.java;hb={SHA}"
        );
        let out = extract_links(&issue(&text, &[]));
        let got: Vec<_> = out.links.iter().map(|l| (l.kind, l.repo.as_str())).collect();
        assert_eq!(
            got,
            [
                (LinkKind::Commit, "apache/hadoop"),
                (LinkKind::Commit, "apache/kafka"),
                (LinkKind::FileRef, "apache/hive")
            ]
        );
        assert_eq!(out.links[2].file_ref(), Some((SHA, "ql/src/A.java")));
    }

    #[test]
    fn dedup_and_unrecognized_counting() {
        let c = format!("https://github.com/apache/flink/commit/{SHA}");
        let out = extract_links(&issue(
            &format!("{c} https://issues.apache.org/jira/browse/FLINK-2"),
            &[&c, "https://github.com/apache/flink/issues/12", "https://github.com/apache/flink/commit/abc123"],
        ));
        let kinds: Vec<_> = out.links.iter().map(|l| l.kind).collect();
        assert_eq!(kinds, [LinkKind::Commit, LinkKind::ForgeIssue]);
        assert_eq!(out.unrecognized, 2);
    }

    #[test]
    fn extraction_is_idempotent() {
        let i = issue(&format!("https://github.com/apache/flink/blob/{SHA}/src/A.java#L10"), &[]);
        assert_eq!(extract_links(&i), extract_links(&i));
        assert_eq!(extract_links(&i).links[0].file_ref(), Some((SHA, "src/A.java")));
    }
}
