//! Preference-pair dataset entries: construction, filtering and export.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::changes::{ChangeKind, ContextRule, LogChangePair};
use crate::diff::{line_diff, Edit};
use crate::java::{log_related_lines, parse_fragment, remove_log_statement, LogDetector};
use crate::level::Level;
use crate::metrics::build_prompt;
use crate::miner::LogIssue;
use crate::text::{collapse_whitespace, normalize_indentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Relevance {
    #[default]
    Unreviewed,
    Relevant,
    NonRelevant,
}

/// One prompt/chosen/rejected record. Field order is the `entries.jsonl`
/// column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub project: String,
    pub issue_key: String,
    pub issue_url: String,
    pub issue_title: String,
    pub repo: String,
    pub sha: String,
    pub file_path: String,
    pub method_signature: String,
    pub method_before: String,
    pub method_after: String,
    pub log_before: Option<String>,
    pub log_after: Option<String>,
    pub level_before: Option<Level>,
    pub level_after: Option<Level>,
    pub context_rule: ContextRule,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    #[serde(default)]
    pub relevance: Relevance,
}

impl DatasetEntry {
    fn sort_key(&self) -> (&str, &str, &str, &str, &str, &str) {
        (&self.project, &self.issue_key, &self.sha, &self.file_path, &self.method_signature, &self.id)
    }
}

/// Hex of the first 16 bytes of SHA-256 over the NUL-joined identity fields.
pub fn entry_id(repo: &str, sha: &str, file_path: &str, signature: &str, log_after: &str) -> String {
    let mut hasher = Sha256::new();
    for (i, part) in [repo, sha, file_path, signature, log_after].iter().enumerate() {
        if i > 0 {
            hasher.update([0u8]);
        }
        hasher.update(part.as_bytes());
    }
    hex::encode(&hasher.finalize()[..16])
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PairError {
    #[error("{0:?} changes have no preference pair")]
    NotModified(ChangeKind),
    #[error("{repo}@{sha} {file_path}: log statement not found in the method text")]
    LogNotFound { repo: String, sha: String, file_path: String },
    #[error("{repo}@{sha} {file_path}: prompt still contains a target log statement")]
    PromptLeak { repo: String, sha: String, file_path: String },
    #[error("no issue `{0}` for change")]
    MissingIssue(String),
}

/// Builds the dataset entry for a `Modified` change.
///
/// The prompt is the post-change method with the target statement (and a
/// guard conditional it owns) removed.
pub fn build_entry(change: &LogChangePair, issue: &LogIssue) -> Result<DatasetEntry, PairError> {
    let (Some(before), Some(after)) = (&change.before, &change.after) else {
        return Err(PairError::NotModified(change.kind));
    };
    if change.kind != ChangeKind::Modified {
        return Err(PairError::NotModified(change.kind));
    }
    let located = || (change.repo.clone(), change.sha.clone(), change.file_path.clone());
    if !change.method_before.contains(&before.text) {
        let (repo, sha, file_path) = located();
        return Err(PairError::LogNotFound { repo, sha, file_path });
    }
    let Some(stripped) = remove_log_statement(&change.method_after, change.method_after_start_line, after) else {
        let (repo, sha, file_path) = located();
        return Err(PairError::LogNotFound { repo, sha, file_path });
    };
    let prompt = build_prompt(&stripped);
    if prompt.contains(&after.text) || prompt.contains(&before.text) {
        let (repo, sha, file_path) = located();
        return Err(PairError::PromptLeak { repo, sha, file_path });
    }
    Ok(DatasetEntry {
        id: entry_id(&change.repo, &change.sha, &change.file_path, &change.method_signature, &after.text),
        project: issue.project.clone(),
        issue_key: issue.key.clone(),
        issue_url: issue.url.clone(),
        issue_title: issue.title.clone(),
        repo: change.repo.clone(),
        sha: change.sha.clone(),
        file_path: change.file_path.clone(),
        method_signature: change.method_signature.clone(),
        method_before: change.method_before.clone(),
        method_after: change.method_after.clone(),
        log_before: Some(before.text.clone()),
        log_after: Some(after.text.clone()),
        level_before: Some(before.level),
        level_after: Some(after.level),
        context_rule: change.context_rule,
        prompt,
        chosen: change.method_after.clone(),
        rejected: change.method_before.clone(),
        relevance: Relevance::Unreviewed,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub changes: usize,
    /// Added/Deleted changes routed to the auxiliary output.
    pub side_channel: usize,
    pub log_not_found: usize,
    pub prompt_leak: usize,
    pub missing_issue: usize,
    pub duplicate_ids: usize,
    pub built: usize,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOutcome {
    pub entries: Vec<DatasetEntry>,
    pub side_channel: Vec<LogChangePair>,
    pub report: BuildReport,
}

/// Builds entries for every change, dropping and counting failures. Entries
/// that share an id keep the first in export order.
pub fn build_entries(changes: &[LogChangePair], issues: &HashMap<String, LogIssue>) -> BuildOutcome {
    let mut out = BuildOutcome::default();
    out.report.changes = changes.len();
    for change in changes {
        if change.kind != ChangeKind::Modified {
            out.side_channel.push(change.clone());
            out.report.side_channel += 1;
            continue;
        }
        let Some(issue) = issues.get(&change.issue_key) else {
            log::warn!("{}", PairError::MissingIssue(change.issue_key.clone()));
            out.report.missing_issue += 1;
            continue;
        };
        match build_entry(change, issue) {
            Ok(entry) => out.entries.push(entry),
            Err(e) => {
                log::warn!("dropping change: {e}");
                match e {
                    PairError::PromptLeak { .. } => out.report.prompt_leak += 1,
                    _ => out.report.log_not_found += 1,
                }
            }
        }
    }
    out.entries.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    let before = out.entries.len();
    let mut seen = HashSet::new();
    out.entries.retain(|e| seen.insert(e.id.clone()));
    out.report.duplicate_ids = before - out.entries.len();
    out.report.built = out.entries.len();
    out
}

/// Removal counts per filter rule.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub trivial_identical: usize,
    pub indentation_only: usize,
    pub functional_coupling: usize,
    pub leakage: usize,
    pub kept: usize,
}

impl FilterReport {
    pub fn removed(&self) -> usize {
        self.trivial_identical + self.indentation_only + self.functional_coupling + self.leakage
    }

    pub fn is_conserved(&self) -> bool {
        self.removed() + self.kept == self.input
    }

    /// Chains a report for a filter applied to this report's kept entries.
    pub fn then(&self, next: &FilterReport) -> FilterReport {
        debug_assert_eq!(self.kept, next.input);
        FilterReport {
            input: self.input,
            trivial_identical: self.trivial_identical + next.trivial_identical,
            indentation_only: self.indentation_only + next.indentation_only,
            functional_coupling: self.functional_coupling + next.functional_coupling,
            leakage: self.leakage + next.leakage,
            kept: next.kept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triviality {
    Identical,
    IndentationOnly,
}

pub fn triviality(entry: &DatasetEntry) -> Option<Triviality> {
    if entry.chosen == entry.rejected {
        Some(Triviality::Identical)
    } else if normalize_indentation(&entry.chosen) == normalize_indentation(&entry.rejected) {
        Some(Triviality::IndentationOnly)
    } else {
        None
    }
}

pub fn filter_trivial(entries: Vec<DatasetEntry>) -> (Vec<DatasetEntry>, FilterReport) {
    let mut report = FilterReport { input: entries.len(), ..FilterReport::default() };
    let kept: Vec<DatasetEntry> = entries
        .into_iter()
        .filter(|e| match triviality(e) {
            Some(Triviality::Identical) => {
                report.trivial_identical += 1;
                false
            }
            Some(Triviality::IndentationOnly) => {
                report.indentation_only += 1;
                false
            }
            None => true,
        })
        .collect();
    report.kept = kept.len();
    (kept, report)
}

fn is_inert_line(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with("//") || t.starts_with("/*") || t.starts_with('*')
}

/// Whether the method diff touches anything besides log statements, their
/// guard conditionals, blank lines and comments.
pub fn touches_functional_code(detector: &LogDetector, entry: &DatasetEntry) -> bool {
    let old: Vec<String> = entry.method_before.split('\n').map(collapse_whitespace).collect();
    let new: Vec<String> = entry.method_after.split('\n').map(collapse_whitespace).collect();
    let old_logs = log_related_lines(detector, &entry.method_before);
    let new_logs = log_related_lines(detector, &entry.method_after);
    line_diff(&old, &new).into_iter().any(|edit| match edit {
        Edit::Equal(..) => false,
        Edit::Delete(i) => !is_inert_line(&old[i]) && !old_logs.contains(&(i + 1)),
        Edit::Insert(j) => !is_inert_line(&new[j]) && !new_logs.contains(&(j + 1)),
    })
}

pub fn filter_functional_coupling(
    detector: &LogDetector,
    entries: Vec<DatasetEntry>,
) -> (Vec<DatasetEntry>, FilterReport) {
    let input = entries.len();
    let flags: Vec<bool> = entries.par_iter().map(|e| touches_functional_code(detector, e)).collect();
    let kept: Vec<DatasetEntry> = entries.into_iter().zip(flags).filter(|(_, f)| !f).map(|(e, _)| e).collect();
    let report = FilterReport { input, functional_coupling: input - kept.len(), kept: kept.len(), ..FilterReport::default() };
    (kept, report)
}

/// Normalised method texts of evaluation corpora.
#[derive(Debug, Clone, Default)]
pub struct LeakageIndex {
    methods: HashSet<String>,
}

impl LeakageIndex {
    pub fn insert(&mut self, method: &str) {
        let normalized = collapse_whitespace(method);
        if !normalized.is_empty() {
            self.methods.insert(normalized);
        }
    }

    pub fn len(&self) -> usize {
        self.methods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.methods.is_empty()
    }

    pub fn contains(&self, method: &str) -> bool {
        self.methods.contains(&collapse_whitespace(method))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusLoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Record { path: PathBuf, line: usize, message: String },
}

/// Adds a corpus: a JSONL file whose records carry a `method` or `code`
/// string, or a directory of `.java` files whose methods (and whole texts)
/// are indexed.
pub fn load_method_corpus(index: &mut LeakageIndex, path: &Path) -> Result<usize, CorpusLoadError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusLoadError::Io { path, source }
    };
    let before = index.len();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "java"))
            .collect();
        files.sort();
        for file in files {
            let text = fs::read_to_string(&file).map_err(io(&file))?;
            index.insert(&text);
            for method in parse_fragment(&text).unwrap_or_default() {
                index.insert(&method.source_text);
            }
        }
    } else {
        let text = fs::read_to_string(path).map_err(io(path))?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record = |message: String| CorpusLoadError::Record { path: path.to_path_buf(), line: i + 1, message };
            let value: serde_json::Value = serde_json::from_str(line).map_err(|e| record(e.to_string()))?;
            let method = value
                .get("method")
                .or_else(|| value.get("code"))
                .and_then(|v| v.as_str())
                .ok_or_else(|| record("record has no `method` or `code` string".into()))?;
            index.insert(method);
        }
    }
    Ok(index.len() - before)
}

pub fn filter_leakage(entries: Vec<DatasetEntry>, index: &LeakageIndex) -> (Vec<DatasetEntry>, FilterReport) {
    let input = entries.len();
    let kept: Vec<DatasetEntry> = entries.into_iter().filter(|e| !index.contains(&e.method_after)).collect();
    let report = FilterReport { input, leakage: input - kept.len(), kept: kept.len(), ..FilterReport::default() };
    (kept, report)
}

/// Trivial, coupling and leakage filters in sequence.
pub fn apply_filters(
    detector: &LogDetector,
    entries: Vec<DatasetEntry>,
    index: &LeakageIndex,
) -> (Vec<DatasetEntry>, FilterReport) {
    let (entries, trivial) = filter_trivial(entries);
    let (entries, coupling) = filter_functional_coupling(detector, entries);
    let (entries, leakage) = filter_leakage(entries, index);
    (entries, trivial.then(&coupling).then(&leakage))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub path: String,
    pub entries: usize,
    pub projects: BTreeSet<String>,
}

/// Writes records one JSON object per line with a trailing newline.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record)?;
        buf.push(b'\n');
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    file.sync_all()
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
            })
        })
        .collect()
}

/// Exports entries sorted by (project, issue, sha, file, signature, id).
pub fn export_jsonl(entries: &[DatasetEntry], path: &Path) -> std::io::Result<ExportSummary> {
    let mut sorted: Vec<&DatasetEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    write_jsonl(path, &sorted)?;
    Ok(ExportSummary {
        path: path.display().to_string(),
        entries: sorted.len(),
        projects: sorted.iter().map(|e| e.project.clone()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::java::fragment_log_statements;
    use crate::miner::LogIssue;

    fn issue() -> LogIssue {
        LogIssue {
            key: "DEMO-3".into(),
            project: "DEMO".into(),
            title: "Log level too low".into(),
            description: String::new(),
            comments: vec![],
            issue_type: "Bug".into(),
            resolution_date: None,
            url: "https://issues.example.org/browse/DEMO-3".into(),
        }
    }

    fn change(before: &str, after: &str) -> LogChangePair {
        let d = LogDetector::default();
        let b = fragment_log_statements(&d, before).unwrap().remove(0);
        let a = fragment_log_statements(&d, after).unwrap().remove(0);
        let rule = if a.guard_lines.is_some() || b.guard_lines.is_some() {
            ContextRule::ConditionalExpanded
        } else {
            ContextRule::MethodOnly
        };
        LogChangePair {
            repo: "apache/demo".into(),
            sha: "e".repeat(40),
            issue_key: "DEMO-3".into(),
            file_path: "src/Svc.java".into(),
            method_signature: "void run(Task t)".into(),
            kind: ChangeKind::Modified,
            context_rule: rule,
            before: Some(b),
            after: Some(a),
            method_before_start_line: 1,
            method_before: before.into(),
            method_after_start_line: 1,
            method_after: after.into(),
        }
    }

    const BEFORE: &str = "void run(Task t) {\n  t.start();\n  LOG.debug(\"task failed\");\n  return;\n}";
    const AFTER: &str = "void run(Task t) {\n  t.start();\n  LOG.warn(\"task failed\");\n  return;\n}";

    #[test]
    fn debug_to_warn_entry() {
        let e = build_entry(&change(BEFORE, AFTER), &issue()).unwrap();
        assert_eq!((e.level_before, e.level_after), (Some(Level::Debug), Some(Level::Warn)));
        assert!(e.chosen.contains("LOG.warn(\"task failed\");"));
        assert_eq!(e.rejected, BEFORE);
        assert!(e.prompt.ends_with("```void run(Task t) {\n  t.start();\n  return;\n}```"));
        assert_eq!(e.id.len(), 32);
        assert_eq!(e.relevance, Relevance::Unreviewed);
    }

    #[test]
    fn variables_added() {
        let after = AFTER.replace("\"task failed\"", "\"task {} failed\", t.id()");
        let e = build_entry(&change(BEFORE, &after), &issue()).unwrap();
        assert!(e.chosen.contains("t.id()") && !e.rejected.contains("t.id()"));
    }

    #[test]
    fn non_modified_rejected() {
        let mut c = change(BEFORE, AFTER);
        c.kind = ChangeKind::Added;
        c.before = None;
        assert!(matches!(build_entry(&c, &issue()), Err(PairError::NotModified(ChangeKind::Added))));
    }

    #[test]
    fn stable_ids() {
        assert_eq!(entry_id("r", "s", "f", "m", "l"), entry_id("r", "s", "f", "m", "l"));
        assert_ne!(entry_id("r", "s", "f", "m", "l"), entry_id("r", "s", "f", "ml", ""));
    }

    fn entry(before: &str, after: &str) -> DatasetEntry {
        let c = change(before, after);
        build_entry(&c, &issue()).unwrap_or_else(|e| panic!("entry for {after}: {e}"))
    }

    #[test]
    fn trivial_filter() {
        let same = entry(AFTER, AFTER);
        let indented = entry(&AFTER.replace("  LOG.warn", "      LOG.warn"), AFTER);
        let real = entry(BEFORE, AFTER);
        let (kept, report) = filter_trivial(vec![same, indented, real.clone()]);
        assert_eq!(kept, vec![real]);
        assert_eq!((report.trivial_identical, report.indentation_only, report.kept), (1, 1, 1));
        assert!(report.is_conserved());
    }

    #[test]
    fn coupling_filter() {
        let d = LogDetector::default();
        let coupled = entry(BEFORE, &AFTER.replace("return;", "return t.done();"));
        assert!(touches_functional_code(&d, &coupled));
        assert!(!touches_functional_code(&d, &entry(BEFORE, AFTER)));
        let guarded = "void run(Task t) {\n  t.start();\n  if (LOG.isWarnEnabled()) {\n    LOG.warn(\"task failed\");\n  }\n  return;\n}";
        let g = entry(BEFORE, guarded);
        assert_eq!(g.context_rule, ContextRule::ConditionalExpanded);
        assert!(!touches_functional_code(&d, &g));
        let commented = entry(BEFORE, &AFTER.replace("  return;", "  // done\n  return;"));
        assert!(!touches_functional_code(&d, &commented));
    }

    #[test]
    fn leakage_filter() {
        let mut index = LeakageIndex::default();
        index.insert(&AFTER.replace('\n', "\n    "));
        let hit = entry(BEFORE, AFTER);
        let miss = entry(BEFORE, &AFTER.replace("t.start()", "t.begin()"));
        let (kept, report) = filter_leakage(vec![hit, miss.clone()], &index);
        assert_eq!(kept, vec![miss]);
        assert_eq!(report.leakage, 1);
    }

    #[test]
    fn corpus_loading() {
        let dir = tempfile::tempdir().unwrap();
        let jsonl = dir.path().join("c.jsonl");
        fs::write(&jsonl, format!("{}\n{}\n", serde_json::json!({"method": AFTER}), serde_json::json!({"code": "x"}))).unwrap();
        let mut index = LeakageIndex::default();
        assert_eq!(load_method_corpus(&mut index, &jsonl).unwrap(), 2);
        assert!(index.contains(AFTER));
        fs::write(&jsonl, "{\"other\": 1}\n").unwrap();
        assert!(matches!(load_method_corpus(&mut index, &jsonl), Err(CorpusLoadError::Record { line: 1, .. })));
        assert!(load_method_corpus(&mut index, &dir.path().join("absent.jsonl")).is_err());
    }

    #[test]
    fn export_order_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("entries.jsonl");
        let a = entry(BEFORE, AFTER);
        let mut b = a.clone();
        b.issue_key = "DEMO-1".into();
        b.id = "0".into();
        let summary = export_jsonl(&[a.clone(), b.clone()], &path).unwrap();
        assert_eq!(summary.entries, 2);
        let back: Vec<DatasetEntry> = read_jsonl(&path).unwrap();
        assert_eq!(back, vec![b, a]);
        let first = fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("{\"id\":\"0\",\"project\":\"DEMO\",\"issue_key\":\"DEMO-1\""));
        export_jsonl(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn build_entries_dedups_shared_commit() {
        let mut issues = HashMap::new();
        issues.insert("DEMO-3".to_string(), issue());
        let mut other = issue();
        other.key = "DEMO-4".into();
        issues.insert("DEMO-4".to_string(), other);
        let c = change(BEFORE, AFTER);
        let c2 = LogChangePair { issue_key: "DEMO-4".into(), ..c.clone() };
        let out = build_entries(&[c2, c], &issues);
        assert_eq!(out.entries.len(), 1);
        assert_eq!(out.entries[0].issue_key, "DEMO-3");
        assert_eq!(out.report.duplicate_ids, 1);
    }
}
