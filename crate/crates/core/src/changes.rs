//! Before/after log statement changes extracted from commit bundles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::java::{parse_methods, LogDetector, LogStatement, MethodSpan};
use crate::linker::{BundleError, CommitBundle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChangeKind {
    Modified,
    Added,
    Deleted,
}

/// Granularity of the recorded context. `ConditionalExpanded` marks a log
/// statement that is the only statement of an `if`; the whole conditional is
/// part of the method text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContextRule {
    MethodOnly,
    ConditionalExpanded,
}

/// One changed log statement with its enclosing method on both sides.
/// Field order is the `changes.jsonl` column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogChangePair {
    pub repo: String,
    pub sha: String,
    pub issue_key: String,
    pub file_path: String,
    pub method_signature: String,
    pub kind: ChangeKind,
    pub context_rule: ContextRule,
    pub before: Option<LogStatement>,
    pub after: Option<LogStatement>,
    /// File line of the first line of `method_before` (0 when absent).
    pub method_before_start_line: usize,
    pub method_before: String,
    pub method_after_start_line: usize,
    pub method_after: String,
}

impl LogChangePair {
    pub fn line(&self) -> usize {
        self.after.as_ref().or(self.before.as_ref()).map_or(0, |s| s.line)
    }

    /// Kind/side consistency and containment of each statement in its method.
    pub fn is_consistent(&self) -> bool {
        let shape = match self.kind {
            ChangeKind::Modified => self.before.is_some() && self.after.is_some(),
            ChangeKind::Added => self.before.is_none() && self.after.is_some(),
            ChangeKind::Deleted => self.before.is_some() && self.after.is_none(),
        };
        shape
            && self.before.as_ref().is_none_or(|s| self.method_before.contains(&s.text))
            && self.after.as_ref().is_none_or(|s| self.method_after.contains(&s.text))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub bundles: usize,
    pub files: usize,
    pub non_java_files: usize,
    pub skipped_files: usize,
    pub excluded_calls: usize,
    pub modified: usize,
    pub added: usize,
    pub deleted: usize,
}

impl ExtractStats {
    pub fn merge(&mut self, other: &ExtractStats) {
        self.bundles += other.bundles;
        self.files += other.files;
        self.non_java_files += other.non_java_files;
        self.skipped_files += other.skipped_files;
        self.excluded_calls += other.excluded_calls;
        self.modified += other.modified;
        self.added += other.added;
        self.deleted += other.deleted;
    }
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub changes: Vec<LogChangePair>,
    pub stats: ExtractStats,
}

struct Side {
    methods: Vec<MethodSpan>,
    /// (method index, statement) for statements touching changed lines.
    changed: Vec<(usize, LogStatement)>,
}

fn analyse_side(
    detector: &LogDetector,
    path: &str,
    content: &str,
    changed_lines: &BTreeSet<usize>,
    stats: &mut ExtractStats,
) -> Option<Side> {
    let methods = match parse_methods(path, content) {
        Ok(m) => m,
        Err(e) => {
            log::warn!("skipping file: {e}");
            return None;
        }
    };
    let mut changed = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, method) in methods.iter().enumerate() {
        let detection = detector.detect(method);
        stats.excluded_calls += detection.excluded;
        for stmt in detection.statements {
            let touched = stmt.lines().any(|l| changed_lines.contains(&l));
            if touched && seen.insert((stmt.line, stmt.text.clone())) {
                changed.push((idx, stmt));
            }
        }
    }
    Some(Side { methods, changed })
}

/// Pairs methods across the two sides: identical signatures first, then
/// names that are unique among the remaining methods on both sides.
fn correspond(before: &[MethodSpan], after: &[MethodSpan]) -> Vec<Option<usize>> {
    let mut map = vec![None; before.len()];
    let mut used = vec![false; after.len()];
    for (i, b) in before.iter().enumerate() {
        if let Some(j) = (0..after.len()).find(|&j| !used[j] && after[j].signature == b.signature) {
            map[i] = Some(j);
            used[j] = true;
        }
    }
    for i in 0..before.len() {
        if map[i].is_some() {
            continue;
        }
        let name = &before[i].name;
        let left: Vec<usize> = (0..before.len()).filter(|&k| map[k].is_none() && &before[k].name == name).collect();
        let right: Vec<usize> = (0..after.len()).filter(|&j| !used[j] && &after[j].name == name).collect();
        if left.len() == 1 && right.len() == 1 {
            map[i] = Some(right[0]);
            used[right[0]] = true;
        }
    }
    map
}

/// Extracts log statement changes from every Java file of a bundle.
///
/// Removed and added log statements of corresponding methods are paired
/// greedily: same logger expression, smallest distance between their
/// method-relative lines, ties broken by line order. Leftovers become
/// `Deleted` / `Added` changes.
pub fn extract_log_changes(bundle: &CommitBundle, detector: &LogDetector) -> Result<Extraction, BundleError> {
    let mut out = Extraction::default();
    out.stats.bundles = 1;
    let issue_keys = if bundle.issue_keys.is_empty() { vec![String::new()] } else { bundle.issue_keys.clone() };

    for patch in bundle.patches()? {
        out.stats.files += 1;
        let path = patch.path().to_string();
        if !path.ends_with(".java") {
            out.stats.non_java_files += 1;
            continue;
        }
        let after_text = bundle.content_after(&patch);
        let before_text = match bundle.content_before(&patch) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("skipping file: {e}");
                out.stats.skipped_files += 1;
                continue;
            }
        };
        let sides = (
            analyse_side(detector, &path, &before_text, &patch.removed_lines(), &mut out.stats),
            analyse_side(detector, &path, after_text, &patch.added_lines(), &mut out.stats),
        );
        let (Some(before), Some(after)) = sides else {
            out.stats.skipped_files += 1;
            continue;
        };

        let forward = correspond(&before.methods, &after.methods);
        // Group keys: (before method, after method), either side optional.
        let mut groups: Vec<(Option<usize>, Option<usize>)> = Vec::new();
        for (i, _) in &before.changed {
            groups.push((Some(*i), forward[*i]));
        }
        for (j, _) in &after.changed {
            let i = forward.iter().position(|f| *f == Some(*j));
            groups.push((i, Some(*j)));
        }
        groups.sort();
        groups.dedup();

        let mut file_changes = Vec::new();
        for (bi, aj) in groups {
            let removed: Vec<&LogStatement> =
                before.changed.iter().filter(|(i, _)| Some(*i) == bi).map(|(_, s)| s).collect();
            let added: Vec<&LogStatement> =
                after.changed.iter().filter(|(j, _)| Some(*j) == aj).map(|(_, s)| s).collect();
            let mb = bi.map(|i| &before.methods[i]);
            let ma = aj.map(|j| &after.methods[j]);
            let rel = |s: &LogStatement, m: Option<&MethodSpan>| s.line as i64 - m.map_or(0, |m| m.start_line) as i64;

            let mut candidates = Vec::new();
            for (r, rs) in removed.iter().enumerate() {
                for (a, as_) in added.iter().enumerate() {
                    if rs.logger_expr == as_.logger_expr {
                        let dist = (rel(rs, mb) - rel(as_, ma)).unsigned_abs();
                        candidates.push((dist, rs.line, as_.line, r, a));
                    }
                }
            }
            candidates.sort();
            let mut r_used = vec![false; removed.len()];
            let mut a_used = vec![false; added.len()];
            let mut matched = Vec::new();
            for (_, _, _, r, a) in candidates {
                if !r_used[r] && !a_used[a] {
                    r_used[r] = true;
                    a_used[a] = true;
                    matched.push((Some(r), Some(a)));
                }
            }
            matched.extend((0..removed.len()).filter(|r| !r_used[*r]).map(|r| (Some(r), None)));
            matched.extend((0..added.len()).filter(|a| !a_used[*a]).map(|a| (None, Some(a))));

            for (r, a) in matched {
                let before_stmt = r.map(|r| removed[r].clone());
                let after_stmt = a.map(|a| added[a].clone());
                let kind = match (&before_stmt, &after_stmt) {
                    (Some(_), Some(_)) => ChangeKind::Modified,
                    (None, Some(_)) => ChangeKind::Added,
                    _ => ChangeKind::Deleted,
                };
                let expanded = before_stmt.iter().chain(after_stmt.iter()).any(|s| s.guard_lines.is_some());
                file_changes.push(LogChangePair {
                    repo: bundle.repo.clone(),
                    sha: bundle.sha.clone(),
                    issue_key: String::new(),
                    file_path: path.clone(),
                    method_signature: ma.or(mb).map(|m| m.signature.clone()).unwrap_or_default(),
                    kind,
                    context_rule: if expanded { ContextRule::ConditionalExpanded } else { ContextRule::MethodOnly },
                    before: before_stmt,
                    after: after_stmt,
                    method_before_start_line: mb.map_or(0, |m| m.start_line),
                    method_before: mb.map(|m| m.source_text.clone()).unwrap_or_default(),
                    method_after_start_line: ma.map_or(0, |m| m.start_line),
                    method_after: ma.map(|m| m.source_text.clone()).unwrap_or_default(),
                });
            }
        }
        file_changes.sort_by_key(|c| (c.line(), c.before.as_ref().map_or(0, |s| s.line)));
        for change in &file_changes {
            match change.kind {
                ChangeKind::Modified => out.stats.modified += 1,
                ChangeKind::Added => out.stats.added += 1,
                ChangeKind::Deleted => out.stats.deleted += 1,
            }
        }
        for change in file_changes {
            for key in &issue_keys {
                out.changes.push(LogChangePair { issue_key: key.clone(), ..change.clone() });
            }
        }
    }
    Ok(out)
}

/// Runs [`extract_log_changes`] over many bundles in parallel, merged in
/// (repo, sha, file, line, issue) order.
pub fn extract_all(bundles: &[CommitBundle], detector: &LogDetector) -> (Extraction, Vec<BundleError>) {
    use rayon::prelude::*;
    let results: Vec<_> = bundles.par_iter().map(|b| extract_log_changes(b, detector)).collect();
    let mut merged = Extraction::default();
    let mut errors = Vec::new();
    for result in results {
        match result {
            Ok(ex) => {
                merged.stats.merge(&ex.stats);
                merged.changes.extend(ex.changes);
            }
            Err(e) => errors.push(e),
        }
    }
    merged.changes.sort_by(|a, b| {
        (&a.repo, &a.sha, &a.file_path, a.line(), &a.issue_key).cmp(&(&b.repo, &b.sha, &b.file_path, b.line(), &b.issue_key))
    });
    (merged, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::unified_diff;
    use crate::level::Level;
    use std::collections::BTreeMap;

    fn bundle(before: &str, after: &str) -> CommitBundle {
        let mut diff_text = String::from("diff --git a/src/Svc.java b/src/Svc.java\n");
        diff_text.push_str(&unified_diff(before, after, "a/src/Svc.java", "b/src/Svc.java", 3));
        CommitBundle {
            repo: "apache/demo".into(),
            sha: "c".repeat(40),
            parent_sha: "d".repeat(40),
            diff_text,
            files_after: BTreeMap::from([("src/Svc.java".to_string(), after.to_string())]),
            deleted: BTreeSet::new(),
            truncated: false,
            issue_keys: vec!["DEMO-7".into()],
        }
    }

    fn wrap(body: &str) -> String {
        format!("package demo;\n\nclass Svc {{\n  void run(String msg) {{\n    prepare();\n{body}    finish();\n  }}\n}}\n")
    }

    #[test]
    fn debug_to_warn_is_modified() {
        let b = bundle(&wrap("    LOG.debug(msg);\n"), &wrap("    LOG.warn(msg);\n"));
        let ex = extract_log_changes(&b, &LogDetector::default()).unwrap();
        assert_eq!(ex.changes.len(), 1);
        let c = &ex.changes[0];
        assert_eq!(c.kind, ChangeKind::Modified);
        assert_eq!(c.before.as_ref().unwrap().level, Level::Debug);
        assert_eq!(c.after.as_ref().unwrap().level, Level::Warn);
        assert_eq!(c.issue_key, "DEMO-7");
        assert_eq!(c.method_signature, "void run(String msg)");
        assert_eq!(c.context_rule, ContextRule::MethodOnly);
        assert!(c.is_consistent());
    }

    #[test]
    fn added_and_deleted() {
        let b = bundle(
            &wrap("    LOG.debug(msg);\n"),
            &wrap("    System.out.println(msg);\n    LOG_AUDIT_LOGGER.info(\"audit {}\", msg);\n"),
        );
        let ex = extract_log_changes(&b, &LogDetector::default()).unwrap();
        let kinds: Vec<_> = ex.changes.iter().map(|c| c.kind).collect();
        assert_eq!(kinds, [ChangeKind::Deleted, ChangeKind::Added]);
        assert!(ex.changes.iter().all(LogChangePair::is_consistent));
    }

    #[test]
    fn no_log_changes() {
        let b = bundle(&wrap("    int a = 1;\n"), &wrap("    int a = 2;\n"));
        assert!(extract_log_changes(&b, &LogDetector::default()).unwrap().changes.is_empty());
    }

    #[test]
    fn guard_marks_conditional_expansion() {
        let b = bundle(
            &wrap("    LOG.debug(\"state \" + msg);\n"),
            &wrap("    if (LOG.isDebugEnabled()) {\n      LOG.debug(\"state {}\", msg);\n    }\n"),
        );
        let ex = extract_log_changes(&b, &LogDetector::default()).unwrap();
        assert_eq!(ex.changes.len(), 1);
        let c = &ex.changes[0];
        assert_eq!(c.context_rule, ContextRule::ConditionalExpanded);
        assert!(c.method_after.contains("if (LOG.isDebugEnabled()) {\n      LOG.debug(\"state {}\", msg);\n    }"));
    }

    #[test]
    fn pairing_prefers_nearest_same_receiver() {
        let b = bundle(
            &wrap("    LOG.debug(\"a\");\n    step();\n    LOG.debug(\"b\");\n"),
            &wrap("    LOG.info(\"a\");\n    step();\n    LOG.info(\"b\");\n"),
        );
        let ex = extract_log_changes(&b, &LogDetector::default()).unwrap();
        let pairs: Vec<_> = ex
            .changes
            .iter()
            .map(|c| (c.before.as_ref().unwrap().message_literals.clone(), c.after.as_ref().unwrap().message_literals.clone()))
            .collect();
        assert_eq!(pairs, [("a".to_string(), "a".to_string()), ("b".to_string(), "b".to_string())]);
    }

    #[test]
    fn non_java_files_are_skipped() {
        let mut b = bundle("a\n", "b\n");
        b.diff_text = b.diff_text.replace("src/Svc.java", "README.md");
        b.files_after = BTreeMap::from([("README.md".to_string(), "b\n".to_string())]);
        let ex = extract_log_changes(&b, &LogDetector::default()).unwrap();
        assert_eq!(ex.stats.non_java_files, 1);
        assert!(ex.changes.is_empty());
    }
}
