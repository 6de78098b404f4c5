//! Unified diff model: parsing, forward/reverse application and generation.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineTag {
    Context,
    Removed,
    Added,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffLine {
    pub tag: LineTag,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffHunk {
    pub file_path: String,
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<DiffLine>,
    /// The last old-side line of this hunk has no trailing newline.
    #[serde(default)]
    pub old_missing_newline: bool,
    /// The last new-side line of this hunk has no trailing newline.
    #[serde(default)]
    pub new_missing_newline: bool,
}

impl DiffHunk {
    pub fn tally(&self, tag: LineTag) -> usize {
        self.lines.iter().filter(|l| l.tag == tag).count()
    }

    /// Old-side line numbers (1-based) of removed lines.
    pub fn removed_line_numbers(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut old = self.old_start;
        for line in &self.lines {
            match line.tag {
                LineTag::Context => old += 1,
                LineTag::Removed => {
                    out.push(old);
                    old += 1;
                }
                LineTag::Added => {}
            }
        }
        out
    }

    /// New-side line numbers (1-based) of added lines.
    pub fn added_line_numbers(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut new = self.new_start;
        for line in &self.lines {
            match line.tag {
                LineTag::Context => new += 1,
                LineTag::Added => {
                    out.push(new);
                    new += 1;
                }
                LineTag::Removed => {}
            }
        }
        out
    }

    fn reversed(&self) -> DiffHunk {
        DiffHunk {
            file_path: self.file_path.clone(),
            old_start: self.new_start,
            old_count: self.new_count,
            new_start: self.old_start,
            new_count: self.old_count,
            lines: self
                .lines
                .iter()
                .map(|l| DiffLine {
                    tag: match l.tag {
                        LineTag::Context => LineTag::Context,
                        LineTag::Removed => LineTag::Added,
                        LineTag::Added => LineTag::Removed,
                    },
                    text: l.text.clone(),
                })
                .collect(),
            old_missing_newline: self.new_missing_newline,
            new_missing_newline: self.old_missing_newline,
        }
    }
}

/// All hunks of one file section of a diff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilePatch {
    /// `None` when the file is created by the patch.
    pub old_path: Option<String>,
    /// `None` when the file is deleted by the patch.
    pub new_path: Option<String>,
    pub hunks: Vec<DiffHunk>,
}

impl FilePatch {
    pub fn path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .unwrap_or_default()
    }

    pub fn is_creation(&self) -> bool {
        self.old_path.is_none()
    }

    pub fn is_deletion(&self) -> bool {
        self.new_path.is_none()
    }

    pub fn removed_lines(&self) -> BTreeSet<usize> {
        self.hunks.iter().flat_map(|h| h.removed_line_numbers()).collect()
    }

    pub fn added_lines(&self) -> BTreeSet<usize> {
        self.hunks.iter().flat_map(|h| h.added_line_numbers()).collect()
    }

    pub fn reversed(&self) -> FilePatch {
        FilePatch {
            old_path: self.new_path.clone(),
            new_path: self.old_path.clone(),
            hunks: self.hunks.iter().map(DiffHunk::reversed).collect(),
        }
    }

    /// Applies the patch to the old-side content, yielding the new side.
    pub fn apply(&self, content: &str) -> Result<String, ApplyError> {
        apply_hunks(self.path(), &self.hunks, content)
    }

    /// Applies the patch backwards to the new-side content, yielding the old side.
    pub fn reverse_apply(&self, content: &str) -> Result<String, ApplyError> {
        self.reversed().apply(content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiffParseError {
    #[error("malformed hunk header at line {line}: `{text}`")]
    BadHunkHeader { line: usize, text: String },
    #[error("hunk starting at line {line} is truncated or has inconsistent line counts")]
    TruncatedHunk { line: usize },
    #[error("hunk at line {line} appears before any file header")]
    OrphanHunk { line: usize },
    #[error("unexpected line {line} inside hunk: `{text}`")]
    UnexpectedLine { line: usize, text: String },
    #[error("input contains no unified diff file sections")]
    NoFileSections,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplyError {
    #[error("{path}: hunk @@ -{old_start} does not match the content at line {line}")]
    Mismatch { path: String, old_start: usize, line: usize },
    #[error("{path}: hunk @@ -{old_start} overlaps a previous hunk or runs past the end of file")]
    OutOfRange { path: String, old_start: usize },
}

fn hunk_header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@").unwrap())
}

fn header_path(raw: &str) -> Option<String> {
    let raw = raw.split('\t').next().unwrap_or(raw).trim_end();
    if raw == "/dev/null" {
        return None;
    }
    let stripped = raw
        .strip_prefix("a/")
        .or_else(|| raw.strip_prefix("b/"))
        .unwrap_or(raw);
    Some(stripped.to_string())
}

fn git_header_paths(rest: &str) -> (Option<String>, Option<String>) {
    // `diff --git a/x b/x`; paths with spaces are split at the ` b/` marker.
    match rest.find(" b/") {
        Some(i) => (header_path(&rest[..i]), header_path(&rest[i + 1..])),
        None => (None, None),
    }
}

/// Parses unified diff text into per-file patches, in diff order.
///
/// Blank input yields no patches. Text that contains no file section at all
/// is rejected.
pub fn parse_unified_diff(text: &str) -> Result<Vec<FilePatch>, DiffParseError> {
    let lines: Vec<&str> = text.split('\n').collect();
    // A trailing newline produces one empty tail element.
    let n = if text.ends_with('\n') { lines.len() - 1 } else { lines.len() };

    let mut files: Vec<FilePatch> = Vec::new();
    let mut current: Option<FilePatch> = None;
    let mut i = 0;

    while i < n {
        let line = lines[i];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            files.extend(current.take());
            let (old, new) = git_header_paths(rest);
            current = Some(FilePatch { old_path: old, new_path: new, hunks: Vec::new() });
            i += 1;
        } else if line.starts_with("--- ") && i + 1 < n && lines[i + 1].starts_with("+++ ") {
            let old = header_path(&line[4..]);
            let new = header_path(&lines[i + 1][4..]);
            match current.as_mut() {
                Some(fp) if fp.hunks.is_empty() => {
                    fp.old_path = old;
                    fp.new_path = new;
                }
                _ => {
                    files.extend(current.take());
                    current = Some(FilePatch { old_path: old, new_path: new, hunks: Vec::new() });
                }
            }
            i += 2;
        } else if line.starts_with("new file mode") {
            if let Some(fp) = current.as_mut() {
                fp.old_path = None;
            }
            i += 1;
        } else if line.starts_with("deleted file mode") {
            if let Some(fp) = current.as_mut() {
                fp.new_path = None;
            }
            i += 1;
        } else if line.starts_with("@@") {
            let Some(fp) = current.as_mut() else {
                return Err(DiffParseError::OrphanHunk { line: i + 1 });
            };
            let (hunk, next) = parse_hunk(&lines[..n], i, fp.path())?;
            fp.hunks.push(hunk);
            i = next;
        } else {
            // Preamble and git metadata (index, mode, similarity, ...).
            i += 1;
        }
    }
    files.extend(current.take());

    if files.is_empty() && !text.trim().is_empty() {
        return Err(DiffParseError::NoFileSections);
    }
    Ok(files)
}

/// Flattened view of [`parse_unified_diff`]: every hunk tagged with its file.
pub fn parse_hunks(text: &str) -> Result<Vec<DiffHunk>, DiffParseError> {
    Ok(parse_unified_diff(text)?
        .into_iter()
        .flat_map(|f| f.hunks)
        .collect())
}

fn parse_hunk(lines: &[&str], start: usize, path: &str) -> Result<(DiffHunk, usize), DiffParseError> {
    let header = lines[start];
    let caps = hunk_header_re()
        .captures(header)
        .ok_or_else(|| DiffParseError::BadHunkHeader { line: start + 1, text: header.to_string() })?;
    let num = |idx: usize, default: usize| -> Result<usize, DiffParseError> {
        match caps.get(idx) {
            Some(m) => m.as_str().parse().map_err(|_| DiffParseError::BadHunkHeader {
                line: start + 1,
                text: header.to_string(),
            }),
            None => Ok(default),
        }
    };
    let mut hunk = DiffHunk {
        file_path: path.to_string(),
        old_start: num(1, 0)?,
        old_count: num(2, 1)?,
        new_start: num(3, 0)?,
        new_count: num(4, 1)?,
        lines: Vec::new(),
        old_missing_newline: false,
        new_missing_newline: false,
    };

    let (mut old_seen, mut new_seen) = (0, 0);
    let mut i = start + 1;
    while old_seen < hunk.old_count || new_seen < hunk.new_count {
        let Some(&line) = lines.get(i) else {
            return Err(DiffParseError::TruncatedHunk { line: start + 1 });
        };
        let (tag, text) = match line.chars().next() {
            Some(' ') => (LineTag::Context, &line[1..]),
            // Some tools strip the single space of empty context lines.
            None => (LineTag::Context, ""),
            Some('-') => (LineTag::Removed, &line[1..]),
            Some('+') => (LineTag::Added, &line[1..]),
            Some('\\') => {
                mark_missing_newline(&mut hunk);
                i += 1;
                continue;
            }
            _ => {
                return Err(DiffParseError::UnexpectedLine { line: i + 1, text: line.to_string() });
            }
        };
        match tag {
            LineTag::Context => {
                old_seen += 1;
                new_seen += 1;
            }
            LineTag::Removed => old_seen += 1,
            LineTag::Added => new_seen += 1,
        }
        if old_seen > hunk.old_count || new_seen > hunk.new_count {
            return Err(DiffParseError::TruncatedHunk { line: start + 1 });
        }
        hunk.lines.push(DiffLine { tag, text: text.to_string() });
        i += 1;
    }
    if lines.get(i).is_some_and(|l| l.starts_with('\\')) {
        mark_missing_newline(&mut hunk);
        i += 1;
    }
    Ok((hunk, i))
}

fn mark_missing_newline(hunk: &mut DiffHunk) {
    match hunk.lines.last().map(|l| l.tag) {
        Some(LineTag::Context) => {
            hunk.old_missing_newline = true;
            hunk.new_missing_newline = true;
        }
        Some(LineTag::Removed) => hunk.old_missing_newline = true,
        Some(LineTag::Added) => hunk.new_missing_newline = true,
        None => {}
    }
}

/// File content split into lines plus whether the last line ends in `\n`.
struct Lines<'a> {
    lines: Vec<&'a str>,
    trailing_newline: bool,
}

fn split_lines(content: &str) -> Lines<'_> {
    if content.is_empty() {
        return Lines { lines: Vec::new(), trailing_newline: true };
    }
    let mut lines: Vec<&str> = content.split('\n').collect();
    let trailing_newline = content.ends_with('\n');
    if trailing_newline {
        lines.pop();
    }
    Lines { lines, trailing_newline }
}

fn join_lines(lines: &[String], trailing_newline: bool) -> String {
    let mut out = lines.join("\n");
    if !lines.is_empty() && trailing_newline {
        out.push('\n');
    }
    out
}

fn apply_hunks(path: &str, hunks: &[DiffHunk], content: &str) -> Result<String, ApplyError> {
    let old = split_lines(content);
    let mut out: Vec<String> = Vec::with_capacity(old.lines.len());
    let mut cursor = 0usize;
    let mut trailing_newline = old.trailing_newline;

    for hunk in hunks {
        let pos = if hunk.old_count == 0 { hunk.old_start } else { hunk.old_start.saturating_sub(1) };
        if pos < cursor || pos > old.lines.len() {
            return Err(ApplyError::OutOfRange { path: path.to_string(), old_start: hunk.old_start });
        }
        out.extend(old.lines[cursor..pos].iter().map(|s| s.to_string()));
        let mut at = pos;
        for line in &hunk.lines {
            match line.tag {
                LineTag::Context | LineTag::Removed => {
                    if old.lines.get(at) != Some(&line.text.as_str()) {
                        return Err(ApplyError::Mismatch {
                            path: path.to_string(),
                            old_start: hunk.old_start,
                            line: at + 1,
                        });
                    }
                    if line.tag == LineTag::Context {
                        out.push(line.text.clone());
                    }
                    at += 1;
                }
                LineTag::Added => out.push(line.text.clone()),
            }
        }
        cursor = at;
        if cursor == old.lines.len() {
            trailing_newline = !hunk.new_missing_newline;
        }
    }
    out.extend(old.lines[cursor..].iter().map(|s| s.to_string()));
    Ok(join_lines(&out, trailing_newline))
}

/// One step of a line-level edit script.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edit {
    /// `old[i] == new[j]`.
    Equal(usize, usize),
    Delete(usize),
    Insert(usize),
}

/// Longest-common-subsequence edit script between two line sequences.
pub fn line_diff<S: AsRef<str>>(old: &[S], new: &[S]) -> Vec<Edit> {
    let (n, m) = (old.len(), new.len());
    // Common prefix and suffix are kept out of the quadratic table.
    let mut prefix = 0;
    while prefix < n && prefix < m && old[prefix].as_ref() == new[prefix].as_ref() {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < n - prefix
        && suffix < m - prefix
        && old[n - 1 - suffix].as_ref() == new[m - 1 - suffix].as_ref()
    {
        suffix += 1;
    }
    let a = &old[prefix..n - suffix];
    let b = &new[prefix..m - suffix];
    let (rows, cols) = (a.len(), b.len());
    let mut table = vec![0u32; (rows + 1) * (cols + 1)];
    let at = |i: usize, j: usize| i * (cols + 1) + j;
    for i in (0..rows).rev() {
        for j in (0..cols).rev() {
            table[at(i, j)] = if a[i].as_ref() == b[j].as_ref() {
                table[at(i + 1, j + 1)] + 1
            } else {
                table[at(i + 1, j)].max(table[at(i, j + 1)])
            };
        }
    }

    let mut edits: Vec<Edit> = (0..prefix).map(|k| Edit::Equal(k, k)).collect();
    let (mut i, mut j) = (0, 0);
    while i < rows || j < cols {
        if i < rows && j < cols && a[i].as_ref() == b[j].as_ref() {
            edits.push(Edit::Equal(prefix + i, prefix + j));
            i += 1;
            j += 1;
        } else if j < cols && (i == rows || table[at(i, j + 1)] >= table[at(i + 1, j)]) {
            edits.push(Edit::Insert(prefix + j));
            j += 1;
        } else {
            edits.push(Edit::Delete(prefix + i));
            i += 1;
        }
    }
    edits.extend((0..suffix).map(|k| Edit::Equal(n - suffix + k, m - suffix + k)));
    // Deletions before insertions inside each change block, as diff tools print them.
    normalize_change_blocks(edits)
}

fn normalize_change_blocks(edits: Vec<Edit>) -> Vec<Edit> {
    let mut out = Vec::with_capacity(edits.len());
    let mut dels = Vec::new();
    let mut ins = Vec::new();
    for e in edits {
        match e {
            Edit::Delete(_) => dels.push(e),
            Edit::Insert(_) => ins.push(e),
            Edit::Equal(..) => {
                out.append(&mut dels);
                out.append(&mut ins);
                out.push(e);
            }
        }
    }
    out.append(&mut dels);
    out.append(&mut ins);
    out
}

/// Renders a unified diff between two texts with `context` lines of context.
///
/// Returns an empty string when the texts are identical.
pub fn unified_diff(old: &str, new: &str, old_label: &str, new_label: &str, context: usize) -> String {
    let a = split_lines(old);
    let b = split_lines(new);
    // An unterminated last line never equals a terminated one.
    let keyed = |l: &Lines| -> Vec<String> {
        let mut keys: Vec<String> = l.lines.iter().map(|s| s.to_string()).collect();
        if let (false, Some(last)) = (l.trailing_newline, keys.last_mut()) {
            last.push('\0');
        }
        keys
    };
    let edits = line_diff(&keyed(&a), &keyed(&b));
    let changed: Vec<usize> = edits
        .iter()
        .enumerate()
        .filter(|(_, e)| !matches!(e, Edit::Equal(..)))
        .map(|(k, _)| k)
        .collect();
    if changed.is_empty() {
        return String::new();
    }

    // Group edit indices into hunks separated by more than 2*context equal lines.
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for &k in &changed {
        match groups.last_mut() {
            Some((_, end)) if k <= *end + 2 * context + 1 => *end = k,
            _ => groups.push((k, k)),
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "--- {old_label}");
    let _ = writeln!(out, "+++ {new_label}");
    for (first, last) in groups {
        let lo = first.saturating_sub(context);
        let hi = (last + context).min(edits.len() - 1);
        let slice = &edits[lo..=hi];
        let (mut old_count, mut new_count) = (0, 0);
        let mut old_first = None;
        let mut new_first = None;
        for e in slice {
            match *e {
                Edit::Equal(i, j) => {
                    old_count += 1;
                    new_count += 1;
                    old_first.get_or_insert(i);
                    new_first.get_or_insert(j);
                }
                Edit::Delete(i) => {
                    old_count += 1;
                    old_first.get_or_insert(i);
                }
                Edit::Insert(j) => {
                    new_count += 1;
                    new_first.get_or_insert(j);
                }
            }
        }
        // Empty sides report the line *before* the hunk, per convention.
        let old_start = match old_first {
            Some(i) => i + 1,
            None => preceding_line(&edits[..lo], true),
        };
        let new_start = match new_first {
            Some(j) => j + 1,
            None => preceding_line(&edits[..lo], false),
        };
        let _ = writeln!(
            out,
            "@@ -{} +{} @@",
            range(old_start, old_count),
            range(new_start, new_count)
        );
        for e in slice {
            let (prefix, text, old_last, new_last) = match *e {
                Edit::Equal(i, j) => (' ', a.lines[i], i + 1 == a.lines.len(), j + 1 == b.lines.len()),
                Edit::Delete(i) => ('-', a.lines[i], i + 1 == a.lines.len(), false),
                Edit::Insert(j) => ('+', b.lines[j], false, j + 1 == b.lines.len()),
            };
            let _ = writeln!(out, "{prefix}{text}");
            let missing = (old_last && !a.trailing_newline && prefix != '+')
                || (new_last && !b.trailing_newline && prefix != '-');
            if missing {
                out.push_str("\\ No newline at end of file\n");
            }
        }
    }
    out
}

fn preceding_line(edits: &[Edit], old_side: bool) -> usize {
    edits
        .iter()
        .rev()
        .find_map(|e| match (*e, old_side) {
            (Edit::Equal(i, _), true) | (Edit::Delete(i), true) => Some(i + 1),
            (Edit::Equal(_, j), false) | (Edit::Insert(j), false) => Some(j + 1),
            _ => None,
        })
        .unwrap_or(0)
}

fn range(start: usize, count: usize) -> String {
    if count == 1 {
        start.to_string()
    } else {
        format!("{start},{count}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_LINE: &str = "\
--- a/src/Foo.java
+++ b/src/Foo.java
@@ -2,3 +2,3 @@ class Foo {
   void run() {
-    LOG.debug(\"x\");
+    LOG.warn(\"x\");
   }
";

    #[test]
    fn single_replacement() {
        let hunks = parse_hunks(ONE_LINE).unwrap();
        assert_eq!(hunks.len(), 1);
        let h = &hunks[0];
        assert_eq!(h.file_path, "src/Foo.java");
        assert_eq!((h.old_start, h.old_count, h.new_start, h.new_count), (2, 3, 2, 3));
        assert_eq!(h.tally(LineTag::Removed), 1);
        assert_eq!(h.tally(LineTag::Added), 1);
        assert_eq!(h.removed_line_numbers(), vec![3]);
        assert_eq!(h.added_line_numbers(), vec![3]);
    }

    #[test]
    fn apply_and_reverse() {
        let before = "class Foo {\n  void run() {\n    LOG.debug(\"x\");\n  }\n}\n";
        let after = "class Foo {\n  void run() {\n    LOG.warn(\"x\");\n  }\n}\n";
        let patch = &parse_unified_diff(ONE_LINE).unwrap()[0];
        assert_eq!(patch.apply(before).unwrap(), after);
        assert_eq!(patch.reverse_apply(after).unwrap(), before);
        assert!(matches!(patch.apply(after), Err(ApplyError::Mismatch { .. })));
    }

    #[test]
    fn garbage_is_rejected() {
        assert_eq!(parse_unified_diff("hello\nworld\n"), Err(DiffParseError::NoFileSections));
        assert_eq!(parse_unified_diff("").unwrap(), vec![]);
    }

    #[test]
    fn bad_header_names_line() {
        let text = "--- a/x\n+++ b/x\n@@ -1,x +1 @@\n";
        assert_eq!(
            parse_unified_diff(text),
            Err(DiffParseError::BadHunkHeader { line: 3, text: "@@ -1,x +1 @@".into() })
        );
    }

    #[test]
    fn truncated_hunk() {
        let text = "--- a/x\n+++ b/x\n@@ -1,3 +1,3 @@\n a\n-b\n";
        assert_eq!(parse_unified_diff(text), Err(DiffParseError::TruncatedHunk { line: 3 }));
    }

    #[test]
    fn git_creation_and_deletion() {
        let text = "\
diff --git a/New.java b/New.java
new file mode 100644
index 0000000..1111111
--- /dev/null
+++ b/New.java
@@ -0,0 +1,2 @@
+class New {
+}
diff --git a/Old.java b/Old.java
deleted file mode 100644
--- a/Old.java
+++ /dev/null
@@ -1 +0,0 @@
-class Old {}
";
        let files = parse_unified_diff(text).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[0].is_creation());
        assert_eq!(files[0].path(), "New.java");
        assert_eq!(files[0].apply("").unwrap(), "class New {\n}\n");
        assert!(files[1].is_deletion());
        assert_eq!(files[1].path(), "Old.java");
        assert_eq!(files[1].apply("class Old {}\n").unwrap(), "");
        assert_eq!(files[1].reverse_apply("").unwrap(), "class Old {}\n");
    }

    #[test]
    fn missing_newline_marker() {
        let old = "a\nb";
        let new = "a\nc\n";
        let text = unified_diff(old, new, "a/f", "b/f", 3);
        assert!(text.contains("\\ No newline at end of file"));
        let patch = &parse_unified_diff(&text).unwrap()[0];
        assert_eq!(patch.apply(old).unwrap(), new);
        assert_eq!(patch.reverse_apply(new).unwrap(), old);
    }

    #[test]
    fn newline_only_change() {
        let text = unified_diff("a\nb\n", "a\nb", "a/f", "b/f", 1);
        let patch = &parse_unified_diff(&text).unwrap()[0];
        assert_eq!(patch.apply("a\nb\n").unwrap(), "a\nb");
        assert_eq!(patch.reverse_apply("a\nb").unwrap(), "a\nb\n");
    }

    #[test]
    fn writer_matches_known_coordinates() {
        // Hand-checked against `diff -U1`.
        let old = "1\n2\n3\n4\n5\n6\n7\n8\n9\n";
        let new = "1\n2\nthree\n4\n5\n6\n7\n8\nnine\n";
        let text = unified_diff(old, new, "a/f", "b/f", 1);
        assert_eq!(
            text,
            "--- a/f\n+++ b/f\n@@ -2,3 +2,3 @@\n 2\n-3\n+three\n 4\n@@ -8,2 +8,2 @@\n 8\n-9\n+nine\n"
        );
    }

    #[test]
    fn identical_texts_give_empty_diff() {
        assert_eq!(unified_diff("a\n", "a\n", "a/f", "b/f", 3), "");
    }

    #[test]
    fn append_after_unterminated_line() {
        let (old, new) = ("a\n}", "a\n}\nmore();");
        let text = unified_diff(old, new, "a/f", "b/f", 1);
        assert!(text.contains("-}\n\\ No newline at end of file\n+}\n+more();\n\\ No newline"), "{text}");
        let patch = &parse_unified_diff(&text).unwrap()[0];
        assert_eq!(patch.apply(old).unwrap(), new);
        assert_eq!(patch.reverse_apply(new).unwrap(), old);
    }
}
