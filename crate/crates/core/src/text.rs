//! Whitespace normalisation and tokenisation shared by the filters and metrics.

/// Trims the text and collapses every run of whitespace to one space.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Per-line normalisation used by the trivial-change filter: leading
/// whitespace of each line collapsed away and trailing whitespace trimmed.
pub fn normalize_indentation(text: &str) -> String {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    let mut out = lines.join("\n");
    // Trailing blank lines carry no content either.
    while out.ends_with('\n') {
        out.pop();
    }
    out
}

/// Lowercased word tokens, split on whitespace and punctuation.
///
/// `"Failed to connect: {}"` becomes `["failed", "to", "connect"]`.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}
