//! Java method extraction and log statement detection over tree-sitter syntax trees.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use regex::Regex;
use serde::{Deserialize, Serialize};
use tree_sitter::{Node, Parser, Tree};

use crate::level::Level;
use crate::text::collapse_whitespace;

/// A method or constructor declaration located in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpan {
    pub file_path: String,
    pub name: String,
    /// Declaration header from the return type (or name) to the parameter list
    /// and throws clause, whitespace-collapsed. Modifiers are not included.
    pub signature: String,
    pub start_line: usize,
    pub end_line: usize,
    /// The full source lines `start_line..=end_line`.
    pub source_text: String,
}

impl MethodSpan {
    pub fn contains_line(&self, line: usize) -> bool {
        (self.start_line..=self.end_line).contains(&line)
    }

    pub fn line_count(&self) -> usize {
        self.end_line - self.start_line + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogStatement {
    /// Statement text exactly as it appears in the source.
    pub text: String,
    pub level: Level,
    pub logger_expr: String,
    pub message_literals: String,
    pub variable_exprs: Vec<String>,
    /// 1-based line of the statement start within its file.
    pub line: usize,
    pub end_line: usize,
    /// 0-based pre-order index among the statements of the enclosing method.
    pub statement_index: usize,
    /// Lines of an enclosing conditional whose body is this statement alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard_lines: Option<(usize, usize)>,
}

impl LogStatement {
    /// Statement text on one logical line; the identity used for comparisons.
    pub fn normalized_text(&self) -> String {
        collapse_whitespace(&self.text)
    }

    pub fn lines(&self) -> RangeInclusive<usize> {
        self.line..=self.end_line
    }

    /// Lines to drop when removing the statement together with a guard it owns.
    pub fn owned_lines(&self) -> RangeInclusive<usize> {
        match self.guard_lines {
            Some((start, end)) => start..=end,
            None => self.lines(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum JavaParseError {
    #[error("{path}: syntax errors starting at line {line}")]
    Syntax { path: String, line: usize },
    #[error("{path}: parser produced no tree")]
    NoTree { path: String },
}

fn parse_tree(source: &str) -> Option<Tree> {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("bundled Java grammar is ABI compatible");
    parser.parse(source, None)
}

fn first_error_line(node: Node<'_>) -> usize {
    let mut cursor = node.walk();
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if n.is_error() || n.is_missing() {
            return n.start_position().row + 1;
        }
        if n.has_error() {
            let children: Vec<_> = n.children(&mut cursor).collect();
            stack.extend(children.into_iter().rev());
        }
    }
    node.start_position().row + 1
}

fn is_method_node(kind: &str) -> bool {
    matches!(kind, "method_declaration" | "constructor_declaration" | "compact_constructor_declaration")
}

fn text_of<'s>(node: Node<'_>, src: &'s str) -> &'s str {
    &src[node.byte_range()]
}

/// Source lines `start..=end` (1-based), joined with `\n`.
pub fn line_slice(source: &str, start: usize, end: usize) -> String {
    source
        .split('\n')
        .skip(start - 1)
        .take(end + 1 - start)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Extracts every method and constructor declaration of a Java file in
/// source order, including methods of nested and local classes.
pub fn parse_methods(file_path: &str, source: &str) -> Result<Vec<MethodSpan>, JavaParseError> {
    if source.trim().is_empty() {
        return Ok(Vec::new());
    }
    let tree = parse_tree(source).ok_or_else(|| JavaParseError::NoTree { path: file_path.to_string() })?;
    let root = tree.root_node();
    if root.has_error() {
        return Err(JavaParseError::Syntax { path: file_path.to_string(), line: first_error_line(root) });
    }
    let mut spans = Vec::new();
    collect_methods(root, source, file_path, &mut spans);
    spans.sort_by_key(|s| (s.start_line, std::cmp::Reverse(s.end_line)));
    Ok(spans)
}

fn collect_methods(node: Node<'_>, src: &str, path: &str, out: &mut Vec<MethodSpan>) {
    if is_method_node(node.kind()) {
        out.push(method_span(node, src, path));
    }
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        collect_methods(child, src, path, out);
    }
}

fn method_span(node: Node<'_>, src: &str, path: &str) -> MethodSpan {
    let name = node
        .child_by_field_name("name")
        .map(|n| text_of(n, src).to_string())
        .unwrap_or_default();
    let header_start = ["type_parameters", "type", "name"]
        .iter()
        .filter_map(|f| node.child_by_field_name(f))
        .map(|n| n.start_byte())
        .min()
        .unwrap_or(node.start_byte());
    let header_end = node
        .child_by_field_name("body")
        .map(|b| b.start_byte())
        .unwrap_or(node.end_byte());
    let signature = collapse_whitespace(src[header_start..header_end].trim_end_matches(';'));
    let start_line = node.start_position().row + 1;
    let end_line = node.end_position().row + 1;
    MethodSpan {
        file_path: path.to_string(),
        name,
        signature,
        start_line,
        end_line,
        source_text: line_slice(src, start_line, end_line),
    }
}

/// Innermost method containing every line of `lines`.
pub fn enclosing_method(methods: &[MethodSpan], lines: RangeInclusive<usize>) -> Option<&MethodSpan> {
    methods
        .iter()
        .filter(|m| m.contains_line(*lines.start()) && m.contains_line(*lines.end()))
        .min_by_key(|m| m.line_count())
}

/// Configuration of the log-call matcher.
#[derive(Debug, Clone)]
pub struct LogDetector {
    receiver: Regex,
    extra_callees: Vec<String>,
}

pub const DEFAULT_RECEIVER_PATTERN: &str = r"(?i)^(log|logger|s_log|.*logger)$";

impl Default for LogDetector {
    fn default() -> Self {
        LogDetector::new(DEFAULT_RECEIVER_PATTERN, &[]).expect("default receiver pattern compiles")
    }
}

/// Log statements found in one method, plus the number of level-named calls
/// that were skipped because their receiver does not look like a logger.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Detection {
    pub statements: Vec<LogStatement>,
    pub excluded: usize,
}

impl LogDetector {
    pub fn new(receiver_pattern: &str, extra_callees: &[String]) -> Result<Self, regex::Error> {
        Ok(LogDetector {
            receiver: Regex::new(receiver_pattern)?,
            extra_callees: extra_callees.iter().map(|c| c.to_ascii_lowercase()).collect(),
        })
    }

    fn is_log_callee(&self, name: &str) -> bool {
        let lower = name.to_ascii_lowercase();
        Level::from_method_name(&lower) != Level::Unknown || self.extra_callees.contains(&lower)
    }

    /// Finds log statements inside one method.
    pub fn detect(&self, method: &MethodSpan) -> Detection {
        // Wrapping on the same line keeps tree rows aligned with method lines.
        let wrapped = format!("class __Wrap {{ {}\n}}", method.source_text);
        let Some(tree) = parse_tree(&wrapped) else {
            return Detection::default();
        };
        let root = tree.root_node();
        let Some(decl) = find_first(root, &is_method_node) else {
            return Detection::default();
        };
        let mut detection = self.detect_in(decl, &wrapped);
        for stmt in &mut detection.statements {
            stmt.line += method.start_line - 1;
            stmt.end_line += method.start_line - 1;
            if let Some((s, e)) = stmt.guard_lines.as_mut() {
                *s += method.start_line - 1;
                *e += method.start_line - 1;
            }
        }
        detection
    }

    /// Detects log statements in a method declaration node. Line numbers are
    /// 1-based rows of `src`.
    fn detect_in(&self, decl: Node<'_>, src: &str) -> Detection {
        let statements = method_statements(decl);
        let mut detection = Detection::default();
        for (index, stmt) in statements.iter().enumerate() {
            if stmt.kind() != "expression_statement" {
                continue;
            }
            let Some(call) = stmt.named_child(0).filter(|c| c.kind() == "method_invocation") else {
                continue;
            };
            let Some(name) = call.child_by_field_name("name") else { continue };
            let callee = text_of(name, src);
            if !self.is_log_callee(callee) {
                continue;
            }
            let Some(receiver) = call.child_by_field_name("object") else {
                detection.excluded += 1;
                continue;
            };
            if !self.receiver.is_match(receiver_tail(receiver, src)) {
                detection.excluded += 1;
                continue;
            }
            let (message_literals, variable_exprs) = call
                .child_by_field_name("arguments")
                .map(|args| split_arguments(args, src))
                .unwrap_or_default();
            detection.statements.push(LogStatement {
                text: text_of(*stmt, src).to_string(),
                level: Level::from_method_name(callee),
                logger_expr: collapse_whitespace(text_of(receiver, src)),
                message_literals,
                variable_exprs,
                line: stmt.start_position().row + 1,
                end_line: stmt.end_position().row + 1,
                statement_index: index,
                guard_lines: sole_statement_guard(*stmt)
                    .map(|g| (g.start_position().row + 1, g.end_position().row + 1)),
            });
        }
        detection.statements.sort_by_key(|s| (s.line, s.statement_index));
        detection
    }
}

fn find_first<'t>(node: Node<'t>, pred: &dyn Fn(&str) -> bool) -> Option<Node<'t>> {
    if pred(node.kind()) {
        return Some(node);
    }
    let mut cursor = node.walk();
    let children: Vec<_> = node.named_children(&mut cursor).collect();
    children.into_iter().find_map(|c| find_first(c, pred))
}

fn is_statement_kind(kind: &str) -> bool {
    (kind.ends_with("_statement") && kind != "expression_statement")
        || matches!(kind, "expression_statement" | "local_variable_declaration" | "explicit_constructor_invocation")
}

/// Statements of a method body in pre-order. Blocks themselves do not count.
fn method_statements(decl: Node<'_>) -> Vec<Node<'_>> {
    let mut out = Vec::new();
    if let Some(body) = decl.child_by_field_name("body") {
        collect_statements(body, &mut out);
    }
    out
}

fn collect_statements<'t>(node: Node<'t>, out: &mut Vec<Node<'t>>) {
    let mut cursor = node.walk();
    for child in node.named_children(&mut cursor) {
        if is_statement_kind(child.kind()) {
            out.push(child);
        }
        // Statements of local/anonymous class bodies belong to their own methods.
        if !matches!(child.kind(), "class_body" | "class_declaration") {
            collect_statements(child, out);
        }
    }
}

/// Last identifier of a receiver expression: `this.LOG` -> `LOG`,
/// `LoggerFactory.getLogger(X.class)` -> `getLogger`.
fn receiver_tail<'s>(receiver: Node<'_>, src: &'s str) -> &'s str {
    match receiver.kind() {
        "field_access" => receiver
            .child_by_field_name("field")
            .map(|f| text_of(f, src))
            .unwrap_or_else(|| text_of(receiver, src)),
        "method_invocation" => receiver
            .child_by_field_name("name")
            .map(|f| text_of(f, src))
            .unwrap_or_else(|| text_of(receiver, src)),
        _ => text_of(receiver, src),
    }
}

fn is_string_literal(node: Node<'_>) -> bool {
    node.kind() == "string_literal"
}

fn literal_content(node: Node<'_>, src: &str) -> String {
    let raw = text_of(node, src);
    let inner = raw
        .strip_prefix("\"\"\"")
        .and_then(|r| r.strip_suffix("\"\"\""))
        .or_else(|| raw.strip_prefix('"').and_then(|r| r.strip_suffix('"')))
        .unwrap_or(raw);
    inner.to_string()
}

/// Splits a log call's arguments into static message text and variable
/// expressions. String concatenations are flattened; `String.format` style
/// calls contribute their own arguments.
fn split_arguments(args: Node<'_>, src: &str) -> (String, Vec<String>) {
    let mut message = String::new();
    let mut vars = Vec::new();
    let mut cursor = args.walk();
    for arg in args.named_children(&mut cursor) {
        if arg.kind() == "line_comment" || arg.kind() == "block_comment" {
            continue;
        }
        split_operand(arg, src, &mut message, &mut vars);
    }
    (message, vars)
}

fn split_operand(node: Node<'_>, src: &str, message: &mut String, vars: &mut Vec<String>) {
    if is_string_literal(node) {
        message.push_str(&literal_content(node, src));
        return;
    }
    if node.kind() == "parenthesized_expression" {
        if let Some(inner) = node.named_child(0) {
            return split_operand(inner, src, message, vars);
        }
    }
    if node.kind() == "binary_expression" && is_concatenation(node, src) {
        if let (Some(l), Some(r)) = (node.child_by_field_name("left"), node.child_by_field_name("right")) {
            split_operand(l, src, message, vars);
            split_operand(r, src, message, vars);
            return;
        }
    }
    if node.kind() == "method_invocation" {
        let name = node.child_by_field_name("name").map(|n| text_of(n, src));
        if name == Some("format") {
            if let Some(args) = node.child_by_field_name("arguments") {
                let (m, v) = split_arguments(args, src);
                message.push_str(&m);
                vars.extend(v);
                return;
            }
        }
    }
    vars.push(collapse_whitespace(text_of(node, src)));
}

/// A `+` chain counts as concatenation when any operand in it is a string literal.
fn is_concatenation(node: Node<'_>, src: &str) -> bool {
    let op = node.child_by_field_name("operator").map(|o| text_of(o, src));
    if op != Some("+") {
        return false;
    }
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if is_string_literal(n) {
            return true;
        }
        if n.kind() == "binary_expression" || n.kind() == "parenthesized_expression" {
            let mut cursor = n.walk();
            stack.extend(n.named_children(&mut cursor));
        }
    }
    false
}

/// The `if` statement whose branch consists of exactly this statement, if any.
fn sole_statement_guard(stmt: Node<'_>) -> Option<Node<'_>> {
    let parent = stmt.parent()?;
    let branch = if parent.kind() == "block" {
        let mut cursor = parent.walk();
        let statements: Vec<_> = parent
            .named_children(&mut cursor)
            .filter(|c| !matches!(c.kind(), "line_comment" | "block_comment"))
            .collect();
        if statements.len() != 1 {
            return None;
        }
        parent
    } else {
        stmt
    };
    let conditional = branch.parent()?;
    if conditional.kind() != "if_statement" {
        return None;
    }
    // Only the consequence of an else-less `if` wraps nothing but the log call.
    let consequence = conditional.child_by_field_name("consequence")?;
    if consequence.id() != branch.id() || conditional.child_by_field_name("alternative").is_some() {
        return None;
    }
    Some(conditional)
}

/// Lines (1-based, relative to `method_text`) that belong to log statements or
/// to conditionals that wrap nothing but a log statement.
pub fn log_related_lines(detector: &LogDetector, method_text: &str) -> BTreeSet<usize> {
    let span = MethodSpan {
        file_path: String::new(),
        name: String::new(),
        signature: String::new(),
        start_line: 1,
        end_line: method_text.split('\n').count(),
        source_text: method_text.to_string(),
    };
    detector
        .detect(&span)
        .statements
        .iter()
        .flat_map(|s| s.owned_lines())
        .collect()
}

/// Removes a log statement from the text of the method that contains it.
///
/// `method_start_line` is the file line of the method's first line, the
/// coordinate system of `stmt.line`. When the statement sits on lines of its
/// own those lines are dropped; a guard conditional owned by the statement is
/// dropped with it. Returns `None` when the statement is not found where its
/// line numbers say it is.
pub fn remove_log_statement(method_text: &str, method_start_line: usize, stmt: &LogStatement) -> Option<String> {
    let lines: Vec<&str> = method_text.split('\n').collect();
    let index = |line: usize| line.checked_sub(method_start_line).filter(|i| *i < lines.len());
    let (first, last) = (index(stmt.line)?, index(stmt.end_line)?);
    let block = lines[first..=last].join("\n");
    let offset = block.find(stmt.text.as_str())?;

    let drop_lines = |s: usize, e: usize| {
        lines[..s]
            .iter()
            .chain(lines[e + 1..].iter())
            .copied()
            .collect::<Vec<_>>()
            .join("\n")
    };
    if let Some((gs, ge)) = stmt.guard_lines {
        if let (Some(s), Some(e)) = (index(gs), index(ge)) {
            let guard = lines[s..=e].join("\n");
            let guard = guard.trim();
            if guard.starts_with("if") && (guard.ends_with('}') || guard.ends_with(';')) {
                return Some(drop_lines(s, e));
            }
        }
    }
    if block.trim() == stmt.text.trim() {
        return Some(drop_lines(first, last));
    }
    let mut rebuilt = block.clone();
    rebuilt.replace_range(offset..offset + stmt.text.len(), "");
    let mut out: Vec<String> = lines[..first].iter().map(|l| l.to_string()).collect();
    out.push(rebuilt);
    out.extend(lines[last + 1..].iter().map(|l| l.to_string()));
    Some(out.join("\n"))
}

/// Parses a code fragment that is either a full compilation unit or bare
/// method declarations, returning the methods it declares.
pub fn parse_fragment(code: &str) -> Result<Vec<MethodSpan>, JavaParseError> {
    if let Ok(methods) = parse_methods("<fragment>", code) {
        if !methods.is_empty() {
            return Ok(methods);
        }
    }
    let wrapped = format!("class __Wrap {{ {code}\n}}");
    let methods = parse_methods("<fragment>", &wrapped)?;
    // Row numbers are unchanged by the same-line prefix; texts must be re-sliced
    // from the unwrapped fragment.
    Ok(methods
        .into_iter()
        .map(|mut m| {
            m.source_text = line_slice(code, m.start_line, m.end_line.min(code.split('\n').count()));
            m
        })
        .collect())
}

/// Log statements of a code fragment (deduplicated across nested methods),
/// ordered by line.
pub fn fragment_log_statements(detector: &LogDetector, code: &str) -> Result<Vec<LogStatement>, JavaParseError> {
    let methods = parse_fragment(code)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for method in &methods {
        for stmt in detector.detect(method).statements {
            if seen.insert((stmt.line, stmt.end_line, stmt.text.clone())) {
                out.push(stmt);
            }
        }
    }
    out.sort_by_key(|s| s.line);
    Ok(out)
}
