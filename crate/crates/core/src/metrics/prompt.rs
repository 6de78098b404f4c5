//! Zero-shot instruction prompt for log statement recommendation.

use serde::{Deserialize, Serialize};

pub const INSTRUCTION: &str = "Recommend the optimal log statements in the following given codes.";
pub const OUTPUT_RULE: &str =
    "You need to output the full code with optimal log statement inserted, and do not explain the reason.";

/// A rendered prompt plus whether the code fence had to be lengthened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub text: String,
    pub fence_lengthened: bool,
}

/// Renders the instruction template around `code`.
///
/// The code normally sits inline between triple backticks. Code that itself
/// contains a backtick run of three or more gets a longer fence, with the code
/// on lines of its own so the fences cannot merge with it.
pub fn render_prompt(code: &str) -> Prompt {
    let longest = longest_backtick_run(code);
    let head = format!("{INSTRUCTION}\n{OUTPUT_RULE}\n\nCode:\n");
    if longest < 3 && !code.starts_with('`') && !code.ends_with('`') {
        return Prompt { text: format!("{head}```{code}```"), fence_lengthened: false };
    }
    let fence = "`".repeat(longest.max(2) + 1);
    Prompt { text: format!("{head}{fence}\n{code}\n{fence}"), fence_lengthened: true }
}

pub fn build_prompt(code: &str) -> String {
    render_prompt(code).text
}

fn longest_backtick_run(text: &str) -> usize {
    let mut best = 0;
    let mut run = 0;
    for c in text.chars() {
        if c == '`' {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

/// Recovers the code embedded by [`render_prompt`].
pub fn prompt_code(prompt: &str) -> Option<&str> {
    let body = prompt.strip_prefix(&format!("{INSTRUCTION}\n{OUTPUT_RULE}\n\nCode:\n"))?;
    let fence_len = body.chars().take_while(|c| *c == '`').count();
    if fence_len < 3 {
        return None;
    }
    let fence = &body[..fence_len];
    let inner = body[fence_len..].strip_suffix(fence)?;
    match inner.strip_prefix('\n').and_then(|i| i.strip_suffix('\n')) {
        Some(block) if fence_len > 3 || block.starts_with('`') || block.ends_with('`') => Some(block),
        _ if fence_len == 3 => Some(inner),
        _ => None,
    }
}
