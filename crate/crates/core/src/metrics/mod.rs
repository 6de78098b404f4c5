//! Scoring of generated log statements against ground truth.

mod bleu;
mod corpus;
mod kappa;
mod level;
mod message;
mod prompt;

pub use bleu::{bleu_dm, BleuBreakdown, MAX_ORDER};
pub use corpus::{
    join_responses, load_benchmark_corpus, load_responses, CorpusError, CorpusStats, ResponseRecord, TruthRecord,
};
pub use kappa::{cohens_kappa, KappaError, KappaStats};
pub use level::{adjusted_level_correct, level_accuracy, AdjustMatrix, MatrixError};
pub use message::{message_accuracy, variable_prf, VariableScores};
pub use prompt::{build_prompt, prompt_code, render_prompt, Prompt, INSTRUCTION, OUTPUT_RULE};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::java::{fragment_log_statements, remove_log_statement, LogDetector, LogStatement};
use crate::text::{collapse_whitespace, word_tokens};

/// A model response paired with its ground truth method.
///
/// `truth_log` line numbers are 1-based within `truth_method`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSample {
    pub id: String,
    pub input_code: String,
    pub response_code: String,
    pub truth_method: String,
    pub truth_log: LogStatement,
}

/// Takes the code out of a markdown fence when the response has one.
pub fn strip_code_fence(response: &str) -> &str {
    let Some(open) = response.find("```") else {
        return response;
    };
    let fence_len = response[open..].chars().take_while(|c| *c == '`').count();
    let fence = &response[open..open + fence_len];
    let mut body = &response[open + fence_len..];
    // A language tag such as ```java ends at the first newline.
    if let Some(nl) = body.find('\n') {
        let tag = &body[..nl];
        if !tag.is_empty() && tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '+') {
            body = &body[nl + 1..];
        }
    }
    match body.find(fence) {
        Some(close) => &body[..close],
        None => body,
    }
}

/// The first log statement of the response whose normalised text is not
/// accounted for by the input code.
pub fn locate_generated_log(detector: &LogDetector, sample: &EvalSample) -> Option<LogStatement> {
    let response = strip_code_fence(&sample.response_code);
    let generated = fragment_log_statements(detector, response).ok()?;
    let mut existing: HashMap<String, usize> = HashMap::new();
    for stmt in fragment_log_statements(detector, &sample.input_code).unwrap_or_default() {
        *existing.entry(stmt.normalized_text()).or_insert(0) += 1;
    }
    generated.into_iter().find(|stmt| match existing.get_mut(&stmt.normalized_text()) {
        Some(n) if *n > 0 => {
            *n -= 1;
            false
        }
        _ => true,
    })
}

/// Same surrounding code once both log statements are removed, and the same
/// statement slot.
pub fn position_accuracy(sample: &EvalSample, generated: &LogStatement) -> bool {
    let response = strip_code_fence(&sample.response_code);
    let (Some(left), Some(right)) = (
        remove_log_statement(response, 1, generated),
        remove_log_statement(&sample.truth_method, 1, &sample.truth_log),
    ) else {
        return false;
    };
    collapse_whitespace(&left) == collapse_whitespace(&right)
        && generated.statement_index == sample.truth_log.statement_index
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub id: String,
    pub located: bool,
    pub pa: f64,
    pub la: f64,
    pub adj_la: f64,
    pub ma: f64,
    pub bleu_dm: f64,
    pub vp: f64,
    pub vr: f64,
    pub vf1: f64,
}

impl SampleScores {
    fn missing(id: &str) -> Self {
        SampleScores {
            id: id.to_string(),
            located: false,
            pa: 0.0,
            la: 0.0,
            adj_la: 0.0,
            ma: 0.0,
            bleu_dm: 0.0,
            vp: 0.0,
            vr: 0.0,
            vf1: 0.0,
        }
    }

    fn values(&self) -> [f64; 8] {
        [self.pa, self.la, self.adj_la, self.ma, self.bleu_dm, self.vp, self.vr, self.vf1]
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Scores one sample. Messages are compared on the words of their string
/// literals; variables on their whitespace-normalised expressions.
pub fn score_sample(detector: &LogDetector, sample: &EvalSample, matrix: &AdjustMatrix) -> SampleScores {
    let Some(generated) = locate_generated_log(detector, sample) else {
        return SampleScores::missing(&sample.id);
    };
    let truth = &sample.truth_log;
    let pred_words = word_tokens(&generated.message_literals);
    let truth_words = word_tokens(&truth.message_literals);
    let norm = |v: &[String]| v.iter().map(|e| collapse_whitespace(e)).collect::<Vec<_>>();
    let vars = variable_prf(&norm(&generated.variable_exprs), &norm(&truth.variable_exprs));
    SampleScores {
        id: sample.id.clone(),
        located: true,
        pa: indicator(position_accuracy(sample, &generated)),
        la: indicator(level_accuracy(truth.level, generated.level)),
        adj_la: indicator(adjusted_level_correct(truth.level, generated.level, matrix)),
        ma: message_accuracy(&pred_words, &truth_words),
        bleu_dm: bleu_dm(&pred_words, &truth_words).score,
        vp: vars.precision,
        vr: vars.recall,
        vf1: vars.f1,
    }
}

/// Arithmetic means over all samples; `None` for an empty corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub pa: Option<f64>,
    pub la: Option<f64>,
    pub adj_la: Option<f64>,
    pub ma: Option<f64>,
    pub bleu_dm: Option<f64>,
    pub vp: Option<f64>,
    pub vr: Option<f64>,
    pub vf1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub missing: usize,
    pub means: MetricMeans,
    pub per_sample: Vec<SampleScores>,
}

/// Scores every sample in parallel; a sample without a located log scores 0
/// everywhere and is counted as missing.
pub fn evaluate_corpus(detector: &LogDetector, samples: &[EvalSample], matrix: &AdjustMatrix) -> MetricsReport {
    let per_sample: Vec<SampleScores> = samples.par_iter().map(|s| score_sample(detector, s, matrix)).collect();
    let mut sums = [0.0f64; 8];
    for s in &per_sample {
        for (acc, v) in sums.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    let n = per_sample.len();
    let mean = |i: usize| (n > 0).then(|| sums[i] / n as f64);
    MetricsReport {
        samples: n,
        missing: per_sample.iter().filter(|s| !s.located).count(),
        means: MetricMeans {
            pa: mean(0),
            la: mean(1),
            adj_la: mean(2),
            ma: mean(3),
            bleu_dm: mean(4),
            vp: mean(5),
            vr: mean(6),
            vf1: mean(7),
        },
        per_sample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::Level;

    const TRUTH: &str = "void connect(String host) {\n  open(host);\n  LOG.info(\"connected to remote host {}\", host);\n  ready();\n}";
    const INPUT: &str = "void connect(String host) {\n  open(host);\n  ready();\n}";

    fn sample(response: &str) -> EvalSample {
        let truth_log = fragment_log_statements(&LogDetector::default(), TRUTH).unwrap().remove(0);
        EvalSample {
            id: "s1".into(),
            input_code: INPUT.into(),
            response_code: response.into(),
            truth_method: TRUTH.into(),
            truth_log,
        }
    }

    #[test]
    fn perfect_response() {
        let s = score_sample(&LogDetector::default(), &sample(TRUTH), &AdjustMatrix::default());
        assert!(s.located);
        assert_eq!(s.values(), [1.0; 8]);
    }

    #[test]
    fn fenced_response_with_debug_level() {
        let response = format!("```java\n{}\n```", TRUTH.replace("LOG.info", "LOG.debug"));
        let s = score_sample(&LogDetector::default(), &sample(&response), &AdjustMatrix::default());
        assert_eq!((s.pa, s.la, s.adj_la, s.ma), (1.0, 0.0, 1.0, 1.0));
    }

    #[test]
    fn no_insertion_is_missing() {
        let s = score_sample(&LogDetector::default(), &sample(INPUT), &AdjustMatrix::default());
        assert!(!s.located);
        assert_eq!(s.values(), [0.0; 8]);
    }

    #[test]
    fn earlier_of_two_insertions() {
        let response = "void connect(String host) {\n  LOG.debug(\"start\");\n  open(host);\n  LOG.info(\"connected to remote host {}\", host);\n  ready();\n}";
        let got = locate_generated_log(&LogDetector::default(), &sample(response)).unwrap();
        assert_eq!(got.line, 2);
        assert_eq!(got.level, Level::Debug);
    }

    #[test]
    fn wrong_slot_and_mutated_code() {
        let earlier = "void connect(String host) {\n  LOG.info(\"connected to remote host {}\", host);\n  open(host);\n  ready();\n}";
        let s = score_sample(&LogDetector::default(), &sample(earlier), &AdjustMatrix::default());
        assert_eq!(s.pa, 0.0);
        let mutated = TRUTH.replace("ready();", "finish();");
        let s = score_sample(&LogDetector::default(), &sample(&mutated), &AdjustMatrix::default());
        assert_eq!((s.pa, s.la), (0.0, 1.0));
    }

    #[test]
    fn corpus_means() {
        let samples = [sample(TRUTH), EvalSample { id: "s2".into(), ..sample(INPUT) }];
        let r = evaluate_corpus(&LogDetector::default(), &samples, &AdjustMatrix::default());
        assert_eq!((r.samples, r.missing, r.means.pa), (2, 1, Some(0.5)));
        let empty = evaluate_corpus(&LogDetector::default(), &[], &AdjustMatrix::default());
        assert_eq!(empty.means, MetricMeans::default());
        assert_eq!(serde_json::to_value(&empty.means).unwrap()["pa"], serde_json::Value::Null);
    }

    #[test]
    fn fence_stripping() {
        assert_eq!(strip_code_fence("plain"), "plain");
        assert_eq!(strip_code_fence("Here:\n```java\nint x;\n```\nDone"), "int x;\n");
        assert_eq!(strip_code_fence("```int x;```"), "int x;");
    }
}
