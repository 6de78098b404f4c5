//! Message and variable overlap metrics.

use std::collections::{BTreeSet, HashMap};

/// Share of predicted words that also occur in the truth, with counts clipped
/// to the truth's multiplicities. An empty prediction scores 0.
pub fn message_accuracy<T: AsRef<str>>(pred: &[T], truth: &[T]) -> f64 {
    if pred.is_empty() {
        return 0.0;
    }
    let mut available: HashMap<&str, usize> = HashMap::new();
    for t in truth {
        *available.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut hits = 0usize;
    for p in pred {
        if let Some(n) = available.get_mut(p.as_ref()) {
            if *n > 0 {
                *n -= 1;
                hits += 1;
            }
        }
    }
    hits as f64 / pred.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VariableScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Set precision, recall and F1 of predicted variable expressions.
///
/// Both sets empty scores (1, 1, 1). An empty prediction has precision 0, an
/// empty truth with a non-empty prediction has recall 0.
pub fn variable_prf<T: AsRef<str>>(pred: &[T], truth: &[T]) -> VariableScores {
    let p: BTreeSet<&str> = pred.iter().map(AsRef::as_ref).collect();
    let t: BTreeSet<&str> = truth.iter().map(AsRef::as_ref).collect();
    if p.is_empty() && t.is_empty() {
        return VariableScores { precision: 1.0, recall: 1.0, f1: 1.0 };
    }
    let common = p.intersection(&t).count() as f64;
    let precision = if p.is_empty() { 0.0 } else { common / p.len() as f64 };
    let recall = if t.is_empty() { 0.0 } else { common / t.len() as f64 };
    let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    VariableScores { precision, recall, f1 }
}
