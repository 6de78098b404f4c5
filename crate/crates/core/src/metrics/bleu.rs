//! Sentence-level BLEU without smoothing.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuBreakdown {
    /// Clipped n-gram precisions for n = 1..=4 (0 when the candidate is shorter than n).
    pub precisions: [f64; MAX_ORDER],
    pub weights: [f64; MAX_ORDER],
    pub candidate_len: usize,
    pub reference_len: usize,
    pub brevity_penalty: f64,
    pub score: f64,
}

fn ngram_counts<T: AsRef<str>>(tokens: &[T], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
        }
    }
    counts
}

/// Scores `candidate` against a single `reference` with uniform weights over
/// orders 1..=4. Any zero precision makes the score 0. The brevity penalty is
/// `exp(1 - r/c)` for `c <= r` and 1 otherwise.
pub fn bleu_dm<T: AsRef<str>>(candidate: &[T], reference: &[T]) -> BleuBreakdown {
    let weights = [1.0 / MAX_ORDER as f64; MAX_ORDER];
    let (c, r) = (candidate.len(), reference.len());
    let mut precisions = [0.0; MAX_ORDER];
    for (i, p) in precisions.iter_mut().enumerate() {
        let n = i + 1;
        if c < n {
            continue;
        }
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let matched: usize = cand.iter().map(|(g, k)| (*k).min(refs.get(g).copied().unwrap_or(0))).sum();
        *p = matched as f64 / (c + 1 - n) as f64;
    }
    let brevity_penalty = if c == 0 {
        0.0
    } else if c <= r {
        (1.0 - r as f64 / c as f64).exp()
    } else {
        1.0
    };
    let score = if c == 0 || precisions.contains(&0.0) {
        0.0
    } else {
        let log_sum: f64 = weights.iter().zip(&precisions).map(|(w, p)| w * p.ln()).sum();
        brevity_penalty * log_sum.exp()
    };
    BleuBreakdown { precisions, weights, candidate_len: c, reference_len: r, brevity_penalty, score }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn identical_scores_one() {
        let t = toks("failed to open file for writing");
        let b = bleu_dm(&t, &t);
        assert_eq!(b.score, 1.0);
        assert_eq!(b.brevity_penalty, 1.0);
    }

    #[test]
    fn short_candidate_scores_zero() {
        assert_eq!(bleu_dm(&toks("a b c"), &toks("a b c d e")).score, 0.0);
    }

    #[test]
    fn empty_candidate() {
        let b = bleu_dm::<&str>(&[], &toks("a b"));
        assert_eq!(b.score, 0.0);
    }

    #[test]
    fn one_token_substitution() {
        // p = 4/5, 3/4, 2/3, 1/2 and equal lengths.
        let b = bleu_dm(&toks("a b c d e"), &toks("a b c d f"));
        let expected = ((0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).ln() / 4.0).exp();
        assert!((b.score - expected).abs() < 1e-12);
    }

    #[test]
    fn clipping() {
        let b = bleu_dm(&toks("the the the the"), &toks("the cat"));
        assert_eq!(b.precisions[0], 0.25);
    }

    #[test]
    fn longer_candidate_has_no_penalty() {
        let b = bleu_dm(&toks("a b c d e f"), &toks("a b c d e"));
        assert_eq!(b.brevity_penalty, 1.0);
    }
}
