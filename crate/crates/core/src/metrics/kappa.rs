//! Cohen's kappa for two raters with binary labels.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaStats {
    pub kappa: f64,
    pub p_o: f64,
    pub p_e: f64,
    /// `table[a][b]` counts items rated `a` by the first rater and `b` by the
    /// second, with index 1 for `true`.
    pub table: [[usize; 2]; 2],
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KappaError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no labels to compare")]
    Empty,
}

/// Cohen's kappa from the 2x2 contingency table. When chance agreement is
/// total, kappa is 1 for perfect observed agreement and 0 otherwise.
pub fn cohens_kappa(a: &[bool], b: &[bool]) -> Result<KappaStats, KappaError> {
    if a.len() != b.len() {
        return Err(KappaError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(KappaError::Empty);
    }
    let mut table = [[0usize; 2]; 2];
    for (x, y) in a.iter().zip(b) {
        table[*x as usize][*y as usize] += 1;
    }
    let n = a.len() as u128;
    let agree = (table[0][0] + table[1][1]) as u128;
    let a1 = (table[1][0] + table[1][1]) as u128;
    let b1 = (table[0][1] + table[1][1]) as u128;
    // Everything scaled by n^2 so kappa is a single exact division.
    let chance = a1 * b1 + (n - a1) * (n - b1);
    let total = n * n;
    let kappa = if chance == total {
        if agree == n { 1.0 } else { 0.0 }
    } else {
        ((agree * n) as f64 - chance as f64) / (total - chance) as f64
    };
    Ok(KappaStats {
        kappa,
        p_o: agree as f64 / n as f64,
        p_e: chance as f64 / total as f64,
        table,
        n: a.len(),
    })
}
