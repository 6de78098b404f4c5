//! Level accuracy and the must-adjust matrix.

use std::collections::BTreeMap;
use std::path::Path;

use crate::level::Level;

/// `must_adjust[truth][pred]`, indexed by level ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdjustMatrix {
    must_adjust: [[bool; 6]; 6],
}

#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("level matrix: {0}")]
    Json(#[from] serde_json::Error),
    #[error("level matrix: unknown level `{0}`")]
    UnknownLevel(String),
    #[error("level matrix: missing cell {0} -> {1}")]
    MissingCell(Level, Level),
    #[error("level matrix: diagonal cell {0} -> {0} must be false")]
    Diagonal(Level),
}

impl Default for AdjustMatrix {
    /// Severity classes {TRACE, DEBUG, INFO} and {WARN, ERROR, FATAL}; a
    /// prediction in the other class must be adjusted.
    fn default() -> Self {
        let mut must_adjust = [[false; 6]; 6];
        for (t, row) in must_adjust.iter_mut().enumerate() {
            for (p, cell) in row.iter_mut().enumerate() {
                *cell = (t < 3) != (p < 3);
            }
        }
        AdjustMatrix { must_adjust }
    }
}

impl AdjustMatrix {
    pub fn from_table(must_adjust: [[bool; 6]; 6]) -> Result<Self, MatrixError> {
        for (i, level) in Level::NAMED.iter().enumerate() {
            if must_adjust[i][i] {
                return Err(MatrixError::Diagonal(*level));
            }
        }
        Ok(AdjustMatrix { must_adjust })
    }

    pub fn must_adjust(&self, truth: Level, pred: Level) -> bool {
        match (truth.ordinal(), pred.ordinal()) {
            (Some(t), Some(p)) => self.must_adjust[t][p],
            _ => true,
        }
    }

    /// Parses `{"INFO": {"DEBUG": false, ...}, ...}` with all 36 cells present.
    pub fn from_json(text: &str) -> Result<Self, MatrixError> {
        let raw: BTreeMap<String, BTreeMap<String, bool>> = serde_json::from_str(text)?;
        let parse = |name: &str| {
            name.parse::<Level>()
                .ok()
                .filter(|l| l.ordinal().is_some())
                .ok_or_else(|| MatrixError::UnknownLevel(name.to_string()))
        };
        let mut cells: BTreeMap<(Level, Level), bool> = BTreeMap::new();
        for (truth, row) in &raw {
            let t = parse(truth)?;
            for (pred, value) in row {
                cells.insert((t, parse(pred)?), *value);
            }
        }
        let mut table = [[false; 6]; 6];
        for (ti, t) in Level::NAMED.iter().enumerate() {
            for (pi, p) in Level::NAMED.iter().enumerate() {
                table[ti][pi] = *cells.get(&(*t, *p)).ok_or(MatrixError::MissingCell(*t, *p))?;
            }
        }
        Self::from_table(table)
    }

    pub fn load(path: &Path) -> Result<Self, MatrixError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| MatrixError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let table: BTreeMap<&str, BTreeMap<&str, bool>> = Level::NAMED
            .iter()
            .map(|t| (t.as_str(), Level::NAMED.iter().map(|p| (p.as_str(), self.must_adjust(*t, *p))).collect()))
            .collect();
        serde_json::to_string_pretty(&table).expect("matrix serializes") + "\n"
    }
}

/// 1 when the levels are equal and known.
pub fn level_accuracy(truth: Level, pred: Level) -> bool {
    pred.ordinal().is_some() && truth == pred
}

/// 1 unless the matrix says the prediction must be adjusted; unknown levels
/// never count as correct.
pub fn adjusted_level_correct(truth: Level, pred: Level, matrix: &AdjustMatrix) -> bool {
    !matrix.must_adjust(truth, pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn info_debug_is_acceptable() {
        let m = AdjustMatrix::default();
        assert!(adjusted_level_correct(Level::Info, Level::Debug, &m));
        assert!(!level_accuracy(Level::Info, Level::Debug));
    }

    #[test]
    fn cross_class_must_adjust() {
        let m = AdjustMatrix::default();
        assert!(!adjusted_level_correct(Level::Debug, Level::Error, &m));
        assert!(!adjusted_level_correct(Level::Warn, Level::Info, &m));
        assert!(adjusted_level_correct(Level::Warn, Level::Error, &m));
    }

    #[test]
    fn unknown_prediction_is_wrong() {
        let m = AdjustMatrix::default();
        assert!(!adjusted_level_correct(Level::Info, Level::Unknown, &m));
        assert!(!level_accuracy(Level::Unknown, Level::Unknown));
    }

    #[test]
    fn json_round_trip() {
        let m = AdjustMatrix::default();
        assert_eq!(AdjustMatrix::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_tables() {
        let mut table = [[false; 6]; 6];
        table[2][2] = true;
        assert!(matches!(AdjustMatrix::from_table(table), Err(MatrixError::Diagonal(Level::Info))));
        assert!(matches!(AdjustMatrix::from_json("{}"), Err(MatrixError::MissingCell(..))));
        assert!(matches!(
            AdjustMatrix::from_json(r#"{"LOUD": {}}"#),
            Err(MatrixError::UnknownLevel(_))
        ));
    }
}
