//! Relevance review: assignment plans, the label journal, agreement and export.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::{cohens_kappa, KappaStats};
use crate::pairs::{export_jsonl, DatasetEntry, Relevance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub annotators: Vec<String>,
    pub per_annotator: usize,
    pub seed: u64,
    /// Entries every annotator labels.
    pub overlap_ids: Vec<String>,
    pub assignments: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("at least two annotators are required")]
    TooFewAnnotators,
    #[error("duplicate or empty annotator id `{0}`")]
    BadAnnotator(String),
    #[error("per-annotator load must be positive")]
    ZeroLoad,
    #[error("duplicate entry id `{0}`")]
    DuplicateEntry(String),
    #[error("{annotators} annotators x {per_annotator} entries cannot cover {entries} entries")]
    Infeasible { entries: usize, annotators: usize, per_annotator: usize },
}

/// Number of entries every annotator labels when `a` annotators take
/// `per` entries each out of `n`, so that every entry is labeled at least once.
pub fn overlap_size(n: usize, per: usize, a: usize) -> usize {
    if a < 2 || per * a < n {
        return 0;
    }
    ((a * per - n) / (a - 1)).min(n)
}

/// Shuffles the ids under `seed`, takes the overlap from the front and splits
/// the rest into contiguous chunks, one per annotator.
pub fn plan_assignments(
    entry_ids: &[String],
    annotators: &[String],
    per_annotator: usize,
    seed: u64,
) -> Result<AssignmentPlan, PlanError> {
    if annotators.len() < 2 {
        return Err(PlanError::TooFewAnnotators);
    }
    let mut names = BTreeSet::new();
    for a in annotators {
        if a.trim().is_empty() || !names.insert(a.as_str()) {
            return Err(PlanError::BadAnnotator(a.clone()));
        }
    }
    if per_annotator == 0 {
        return Err(PlanError::ZeroLoad);
    }
    let mut ids: Vec<String> = entry_ids.to_vec();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(PlanError::DuplicateEntry(w[0].clone()));
    }
    let (n, a) = (ids.len(), annotators.len());
    if per_annotator * a < n {
        return Err(PlanError::Infeasible { entries: n, annotators: a, per_annotator });
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = overlap_size(n, per_annotator, a);
    let (overlap, rest) = ids.split_at(k);
    let chunk = rest.len().div_ceil(a);
    let mut assignments = BTreeMap::new();
    for (i, annotator) in annotators.iter().enumerate() {
        let lo = (i * chunk).min(rest.len());
        let hi = ((i + 1) * chunk).min(rest.len());
        let mut list = overlap.to_vec();
        list.extend_from_slice(&rest[lo..hi]);
        assignments.insert(annotator.clone(), list);
    }
    Ok(AssignmentPlan {
        annotators: annotators.to_vec(),
        per_annotator,
        seed,
        overlap_ids: overlap.to_vec(),
        assignments,
    })
}

impl AssignmentPlan {
    pub fn is_assigned(&self, annotator: &str, entry_id: &str) -> bool {
        self.assignments.get(annotator).is_some_and(|ids| ids.iter().any(|i| i == entry_id))
    }

    /// Annotators the entry is assigned to, in plan order.
    pub fn assignees(&self, entry_id: &str) -> Vec<&str> {
        self.annotators.iter().filter(|a| self.is_assigned(a, entry_id)).map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub entry_id: String,
    pub annotator: String,
    pub relevant: bool,
    #[serde(default)]
    pub note: String,
    pub timestamp: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ReviewError {
    #[error("unknown entry `{0}`")]
    UnknownEntry(String),
    #[error("entry `{entry_id}` is not assigned to `{annotator}`")]
    NotAssigned { entry_id: String, annotator: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Journal { path: PathBuf, line: usize, message: String },
    #[error("export blocked: {} unresolved entries", .0.len())]
    Unresolved(Vec<String>),
}

impl ReviewError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ReviewError + '_ {
        move |source| ReviewError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelAck {
    pub entry_id: String,
    pub annotator: String,
    /// False when the write repeated the current label and was not journaled.
    pub appended: bool,
    pub history_len: usize,
}

/// Final state of an entry's review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Unreviewed,
    /// Some assignees labeled and agree; others have not labeled yet.
    Partial(bool),
    Decided(bool),
    Disagreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementStats {
    pub annotators: (String, String),
    pub overlap_size: usize,
    /// Overlap entries labeled by both annotators.
    pub subset_size: usize,
    pub stats: Option<KappaStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewExportSummary {
    pub path: String,
    pub total: usize,
    pub exported: usize,
    pub non_relevant: usize,
    pub unresolved: Vec<String>,
    pub unreviewed: usize,
    /// exported / total.
    pub retention: f64,
}

/// Entries under review, the plan and the replayed label journal.
#[derive(Debug)]
pub struct ReviewStore {
    entries: Vec<DatasetEntry>,
    index: HashMap<String, usize>,
    plan: AssignmentPlan,
    adjudicator: Option<String>,
    journal_path: PathBuf,
    history: Vec<AnnotationRecord>,
    current: BTreeMap<(String, String), usize>,
}

impl ReviewStore {
    /// Opens the store and replays an existing journal. A final line without
    /// its newline is a torn append and is ignored.
    pub fn open(
        entries: Vec<DatasetEntry>,
        plan: AssignmentPlan,
        adjudicator: Option<String>,
        journal_path: &Path,
    ) -> Result<Self, ReviewError> {
        let index = entries.iter().enumerate().map(|(i, e)| (e.id.clone(), i)).collect();
        let mut store = ReviewStore {
            entries,
            index,
            plan,
            adjudicator,
            journal_path: journal_path.to_path_buf(),
            history: Vec::new(),
            current: BTreeMap::new(),
        };
        if journal_path.exists() {
            let text = fs::read_to_string(journal_path).map_err(ReviewError::io(journal_path))?;
            let complete = if text.ends_with('\n') { text.as_str() } else { text.rsplit_once('\n').map_or("", |(h, _)| h) };
            for (i, line) in complete.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let journal_err =
                    |message: String| ReviewError::Journal { path: journal_path.to_path_buf(), line: i + 1, message };
                let record: AnnotationRecord = serde_json::from_str(line).map_err(|e| journal_err(e.to_string()))?;
                store.check(&record.entry_id, &record.annotator).map_err(|e| journal_err(e.to_string()))?;
                store.apply(record);
            }
        }
        Ok(store)
    }

    fn check(&self, entry_id: &str, annotator: &str) -> Result<(), ReviewError> {
        if !self.index.contains_key(entry_id) {
            return Err(ReviewError::UnknownEntry(entry_id.to_string()));
        }
        if self.adjudicator.as_deref() != Some(annotator) && !self.plan.is_assigned(annotator, entry_id) {
            return Err(ReviewError::NotAssigned { entry_id: entry_id.to_string(), annotator: annotator.to_string() });
        }
        Ok(())
    }

    fn apply(&mut self, record: AnnotationRecord) {
        self.current.insert((record.entry_id.clone(), record.annotator.clone()), self.history.len());
        self.history.push(record);
    }

    pub fn plan(&self) -> &AssignmentPlan {
        &self.plan
    }

    pub fn adjudicator(&self) -> Option<&str> {
        self.adjudicator.as_deref()
    }

    pub fn entries(&self) -> &[DatasetEntry] {
        &self.entries
    }

    pub fn entry(&self, id: &str) -> Option<&DatasetEntry> {
        self.index.get(id).map(|i| &self.entries[*i])
    }

    pub fn label(&self, entry_id: &str, annotator: &str) -> Option<&AnnotationRecord> {
        self.current.get(&(entry_id.to_string(), annotator.to_string())).map(|i| &self.history[*i])
    }

    /// Current labels of an entry keyed by annotator.
    pub fn labels(&self, entry_id: &str) -> BTreeMap<&str, &AnnotationRecord> {
        self.current
            .range((entry_id.to_string(), String::new())..)
            .take_while(|((e, _), _)| e == entry_id)
            .map(|((_, a), i)| (a.as_str(), &self.history[*i]))
            .collect()
    }

    pub fn history(&self, entry_id: &str) -> Vec<&AnnotationRecord> {
        self.history.iter().filter(|r| r.entry_id == entry_id).collect()
    }

    pub fn journal_len(&self) -> usize {
        self.history.len()
    }

    /// Journals a label unless it repeats the annotator's current one.
    pub fn record_label(&mut self, record: AnnotationRecord) -> Result<LabelAck, ReviewError> {
        self.check(&record.entry_id, &record.annotator)?;
        let unchanged = self
            .label(&record.entry_id, &record.annotator)
            .is_some_and(|cur| cur.relevant == record.relevant && cur.note == record.note);
        let (entry_id, annotator) = (record.entry_id.clone(), record.annotator.clone());
        if !unchanged {
            let mut line = serde_json::to_string(&record).expect("record serializes");
            line.push('\n');
            if let Some(parent) = self.journal_path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(ReviewError::io(parent))?;
            }
            let path = self.journal_path.clone();
            let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(ReviewError::io(&path))?;
            file.write_all(line.as_bytes()).map_err(ReviewError::io(&path))?;
            file.sync_data().map_err(ReviewError::io(&path))?;
            self.apply(record);
        }
        Ok(LabelAck {
            history_len: self.history.iter().filter(|r| r.entry_id == entry_id && r.annotator == annotator).count(),
            entry_id,
            annotator,
            appended: !unchanged,
        })
    }

    /// An adjudication label decides; otherwise the assignees' labels do.
    pub fn resolution(&self, entry_id: &str) -> Resolution {
        if let Some(adj) = self.adjudicator.as_deref().and_then(|a| self.label(entry_id, a)) {
            return Resolution::Decided(adj.relevant);
        }
        let assignees = self.plan.assignees(entry_id);
        let votes: Vec<bool> = assignees.iter().filter_map(|a| self.label(entry_id, a)).map(|r| r.relevant).collect();
        match votes.first() {
            None => Resolution::Unreviewed,
            Some(first) if votes.iter().any(|v| v != first) => Resolution::Disagreement,
            Some(first) if votes.len() < assignees.len() => Resolution::Partial(*first),
            Some(first) => Resolution::Decided(*first),
        }
    }

    pub fn relevance(&self, entry_id: &str) -> Relevance {
        match self.resolution(entry_id) {
            Resolution::Decided(true) => Relevance::Relevant,
            Resolution::Decided(false) => Relevance::NonRelevant,
            _ => Relevance::Unreviewed,
        }
    }

    /// Overlap entries with disagreeing labels and no adjudication.
    pub fn disagreements(&self) -> Vec<String> {
        self.plan
            .overlap_ids
            .iter()
            .filter(|id| self.resolution(id) == Resolution::Disagreement)
            .cloned()
            .collect()
    }

    /// Cohen's kappa of the first two plan annotators over the overlap
    /// entries both have labeled.
    pub fn agreement_stats(&self) -> AgreementStats {
        let (a, b) = (&self.plan.annotators[0], &self.plan.annotators[1]);
        let mut la = Vec::new();
        let mut lb = Vec::new();
        for id in &self.plan.overlap_ids {
            if let (Some(x), Some(y)) = (self.label(id, a), self.label(id, b)) {
                la.push(x.relevant);
                lb.push(y.relevant);
            }
        }
        AgreementStats {
            annotators: (a.clone(), b.clone()),
            overlap_size: self.plan.overlap_ids.len(),
            subset_size: la.len(),
            stats: cohens_kappa(&la, &lb).ok(),
        }
    }

    /// Writes the entries judged relevant. Without `allow_partial`, any entry
    /// that is not decided blocks the export.
    pub fn export_reviewed(&self, path: &Path, allow_partial: bool) -> Result<ReviewExportSummary, ReviewError> {
        let mut kept = Vec::new();
        let mut non_relevant = 0;
        let mut unresolved = Vec::new();
        let mut unreviewed = 0;
        let mut blocking = Vec::new();
        for entry in &self.entries {
            match self.resolution(&entry.id) {
                Resolution::Decided(true) => kept.push(entry),
                Resolution::Decided(false) => non_relevant += 1,
                Resolution::Partial(v) => {
                    blocking.push(entry.id.clone());
                    if v {
                        kept.push(entry);
                    } else {
                        non_relevant += 1;
                    }
                }
                Resolution::Disagreement => {
                    blocking.push(entry.id.clone());
                    unresolved.push(entry.id.clone());
                }
                Resolution::Unreviewed => {
                    blocking.push(entry.id.clone());
                    unreviewed += 1;
                }
            }
        }
        if !allow_partial && !blocking.is_empty() {
            blocking.sort();
            return Err(ReviewError::Unresolved(blocking));
        }
        let exported: Vec<DatasetEntry> =
            kept.into_iter().map(|e| DatasetEntry { relevance: Relevance::Relevant, ..e.clone() }).collect();
        export_jsonl(&exported, path).map_err(ReviewError::io(path))?;
        unresolved.sort();
        let total = self.entries.len();
        Ok(ReviewExportSummary {
            path: path.display().to_string(),
            total,
            exported: exported.len(),
            non_relevant,
            unresolved,
            unreviewed,
            retention: if total == 0 { 0.0 } else { exported.len() as f64 / total as f64 },
        })
    }
}
