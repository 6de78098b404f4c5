//! Loading of benchmark methods and model responses.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::EvalSample;
use crate::java::{fragment_log_statements, remove_log_statement, LogDetector};

/// One benchmark method. `target_line` (1-based within `method`) picks the
/// log statement when the method has several.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub id: String,
    #[serde(alias = "code")]
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    pub response: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records: usize,
    pub samples: usize,
    pub skipped_no_log: usize,
    pub skipped_ambiguous: usize,
    pub skipped_unparseable: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Record { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("{path}:{line}: duplicate id `{id}`")]
    DuplicateId { path: PathBuf, line: usize, id: String },
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, CorpusError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line)
            .map_err(|source| CorpusError::Record { path: path.to_path_buf(), line: i + 1, source })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

fn truth_records(path: &Path) -> Result<Vec<TruthRecord>, CorpusError> {
    if !path.is_dir() {
        return Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "java"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for file in files {
        let sidecar = file.with_extension("target");
        let target_line = if sidecar.is_file() { read(&sidecar)?.trim().parse().ok() } else { None };
        out.push(TruthRecord {
            id: file.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            method: read(&file)?,
            target_line,
        });
    }
    Ok(out)
}

/// Loads benchmark methods from a JSONL file of [`TruthRecord`]s or from a
/// directory of `.java` files, each optionally with a `<name>.target` file
/// holding the target line.
///
/// The input code of each sample is the method with its target log statement
/// removed. Records without a log statement, or with several and no target,
/// are skipped and counted.
pub fn load_benchmark_corpus(detector: &LogDetector, path: &Path) -> Result<(Vec<EvalSample>, CorpusStats), CorpusError> {
    let records = truth_records(path)?;
    let mut stats = CorpusStats { records: records.len(), ..CorpusStats::default() };
    let mut samples = Vec::new();
    for record in records {
        let Ok(logs) = fragment_log_statements(detector, &record.method) else {
            stats.skipped_unparseable += 1;
            continue;
        };
        let target = match (record.target_line, logs.len()) {
            (_, 0) => {
                stats.skipped_no_log += 1;
                continue;
            }
            (Some(line), _) => logs.into_iter().find(|s| s.line == line),
            (None, 1) => logs.into_iter().next(),
            (None, _) => None,
        };
        let Some(truth_log) = target else {
            stats.skipped_ambiguous += 1;
            continue;
        };
        let Some(input_code) = remove_log_statement(&record.method, 1, &truth_log) else {
            stats.skipped_unparseable += 1;
            continue;
        };
        samples.push(EvalSample {
            id: record.id,
            input_code,
            response_code: String::new(),
            truth_method: record.method,
            truth_log,
        });
    }
    stats.samples = samples.len();
    Ok((samples, stats))
}

pub fn load_responses(path: &Path) -> Result<HashMap<String, String>, CorpusError> {
    let mut out = HashMap::new();
    for (line, record) in read_jsonl::<ResponseRecord>(path)? {
        if out.insert(record.id.clone(), record.response).is_some() {
            return Err(CorpusError::DuplicateId { path: path.to_path_buf(), line, id: record.id });
        }
    }
    Ok(out)
}

/// Attaches responses by id. Samples without a response keep an empty one
/// and will score as missing.
pub fn join_responses(samples: &mut [EvalSample], responses: &HashMap<String, String>) -> usize {
    let mut unmatched = 0;
    for sample in samples {
        match responses.get(&sample.id) {
            Some(r) => sample.response_code = r.clone(),
            None => unmatched += 1,
        }
    }
    unmatched
}
