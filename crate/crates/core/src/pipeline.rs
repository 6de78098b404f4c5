//! File-to-file pipeline stages.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::changes::{extract_all, ExtractStats, LogChangePair};
use crate::config::{ConfigFileError, PipelineConfig, DEFAULT_FORGE_API, DEFAULT_TRACKER_URL, FORGE_TOKEN_VAR, TRACKER_TOKEN_VAR};
use crate::http::{AuthScheme, HttpClient, RetryPolicy, TokenBucket};
use crate::linker::{link_issues, read_bundles, write_bundles, FixtureForge, Forge, GitHubForge, LinkStats};
use crate::metrics::{
    evaluate_corpus, join_responses, load_benchmark_corpus, load_responses, AdjustMatrix, CorpusStats, MetricsReport,
};
use crate::miner::{build_query, fetch_issues, FixtureIssueSource, IssueSource, JiraIssueSource, LogIssue, MineStats};
use crate::pairs::{
    apply_filters, build_entries, export_jsonl, load_method_corpus, read_jsonl, write_jsonl, BuildReport, FilterReport,
    LeakageIndex,
};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigFileError),
    #[error("missing input: {0}")]
    MissingInput(PathBuf),
    #[error("{0}")]
    Stage(String),
}

impl PipelineError {
    /// Process exit status for the error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::MissingInput(_) => 2,
            PipelineError::Stage(_) => 3,
        }
    }

    fn stage(e: impl std::fmt::Display) -> Self {
        PipelineError::Stage(e.to_string())
    }
}

fn require(path: &Path) -> Result<(), PipelineError> {
    if path.exists() {
        Ok(())
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(PipelineError::stage)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(PipelineError::stage)? + "\n";
    fs::write(path, text).map_err(|e| PipelineError::Stage(format!("{}: {e}", path.display())))
}

fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    require(path)?;
    read_jsonl(path).map_err(|e| PipelineError::Stage(format!("{}: {e}", path.display())))
}

fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<(), PipelineError> {
    write_jsonl(path, records).map_err(|e| PipelineError::Stage(format!("{}: {e}", path.display())))
}

fn fixtures_dir(config: &PipelineConfig, sub: &str) -> Result<PathBuf, PipelineError> {
    let root = config
        .fixtures
        .as_ref()
        .ok_or_else(|| ConfigFileError::Invalid("offline mode needs a fixtures directory".into()))?;
    let dir = root.join(sub);
    require(&dir)?;
    Ok(dir)
}

fn token(var: &str) -> Option<String> {
    std::env::var(var).ok().filter(|t| !t.trim().is_empty())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MineSummary {
    pub stage: String,
    pub query: String,
    pub output: String,
    pub stats: MineStats,
}

pub fn run_mine(config: &PipelineConfig) -> Result<MineSummary, PipelineError> {
    config.validate()?;
    let mut plan = build_query(&config.miner).map_err(|e| ConfigFileError::Invalid(e.to_string()))?;
    plan.page_size = config.tracker.page_size;
    plan.max_pages = config.tracker.max_pages;
    let source: Box<dyn IssueSource> = if config.offline {
        Box::new(FixtureIssueSource::new(fixtures_dir(config, "tracker")?))
    } else {
        let client = HttpClient::new(
            token(TRACKER_TOKEN_VAR),
            AuthScheme::Bearer,
            TokenBucket::new(config.tracker.concurrency as u32, config.tracker.requests_per_second),
            RetryPolicy::default(),
        );
        let base = config.tracker.base_url.as_deref().unwrap_or(DEFAULT_TRACKER_URL);
        Box::new(JiraIssueSource::new(base, client, config.tracker.concurrency))
    };
    let outcome =
        fetch_issues(source.as_ref(), &plan, &config.miner, &config.tracker.browse_base).map_err(PipelineError::stage)?;
    write_records(&config.paths.issues, &outcome.issues)?;
    Ok(MineSummary {
        stage: "mine".into(),
        query: plan.query_text,
        output: config.paths.issues.display().to_string(),
        stats: outcome.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub stage: String,
    pub output: String,
    pub stats: LinkStats,
}

const BUNDLE_MARKER: &str = ".aucad-bundles";

/// Empties a bundle directory this tool created earlier; refuses to touch
/// any other non-empty directory.
fn reset_bundle_dir(dir: &Path) -> Result<(), PipelineError> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(PipelineError::stage)?.next().is_some();
        if non_empty && !dir.join(BUNDLE_MARKER).is_file() {
            return Err(PipelineError::Stage(format!(
                "{} is not empty and was not written by a previous link run",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir).map_err(PipelineError::stage)?;
    }
    fs::create_dir_all(dir).map_err(PipelineError::stage)?;
    fs::write(dir.join(BUNDLE_MARKER), "").map_err(PipelineError::stage)
}

pub fn run_link(config: &PipelineConfig) -> Result<LinkSummary, PipelineError> {
    config.validate()?;
    let issues: Vec<LogIssue> = read_records(&config.paths.issues)?;
    let forge: Box<dyn Forge> = if config.offline {
        Box::new(FixtureForge::new(fixtures_dir(config, "forge")?))
    } else {
        let client = HttpClient::new(
            token(FORGE_TOKEN_VAR),
            AuthScheme::Token,
            TokenBucket::new(config.forge.concurrency as u32, config.forge.requests_per_second),
            RetryPolicy::default(),
        );
        Box::new(GitHubForge::new(config.forge.api_base.as_deref().unwrap_or(DEFAULT_FORGE_API), client))
    };
    let outcome = link_issues(&issues, forge.as_ref(), config.forge.concurrency).map_err(PipelineError::stage)?;
    reset_bundle_dir(&config.paths.bundles)?;
    write_bundles(&config.paths.bundles, &outcome.bundles).map_err(PipelineError::stage)?;
    write_records(&config.paths.links, &outcome.records)?;
    Ok(LinkSummary {
        stage: "link".into(),
        output: config.paths.bundles.display().to_string(),
        stats: outcome.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub stage: String,
    pub output: String,
    pub changes: usize,
    pub failed_bundles: Vec<String>,
    pub stats: ExtractStats,
}

pub fn run_extract(config: &PipelineConfig) -> Result<ExtractSummary, PipelineError> {
    config.validate()?;
    require(&config.paths.bundles)?;
    let bundles = read_bundles(&config.paths.bundles).map_err(PipelineError::stage)?;
    let (extraction, errors) = extract_all(&bundles, &config.detector()?);
    for e in &errors {
        log::warn!("{e}");
    }
    write_records(&config.paths.changes, &extraction.changes)?;
    Ok(ExtractSummary {
        stage: "extract".into(),
        output: config.paths.changes.display().to_string(),
        changes: extraction.changes.len(),
        failed_bundles: errors.iter().map(ToString::to_string).collect(),
        stats: extraction.stats,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub stage: String,
    pub output: String,
    pub entries: usize,
    pub corpus_methods: usize,
    pub build: BuildReport,
    pub filters: FilterReport,
}

pub fn run_build(config: &PipelineConfig) -> Result<BuildSummary, PipelineError> {
    config.validate()?;
    let changes: Vec<LogChangePair> = read_records(&config.paths.changes)?;
    let issues: Vec<LogIssue> = read_records(&config.paths.issues)?;
    let issues: HashMap<String, LogIssue> = issues.into_iter().map(|i| (i.key.clone(), i)).collect();
    let mut index = LeakageIndex::default();
    for corpus in &config.paths.eval_corpora {
        require(corpus)?;
        load_method_corpus(&mut index, corpus).map_err(PipelineError::stage)?;
    }
    let built = build_entries(&changes, &issues);
    let (entries, filters) = apply_filters(&config.detector()?, built.entries, &index);
    export_jsonl(&entries, &config.paths.entries).map_err(PipelineError::stage)?;
    write_records(&config.paths.added_deleted, &built.side_channel)?;
    let summary = BuildSummary {
        stage: "build".into(),
        output: config.paths.entries.display().to_string(),
        entries: entries.len(),
        corpus_methods: index.len(),
        build: built.report,
        filters,
    };
    write_json(&config.paths.filter_report, &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mine: MineSummary,
    pub link: LinkSummary,
    pub extract: ExtractSummary,
    pub build: BuildSummary,
}

/// mine, link, extract and build in sequence.
pub fn run_all(config: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    Ok(RunSummary {
        mine: run_mine(config)?,
        link: run_link(config)?,
        extract: run_extract(config)?,
        build: run_build(config)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub stage: String,
    pub output: String,
    pub corpus: CorpusStats,
    pub unmatched_responses: usize,
    pub report: MetricsReport,
}

/// Scores responses against a benchmark corpus and writes `report.json`.
pub fn run_eval(
    config: &PipelineConfig,
    truth: &Path,
    responses: &Path,
    level_matrix: Option<&Path>,
    out: &Path,
) -> Result<EvalSummary, PipelineError> {
    require(truth)?;
    require(responses)?;
    let matrix_path = level_matrix.or(config.paths.level_matrix.as_deref());
    let matrix = match matrix_path {
        Some(p) => {
            require(p)?;
            AdjustMatrix::load(p).map_err(|e| ConfigFileError::Invalid(e.to_string()))?
        }
        None => AdjustMatrix::default(),
    };
    let detector = config.detector()?;
    let (mut samples, corpus) = load_benchmark_corpus(&detector, truth).map_err(PipelineError::stage)?;
    let responses = load_responses(responses).map_err(PipelineError::stage)?;
    let unmatched_responses = join_responses(&mut samples, &responses);
    let report = evaluate_corpus(&detector, &samples, &matrix);
    write_json(out, &report)?;
    Ok(EvalSummary { stage: "eval".into(), output: out.display().to_string(), corpus, unmatched_responses, report })
}
