//! Pipeline configuration read from a TOML file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::java::{LogDetector, DEFAULT_RECEIVER_PATTERN};
use crate::miner::MinerConfig;

pub const DEFAULT_TRACKER_URL: &str = "https://issues.apache.org/jira";
pub const DEFAULT_FORGE_API: &str = "https://api.github.com";
pub const TRACKER_TOKEN_VAR: &str = "AUCAD_TRACKER_TOKEN";
pub const FORGE_TOKEN_VAR: &str = "AUCAD_FORGE_TOKEN";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Live search endpoint; must stay unset in offline mode.
    pub base_url: Option<String>,
    /// Prefix of issue URLs (`<browse_base>/browse/<KEY>`).
    pub browse_base: String,
    pub page_size: usize,
    pub max_pages: Option<usize>,
    pub concurrency: usize,
    pub requests_per_second: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            base_url: None,
            browse_base: DEFAULT_TRACKER_URL.into(),
            page_size: crate::miner::DEFAULT_PAGE_SIZE,
            max_pages: None,
            concurrency: 4,
            requests_per_second: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForgeConfig {
    pub api_base: Option<String>,
    pub concurrency: usize,
    pub requests_per_second: f64,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig { api_base: None, concurrency: 4, requests_per_second: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub receiver_pattern: String,
    pub extra_callees: Vec<String>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { receiver_pattern: DEFAULT_RECEIVER_PATTERN.into(), extra_callees: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub issues: PathBuf,
    pub links: PathBuf,
    pub bundles: PathBuf,
    pub changes: PathBuf,
    pub entries: PathBuf,
    pub added_deleted: PathBuf,
    pub filter_report: PathBuf,
    /// Evaluation corpora whose methods must not appear in the dataset.
    pub eval_corpora: Vec<PathBuf>,
    pub level_matrix: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        let out = Path::new("out");
        PathsConfig {
            issues: out.join("issues.jsonl"),
            links: out.join("links.jsonl"),
            bundles: out.join("bundles"),
            changes: out.join("changes.jsonl"),
            entries: out.join("entries.jsonl"),
            added_deleted: out.join("added_deleted.jsonl"),
            filter_report: out.join("filter_report.json"),
            eval_corpora: Vec::new(),
            level_matrix: None,
        }
    }
}

impl PathsConfig {
    pub fn outputs(&self) -> [(&'static str, &Path); 7] {
        [
            ("issues", &self.issues),
            ("links", &self.links),
            ("bundles", &self.bundles),
            ("changes", &self.changes),
            ("entries", &self.entries),
            ("added_deleted", &self.added_deleted),
            ("filter_report", &self.filter_report),
        ]
    }

    /// Resolves relative paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.issues,
            &mut self.links,
            &mut self.bundles,
            &mut self.changes,
            &mut self.entries,
            &mut self.added_deleted,
            &mut self.filter_report,
        ] {
            fix(p);
        }
        self.eval_corpora.iter_mut().for_each(fix);
        if let Some(p) = self.level_matrix.as_mut() {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub offline: bool,
    /// Root holding `tracker/` pages and a `forge/` tree for offline runs.
    pub fixtures: Option<PathBuf>,
    pub seed: u64,
    pub miner: MinerConfig,
    pub tracker: TrackerConfig,
    pub forge: ForgeConfig,
    pub detector: DetectorConfig,
    pub paths: PathsConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl PipelineConfig {
    /// Reads a TOML file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigFileError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigFileError::Io { path: path.to_path_buf(), source })?;
        let mut config: PipelineConfig =
            toml::from_str(&text).map_err(|source| ConfigFileError::Parse { path: path.to_path_buf(), source })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.paths.rebase(base);
        if let Some(f) = config.fixtures.as_mut() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigFileError> {
        let invalid = |m: String| Err(ConfigFileError::Invalid(m));
        self.miner.validate().map_err(|e| ConfigFileError::Invalid(e.to_string()))?;
        if self.offline {
            if self.fixtures.is_none() {
                return invalid("offline mode needs a fixtures directory".into());
            }
            if let Some(url) = &self.tracker.base_url {
                return invalid(format!("offline mode forbids the live tracker endpoint {url}"));
            }
            if let Some(url) = &self.forge.api_base {
                return invalid(format!("offline mode forbids the live forge endpoint {url}"));
            }
        }
        let mut seen: BTreeMap<&Path, &str> = BTreeMap::new();
        for (name, path) in self.paths.outputs() {
            if let Some(other) = seen.insert(path, name) {
                return invalid(format!("outputs `{other}` and `{name}` share the path {}", path.display()));
            }
        }
        if self.tracker.page_size == 0 || self.tracker.concurrency == 0 || self.forge.concurrency == 0 {
            return invalid("page size and concurrency must be positive".into());
        }
        if self.tracker.requests_per_second <= 0.0 || self.forge.requests_per_second <= 0.0 {
            return invalid("request rates must be positive".into());
        }
        self.detector()?;
        Ok(())
    }

    pub fn detector(&self) -> Result<LogDetector, ConfigFileError> {
        LogDetector::new(&self.detector.receiver_pattern, &self.detector.extra_callees)
            .map_err(|e| ConfigFileError::Invalid(format!("detector.receiver_pattern: {e}")))
    }
}
