//! Collection of log-related issues from a Jira-style tracker.

mod source;

pub use source::{
    fetch_issues, FixtureIssueSource, IssueSource, JiraIssueSource, MineError, MineOutcome, MineStats, ParseFailure,
    RawPage,
};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    pub include_keywords: Vec<String>,
    pub exclude_phrases: Vec<String>,
    pub issue_types: Vec<String>,
    pub date_from: NaiveDate,
    pub date_to: NaiveDate,
    pub projects: Vec<String>,
    pub require_resolved: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        let owned = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        MinerConfig {
            include_keywords: owned(&["log", "logger", "print", "logging"]),
            exclude_phrases: owned(&["log in", "log out", "blue print", "print command"]),
            issue_types: owned(&["Bug", "Dependency", "Dependency upgrade", "Improvement"]),
            date_from: NaiveDate::from_ymd_opt(2002, 1, 1).unwrap(),
            date_to: NaiveDate::from_ymd_opt(2024, 12, 31).unwrap(),
            projects: Vec::new(),
            require_resolved: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid miner configuration: {field}: {message}")]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl MinerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, message: String| Err(ConfigError { field, message });
        if self.include_keywords.is_empty() {
            return err("include_keywords", "at least one keyword is required".into());
        }
        if let Some(k) = self.include_keywords.iter().find(|k| k.trim().is_empty() || **k != k.to_lowercase()) {
            return err("include_keywords", format!("keyword `{k}` must be non-empty and lowercase"));
        }
        for phrase in &self.exclude_phrases {
            if *phrase != phrase.to_lowercase() {
                return err("exclude_phrases", format!("phrase `{phrase}` must be lowercase"));
            }
            if !self.include_keywords.iter().any(|k| phrase.contains(k.as_str())) {
                return err("exclude_phrases", format!("phrase `{phrase}` contains no include keyword"));
            }
        }
        if self.date_from > self.date_to {
            return err("date_from", format!("{} is after date_to {}", self.date_from, self.date_to));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub query_text: String,
    pub page_size: usize,
    /// `None` fetches every page.
    pub max_pages: Option<usize>,
}

pub const DEFAULT_PAGE_SIZE: usize = 100;

fn jql_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn jql_list(items: &[String]) -> String {
    items.iter().map(|s| jql_quote(s)).collect::<Vec<_>>().join(", ")
}

/// Builds the JQL search for a configuration.
///
/// Exclusion phrases are not pushed into the query: JQL text search cannot
/// express "keyword outside the phrase", so they are applied client-side by
/// [`matches_summary`].
pub fn build_query(config: &MinerConfig) -> Result<QueryPlan, ConfigError> {
    config.validate()?;
    let mut clauses = Vec::new();
    if !config.projects.is_empty() {
        clauses.push(format!("project in ({})", jql_list(&config.projects)));
    }
    if !config.issue_types.is_empty() {
        clauses.push(format!("issuetype in ({})", jql_list(&config.issue_types)));
    }
    let keywords: Vec<String> = config
        .include_keywords
        .iter()
        .map(|k| format!("summary ~ {}", jql_quote(k)))
        .collect();
    clauses.push(format!("({})", keywords.join(" OR ")));
    let from = config.date_from.format("%Y-%m-%d");
    let to = config.date_to.format("%Y-%m-%d");
    if config.require_resolved {
        clauses.push("resolution is not EMPTY".to_string());
        clauses.push(format!("resolved >= \"{from}\""));
        clauses.push(format!("resolved <= \"{to} 23:59\""));
    } else {
        clauses.push(format!("created >= \"{from}\""));
        clauses.push(format!("created <= \"{to} 23:59\""));
    }
    Ok(QueryPlan {
        query_text: format!("{} ORDER BY project ASC, key ASC", clauses.join(" AND ")),
        page_size: DEFAULT_PAGE_SIZE,
        max_pages: None,
    })
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic()
}

/// True iff the lowercased summary has a keyword occurrence at word
/// boundaries that is not covered by an excluded phrase occurrence.
pub fn matches_summary(summary: &str, config: &MinerConfig) -> bool {
    let text = summary.to_lowercase();
    let mut excluded: Vec<(usize, usize)> = Vec::new();
    for phrase in config.exclude_phrases.iter().filter(|p| !p.is_empty()) {
        let mut from = 0;
        while let Some(pos) = text[from..].find(phrase.as_str()) {
            let start = from + pos;
            excluded.push((start, start + phrase.len()));
            from = start + text[start..].chars().next().map_or(1, char::len_utf8);
        }
    }
    config.include_keywords.iter().filter(|k| !k.is_empty()).any(|kw| {
        text.match_indices(kw.as_str()).any(|(start, m)| {
            let end = start + m.len();
            let before_ok = text[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
            let after_ok = text[end..].chars().next().is_none_or(|c| !is_word_char(c));
            before_ok && after_ok && !excluded.iter().any(|&(s, e)| s <= start && end <= e)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueComment {
    pub author: String,
    pub body: String,
}

/// A mined tracker issue. Field order is the `issues.jsonl` column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogIssue {
    pub key: String,
    pub project: String,
    pub title: String,
    pub description: String,
    pub comments: Vec<IssueComment>,
    pub issue_type: String,
    pub resolution_date: Option<NaiveDate>,
    pub url: String,
}

impl LogIssue {
    /// Ordering key: project, then the numeric part of the key.
    pub fn sort_key(&self) -> (String, u64, String) {
        let number = self
            .key
            .rsplit('-')
            .next()
            .and_then(|n| n.parse().ok())
            .unwrap_or(u64::MAX);
        (self.project.clone(), number, self.key.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_query_carries_standard_filters() {
        let plan = build_query(&MinerConfig::default()).unwrap();
        for kw in ["\"log\"", "\"logger\"", "\"print\"", "\"logging\""] {
            assert!(plan.query_text.contains(kw), "{kw}");
        }
        for ty in ["\"Bug\"", "\"Dependency\"", "\"Dependency upgrade\"", "\"Improvement\""] {
            assert!(plan.query_text.contains(ty), "{ty}");
        }
        assert!(plan.query_text.contains("2002-01-01"));
        assert!(plan.query_text.contains("2024-12-31"));
        assert!(plan.query_text.contains("resolution is not EMPTY"));
    }

    #[test]
    fn query_is_deterministic() {
        let config = MinerConfig { projects: vec!["FLINK".into(), "HADOOP".into()], ..MinerConfig::default() };
        assert_eq!(build_query(&config).unwrap(), build_query(&config.clone()).unwrap());
    }

    #[test]
    fn empty_keywords_rejected() {
        let config = MinerConfig { include_keywords: vec![], ..Default::default() };
        assert_eq!(build_query(&config).unwrap_err().field, "include_keywords");
    }

    #[test]
    fn inverted_dates_rejected() {
        let config = MinerConfig {
            date_from: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
            ..Default::default()
        };
        assert_eq!(build_query(&config).unwrap_err().field, "date_from");
    }

    #[test]
    fn dead_exclusion_phrase_rejected() {
        let config = MinerConfig { exclude_phrases: vec!["sign in".into()], ..Default::default() };
        assert_eq!(config.validate().unwrap_err().field, "exclude_phrases");
    }

    #[test]
    fn summary_examples() {
        let c = MinerConfig::default();
        assert!(matches_summary("Make INFO logging more verbose", &c));
        assert!(!matches_summary("User cannot log in after upgrade", &c));
        assert!(!matches_summary("Upgrade parquet dependency", &c));
        assert!(!matches_summary("Fix blogging widget and dialog layout", &c));
        assert!(!matches_summary("Blue print renders wrong", &c));
        assert!(matches_summary("Log in page should log failures", &c));
        assert!(matches_summary("Upgrade log4j to 2.17", &c));
    }
}
