use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diff::{parse_unified_diff, ApplyError, DiffParseError, FilePatch};

/// A resolved commit: its diff and the post-change content of touched files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitBundle {
    pub repo: String,
    pub sha: String,
    pub parent_sha: String,
    pub diff_text: String,
    pub files_after: BTreeMap<String, String>,
    pub deleted: BTreeSet<String>,
    /// The forge omitted part of the diff.
    pub truncated: bool,
    /// Issues that reference this commit.
    pub issue_keys: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{repo}@{sha}: {source}")]
    Diff { repo: String, sha: String, source: DiffParseError },
    #[error("{repo}@{sha}: `{path}` appears in the diff but has no post-change content")]
    MissingFile { repo: String, sha: String, path: String },
    #[error("{repo}@{sha}: {source}")]
    Apply { repo: String, sha: String, source: ApplyError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("refusing unsafe path `{0}`")]
    UnsafePath(String),
}

impl CommitBundle {
    pub fn patches(&self) -> Result<Vec<FilePatch>, BundleError> {
        parse_unified_diff(&self.diff_text).map_err(|source| BundleError::Diff {
            repo: self.repo.clone(),
            sha: self.sha.clone(),
            source,
        })
    }

    /// Checks that the diff parses and every touched path is either present
    /// in `files_after` or marked deleted.
    pub fn validate(&self) -> Result<(), BundleError> {
        for patch in self.patches()? {
            let path = patch.path();
            let known = if patch.is_deletion() {
                self.deleted.contains(path)
            } else {
                self.files_after.contains_key(path)
            };
            if !known {
                return Err(BundleError::MissingFile {
                    repo: self.repo.clone(),
                    sha: self.sha.clone(),
                    path: path.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Post-change content of a patched file (empty for deletions).
    pub fn content_after(&self, patch: &FilePatch) -> &str {
        if patch.is_deletion() {
            ""
        } else {
            self.files_after.get(patch.path()).map(String::as_str).unwrap_or("")
        }
    }

    /// Reconstructs the pre-change content of a patched file by applying its
    /// hunks in reverse to the post-change content.
    pub fn content_before(&self, patch: &FilePatch) -> Result<String, BundleError> {
        patch.reverse_apply(self.content_after(patch)).map_err(|source| BundleError::Apply {
            repo: self.repo.clone(),
            sha: self.sha.clone(),
            source,
        })
    }

    pub fn dir_name(&self) -> PathBuf {
        Path::new(&self.repo.replace('/', "__")).join(&self.sha)
    }
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    repo: String,
    sha: String,
    parent_sha: String,
    deleted: BTreeSet<String>,
    truncated: bool,
    issue_keys: Vec<String>,
}

fn safe_relative(path: &str) -> Result<PathBuf, BundleError> {
    let p = Path::new(path);
    if p.components().all(|c| matches!(c, Component::Normal(_))) {
        Ok(p.to_path_buf())
    } else {
        Err(BundleError::UnsafePath(path.to_string()))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BundleError + '_ {
    move |source| BundleError::Io { path: path.to_path_buf(), source }
}

/// Writes each bundle to `<root>/<owner>__<name>/<sha>/` as `diff.patch`,
/// `meta.json` and a `files/` tree.
pub fn write_bundles(root: &Path, bundles: &[CommitBundle]) -> Result<(), BundleError> {
    for bundle in bundles {
        let dir = root.join(bundle.dir_name());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let diff_path = dir.join("diff.patch");
        fs::write(&diff_path, &bundle.diff_text).map_err(io_err(&diff_path))?;
        let meta = BundleMeta {
            repo: bundle.repo.clone(),
            sha: bundle.sha.clone(),
            parent_sha: bundle.parent_sha.clone(),
            deleted: bundle.deleted.clone(),
            truncated: bundle.truncated,
            issue_keys: bundle.issue_keys.clone(),
        };
        let meta_path = dir.join("meta.json");
        let json = serde_json::to_string_pretty(&meta).map_err(|source| BundleError::Json {
            path: meta_path.clone(),
            source,
        })?;
        fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))?;
        for (path, content) in &bundle.files_after {
            let target = dir.join("files").join(safe_relative(path)?);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&target, content).map_err(io_err(&target))?;
        }
    }
    Ok(())
}

/// Reads every bundle below `root`, ordered by (repo, sha).
pub fn read_bundles(root: &Path) -> Result<Vec<CommitBundle>, BundleError> {
    let mut bundles = Vec::new();
    for repo_dir in sorted_dirs(root)? {
        for sha_dir in sorted_dirs(&repo_dir)? {
            let meta_path = sha_dir.join("meta.json");
            if !meta_path.is_file() {
                continue;
            }
            let raw = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
            let meta: BundleMeta =
                serde_json::from_str(&raw).map_err(|source| BundleError::Json { path: meta_path.clone(), source })?;
            let diff_path = sha_dir.join("diff.patch");
            let diff_text = fs::read_to_string(&diff_path).map_err(io_err(&diff_path))?;
            let mut files_after = BTreeMap::new();
            let files_root = sha_dir.join("files");
            if files_root.is_dir() {
                collect_files(&files_root, &files_root, &mut files_after)?;
            }
            bundles.push(CommitBundle {
                repo: meta.repo,
                sha: meta.sha,
                parent_sha: meta.parent_sha,
                diff_text,
                files_after,
                deleted: meta.deleted,
                truncated: meta.truncated,
                issue_keys: meta.issue_keys,
            });
        }
    }
    bundles.sort_by(|a, b| (&a.repo, &a.sha).cmp(&(&b.repo, &b.sha)));
    Ok(bundles)
}

fn sorted_dirs(dir: &Path) -> Result<Vec<PathBuf>, BundleError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

fn collect_files(base: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<(), BundleError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_files(base, &path, out)?;
        } else {
            let content = fs::read_to_string(&path).map_err(io_err(&path))?;
            let rel = path.strip_prefix(base).unwrap_or(&path);
            let key = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.insert(key, content);
        }
    }
    Ok(())
}
