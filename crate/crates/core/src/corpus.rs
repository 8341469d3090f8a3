//! Ground-truth corpus discovery.
//!
//! A corpus is any directory tree of source files. Each matching file becomes
//! one [`SourceSample`], identified by its `/`-separated path relative to the
//! root and categorized by one of its directory components.

use std::fs;
use std::io::{self, Write};
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use tracing::warn;
use walkdir::WalkDir;

pub const UNCATEGORIZED: &str = "uncategorized";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus root {path} is not a readable directory: {source}")]
    Root { path: PathBuf, source: io::Error },
    #[error("invalid corpus configuration: {0}")]
    Config(String),
    #[error("no files under {root} matched extension {extension:?} and the size filters")]
    Empty { root: PathBuf, extension: String },
    #[error("failed to read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("sample content is empty: {0}")]
    EmptySample(String),
}

/// One ground-truth source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSample {
    pub id: String,
    pub category: String,
    pub content: String,
    pub char_count: usize,
}

impl SourceSample {
    pub fn new(
        id: impl Into<String>,
        category: impl Into<String>,
        content: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let content = content.into();
        if content.is_empty() {
            return Err(CorpusError::EmptySample(id));
        }
        let char_count = content.chars().count();
        Ok(Self {
            id,
            category: category.into(),
            content,
            char_count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub root: PathBuf,
    pub include_extension: String,
    pub min_chars: usize,
    pub max_chars: Option<usize>,
    pub category_depth: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            root: PathBuf::from("."),
            include_extension: ".py".to_string(),
            min_chars: 1,
            max_chars: None,
            category_depth: 1,
        }
    }
}

impl CorpusConfig {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_chars < 1 {
            return Err(CorpusError::Config("min_chars must be at least 1".into()));
        }
        if let Some(max) = self.max_chars {
            if max < self.min_chars {
                return Err(CorpusError::Config(format!(
                    "max_chars ({max}) is below min_chars ({})",
                    self.min_chars
                )));
            }
        }
        if self.category_depth < 1 {
            return Err(CorpusError::Config("category_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of a directory scan: the samples plus what was left out.
#[derive(Debug, Clone, Default)]
pub struct CorpusScan {
    pub samples: Vec<SourceSample>,
    pub skipped_non_utf8: Vec<String>,
    pub skipped_by_size: usize,
}

/// Category label for a root-relative path: the directory component at
/// `category_depth - 1`. Paths with fewer directory levels than requested use
/// their deepest directory; files directly under the root are uncategorized.
pub fn categorize(relative_path: &Path, category_depth: usize) -> String {
    let dirs: Vec<String> = match relative_path.parent() {
        Some(parent) => parent
            .components()
            .filter_map(|c| match c {
                Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
                _ => None,
            })
            .collect(),
        None => Vec::new(),
    };
    if dirs.is_empty() {
        return UNCATEGORIZED.to_string();
    }
    let depth = category_depth.max(1).min(dirs.len());
    dirs[depth - 1].clone()
}

fn relative_id(path: &Path) -> String {
    path.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn is_hidden(name: &std::ffi::OsStr) -> bool {
    name.to_str().is_some_and(|s| s.starts_with('.') && s.len() > 1)
}

pub fn scan_corpus(config: &CorpusConfig) -> Result<CorpusScan, CorpusError> {
    config.validate()?;
    let root = &config.root;
    fs::read_dir(root).map_err(|source| CorpusError::Root {
        path: root.clone(),
        source,
    })?;

    let mut scan = CorpusScan::default();
    let walker = WalkDir::new(root)
        .follow_links(false)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !is_hidden(e.file_name()));
    for entry in walker {
        let entry = entry.map_err(|e| CorpusError::Read {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.clone()),
            source: e.into(),
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        if !name.ends_with(&config.include_extension) {
            continue;
        }
        let relative = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let id = relative_id(relative);
        let bytes = fs::read(entry.path()).map_err(|source| CorpusError::Read {
            path: entry.path().to_path_buf(),
            source,
        })?;
        let content = match String::from_utf8(bytes) {
            Ok(s) => s,
            Err(_) => {
                warn!(file = %id, "skipping file that is not valid UTF-8");
                scan.skipped_non_utf8.push(id);
                continue;
            }
        };
        let char_count = content.chars().count();
        if char_count < config.min_chars || config.max_chars.is_some_and(|max| char_count > max) {
            scan.skipped_by_size += 1;
            continue;
        }
        scan.samples.push(SourceSample {
            category: categorize(relative, config.category_depth),
            id,
            content,
            char_count,
        });
    }

    if scan.samples.is_empty() {
        return Err(CorpusError::Empty {
            root: root.clone(),
            extension: config.include_extension.clone(),
        });
    }
    scan.samples.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(scan)
}

/// Writes the `id,category,char_count` manifest.
pub fn write_manifest<W: Write>(samples: &[SourceSample], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["id", "category", "char_count"])?;
    for s in samples {
        writer.write_record([s.id.as_str(), s.category.as_str(), &s.char_count.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
