//! Stream manifests: JSON descriptions of a task sequence over feature files.
//!
//! ```json
//! {
//!   "dataset": "synthetic",
//!   "n": 4,
//!   "E": 32,
//!   "extraction": { "backbone": "none", "token": "cls" },
//!   "tasks": [
//!     { "k": 1, "classes": [0, 1], "train": "task1_train.foal", "test": "task1_test.foal" }
//!   ]
//! }
//! ```
//!
//! Relative file paths resolve against the manifest's directory.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::ClassId;

use super::feature_file::read_header;
use super::FormatError;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("manifest lists no tasks")]
    NoTasks,
    #[error("task indices must run 1..=m in order: position {position} has k = {found}")]
    NonContiguousTasks { position: usize, found: usize },
    #[error("task {task} lists no classes")]
    EmptyTask { task: usize },
    #[error("disjoint classes violated: class {class} appears in task {first} and task {second}")]
    OverlappingClasses {
        class: ClassId,
        first: usize,
        second: usize,
    },
    #[error("task {task}: referenced file {path} does not exist")]
    MissingFile { task: usize, path: PathBuf },
    #[error("task {task}: {path} has (n, E) = {found:?}, manifest declares {expected:?}")]
    DimensionMismatch {
        task: usize,
        path: PathBuf,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error("task {task}: {path} carries no labels")]
    UnlabeledFile { task: usize, path: PathBuf },
    #[error("block count and block dim must be positive")]
    ZeroShape,
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// One task of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub index: usize,
    pub classes: Vec<ClassId>,
    pub train: PathBuf,
    pub test: PathBuf,
}

/// A validated description of the task stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamManifest {
    pub dataset: String,
    pub block_count: u32,
    pub block_dim: u32,
    pub extraction: BTreeMap<String, String>,
    pub tasks: Vec<TaskSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    dataset: String,
    n: u32,
    #[serde(rename = "E")]
    e: u32,
    #[serde(default)]
    extraction: BTreeMap<String, String>,
    tasks: Vec<TaskEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskEntry {
    k: usize,
    classes: Vec<ClassId>,
    train: PathBuf,
    test: PathBuf,
}

impl StreamManifest {
    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Checks the structural invariants that do not touch the filesystem.
    pub fn validate_structure(&self) -> Result<(), ManifestError> {
        if self.tasks.is_empty() {
            return Err(ManifestError::NoTasks);
        }
        if self.block_count == 0 || self.block_dim == 0 {
            return Err(ManifestError::ZeroShape);
        }
        let mut owner: HashMap<ClassId, usize> = HashMap::new();
        for (position, task) in self.tasks.iter().enumerate() {
            if task.index != position + 1 {
                return Err(ManifestError::NonContiguousTasks {
                    position: position + 1,
                    found: task.index,
                });
            }
            if task.classes.is_empty() {
                return Err(ManifestError::EmptyTask { task: task.index });
            }
            for &class in &task.classes {
                if let Some(&first) = owner.get(&class) {
                    return Err(ManifestError::OverlappingClasses {
                        class,
                        first,
                        second: task.index,
                    });
                }
                owner.insert(class, task.index);
            }
        }
        Ok(())
    }

    /// Full validation, including that every referenced file exists and
    /// carries labeled samples of the declared shape.
    pub fn validate(&self) -> Result<(), ManifestError> {
        self.validate_structure()?;
        let expected = (self.block_count, self.block_dim);
        for task in &self.tasks {
            for path in [&task.train, &task.test] {
                if !path.is_file() {
                    return Err(ManifestError::MissingFile {
                        task: task.index,
                        path: path.clone(),
                    });
                }
                let header = read_header(path)?;
                let found = (header.block_count, header.block_dim);
                if found != expected {
                    return Err(ManifestError::DimensionMismatch {
                        task: task.index,
                        path: path.clone(),
                        expected,
                        found,
                    });
                }
                if !header.labeled {
                    return Err(ManifestError::UnlabeledFile {
                        task: task.index,
                        path: path.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Same stream with tasks reordered; `order[p]` is the 0-based index of
    /// the task placed at position `p`. Task numbers are reassigned 1..=m.
    pub fn reordered(&self, order: &[usize]) -> Self {
        let mut out = self.clone();
        out.tasks = order
            .iter()
            .enumerate()
            .map(|(p, &i)| TaskSpec {
                index: p + 1,
                ..self.tasks[i].clone()
            })
            .collect();
        out
    }
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

/// Reads and validates a manifest.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<StreamManifest, ManifestError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let raw: ManifestFile = serde_json::from_str(&text).map_err(|e| ManifestError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let manifest = StreamManifest {
        dataset: raw.dataset,
        block_count: raw.n,
        block_dim: raw.e,
        extraction: raw.extraction,
        tasks: raw
            .tasks
            .into_iter()
            .map(|t| TaskSpec {
                index: t.k,
                classes: t.classes,
                train: resolve(base, t.train),
                test: resolve(base, t.test),
            })
            .collect(),
    };
    manifest.validate()?;
    Ok(manifest)
}

/// Writes `manifest` as JSON. Paths under the manifest's directory are
/// stored relative to it.
pub fn write_manifest(manifest: &StreamManifest, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let rel = |p: &Path| p.strip_prefix(base).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf());
    let raw = ManifestFile {
        dataset: manifest.dataset.clone(),
        n: manifest.block_count,
        e: manifest.block_dim,
        extraction: manifest.extraction.clone(),
        tasks: manifest
            .tasks
            .iter()
            .map(|t| TaskEntry {
                k: t.index,
                classes: t.classes.clone(),
                train: rel(&t.train),
                test: rel(&t.test),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&raw).map_err(|e| FormatError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| FormatError::io(path, e))
}
