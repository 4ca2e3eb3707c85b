//! On-disk formats: feature files, stream manifests, results documents and
//! classifier state snapshots.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod feature_file;
pub mod manifest;
pub mod results;
pub mod state;

pub use feature_file::{
    read_all_labeled, read_features, read_header, write_features, FeatureHeader, FeatureReader,
    FeatureSample, FeatureWriter,
};
pub use manifest::{parse_manifest, write_manifest, ManifestError, StreamManifest, TaskSpec};
pub use results::{parse_results, read_results, serialize_results, write_results, ResultsDocument};
pub use state::{read_state, write_state};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad header at byte {offset}: {reason}")]
    BadHeader {
        path: PathBuf,
        offset: u64,
        reason: String,
    },
    #[error("{path}: truncated in sample {sample} (record starts at byte {offset})")]
    Truncated {
        path: PathBuf,
        sample: u64,
        offset: u64,
    },
    #[error("{path}: unexpected data after the last sample at byte {offset}")]
    TrailingBytes { path: PathBuf, offset: u64 },
    #[error("{path}: sample {sample}, block {block}, entry {entry} is not finite")]
    NonFinite {
        path: PathBuf,
        sample: u64,
        block: usize,
        entry: usize,
    },
    #[error("{path}: sample {sample} has shape {found:?} (blocks, dim), file holds {expected:?}")]
    ShapeMismatch {
        path: PathBuf,
        sample: u64,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("{path}: sample {sample} label presence does not match file flag (labeled = {labeled})")]
    LabelPresence {
        path: PathBuf,
        sample: u64,
        labeled: bool,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("{path}: invalid state: {reason}")]
    InvalidState { path: PathBuf, reason: String },
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
