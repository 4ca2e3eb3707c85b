//! One-pass online class-incremental protocol.
//!
//! Tasks are visited in manifest order. Each task's training file is read
//! once, front to back, in mini-batches; every batch is encoded and absorbed
//! by the classifier and then dropped. After each task the classifier is
//! scored on the test sets of all tasks seen so far.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassId, ClassifierError, ClassifierState};
use crate::features::{encode_batch, init_projection, ActivationBatch, BlockFeatureSet, EncoderConfig, FeatureError};
use crate::io::{read_features, FormatError, ManifestError, StreamManifest};
use crate::metrics::{average_accuracy, coefficient_of_variation, forgetting, AccuracyMatrix, MetricsError};

/// Samples scored per chunk during evaluation.
const EVAL_CHUNK: usize = 256;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("batch size must be positive")]
    ZeroBatchSize,
    #[error("projection dim must be positive")]
    ZeroProjectionDim,
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: sample {sample} has class {class}, which task {task} does not list")]
    LabelOutsideTask {
        path: PathBuf,
        sample: u64,
        class: ClassId,
        task: usize,
    },
    #[error("{path}: sample {sample} has no label")]
    MissingLabel { path: PathBuf, sample: u64 },
    #[error("empty test set{}", .0.as_ref().map(|p| format!(" {}", p.display())).unwrap_or_default())]
    EmptyTestSet(Option<PathBuf>),
}

/// Run parameters. Defaults: gamma 1, projection size 1000, batch size 10,
/// fusion and smooth projection on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gamma: f64,
    pub projection_dim: usize,
    pub seed: u64,
    pub batch_size: usize,
    pub fusion_enabled: bool,
    pub smooth_projection_enabled: bool,
    /// Record wall time per batch. Timings make reports non-reproducible, so
    /// this is off unless asked for.
    #[serde(default)]
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            projection_dim: 1000,
            seed: 0,
            batch_size: 10,
            fusion_enabled: true,
            smooth_projection_enabled: true,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(HarnessError::InvalidGamma(self.gamma));
        }
        if self.batch_size == 0 {
            return Err(HarnessError::ZeroBatchSize);
        }
        if self.projection_dim == 0 {
            return Err(HarnessError::ZeroProjectionDim);
        }
        Ok(())
    }

    /// Builds the frozen encoder for inputs of width `block_dim`.
    pub fn encoder(&self, block_dim: usize) -> Result<EncoderConfig, HarnessError> {
        let projection = if self.smooth_projection_enabled {
            Some(init_projection(self.seed, block_dim, self.projection_dim)?)
        } else {
            None
        };
        Ok(EncoderConfig {
            fusion_enabled: self.fusion_enabled,
            smooth_projection_enabled: self.smooth_projection_enabled,
            projection,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNorm {
    pub class: ClassId,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub batch_seconds: Vec<f64>,
    pub total_seconds: f64,
}

/// Everything a run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: RunConfig,
    /// `A_i` for `i = 1..=m`.
    pub average_accuracy: Vec<f64>,
    pub a_avg: f64,
    pub a_last: f64,
    /// `F_i` for `i = 2..=m`.
    pub forgetting: Vec<f64>,
    /// `f_{m,j}` for `j = 1..m`.
    pub final_forgetting_per_task: Vec<f64>,
    pub f_final: Option<f64>,
    pub weight_norms: Vec<ClassNorm>,
    pub weight_norm_cv: Option<f64>,
    pub train_samples_per_task: Vec<u64>,
    pub timing: Option<Timing>,
}

impl MetricsReport {
    /// Derives all metrics from a complete accuracy matrix and final state.
    pub fn from_run(
        config: &RunConfig,
        acc: &AccuracyMatrix,
        state: &ClassifierState,
        train_samples_per_task: Vec<u64>,
        timing: Option<Timing>,
    ) -> Result<Self, HarnessError> {
        let m = acc.tasks();
        let average = (1..=m)
            .map(|i| average_accuracy(acc, i))
            .collect::<Result<Vec<_>, _>>()?;
        let forgets = (2..=m)
            .map(|i| forgetting(acc, i))
            .collect::<Result<Vec<_>, _>>()?;
        let norms: Vec<ClassNorm> = state
            .weight_column_norms()
            .into_iter()
            .map(|(class, norm)| ClassNorm { class, norm })
            .collect();
        let norm_values: Vec<f64> = norms.iter().map(|c| c.norm).collect();
        Ok(Self {
            config: config.clone(),
            a_avg: average.iter().sum::<f64>() / m as f64,
            a_last: average[m - 1],
            average_accuracy: average,
            f_final: forgets.last().map(|f| f.mean),
            final_forgetting_per_task: forgets.last().map(|f| f.per_task.clone()).unwrap_or_default(),
            forgetting: forgets.into_iter().map(|f| f.mean).collect(),
            weight_norm_cv: coefficient_of_variation(&norm_values),
            weight_norms: norms,
            train_samples_per_task,
            timing,
        })
    }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: MetricsReport,
    pub accuracy: AccuracyMatrix,
    pub classifier: ClassifierState,
}

/// Emitted after every classifier update.
pub struct BatchEvent<'a> {
    /// 1-based task number.
    pub task: usize,
    /// 0-based batch number within the task.
    pub batch: usize,
    /// Index of the batch's first sample within the task's training file.
    pub first_sample: u64,
    pub len: usize,
    pub classifier: &'a ClassifierState,
    pub encoder: &'a EncoderConfig,
}

/// Fraction of rows whose predicted class matches `labels`.
pub fn evaluate(
    state: &ClassifierState,
    features: &ActivationBatch,
    labels: &[ClassId],
) -> Result<f64, HarnessError> {
    if labels.is_empty() || features.is_empty() {
        return Err(HarnessError::EmptyTestSet(None));
    }
    if labels.len() != features.len() {
        return Err(ClassifierError::LabelCountMismatch {
            rows: features.len(),
            labels: labels.len(),
        }
        .into());
    }
    Ok(correct_count(state, features, labels)? as f64 / labels.len() as f64)
}

fn correct_count(
    state: &ClassifierState,
    features: &ActivationBatch,
    labels: &[ClassId],
) -> Result<usize, HarnessError> {
    let prediction = state.predict(features)?;
    Ok(prediction
        .class_ids
        .iter()
        .zip(labels)
        .filter(|(p, t)| p == t)
        .count())
}

/// Streams a test file through the encoder and classifier.
pub fn evaluate_file(
    state: &ClassifierState,
    encoder: &EncoderConfig,
    path: &Path,
    task: usize,
    task_classes: &[ClassId],
) -> Result<f64, HarnessError> {
    let mut correct = 0usize;
    let mut total = 0usize;
    let mut chunk = Vec::with_capacity(EVAL_CHUNK);
    let mut labels = Vec::with_capacity(EVAL_CHUNK);
    let mut flush = |chunk: &mut Vec<BlockFeatureSet>, labels: &mut Vec<ClassId>| -> Result<(), HarnessError> {
        if chunk.is_empty() {
            return Ok(());
        }
        let x = encode_batch(chunk, encoder)?;
        correct += correct_count(state, &x, labels)?;
        total += labels.len();
        chunk.clear();
        labels.clear();
        Ok(())
    };
    for (i, sample) in read_features(path)?.enumerate() {
        let (label, features) = labeled(sample?, path, i as u64, task, task_classes)?;
        chunk.push(features);
        labels.push(label);
        if chunk.len() == EVAL_CHUNK {
            flush(&mut chunk, &mut labels)?;
        }
    }
    flush(&mut chunk, &mut labels)?;
    if total == 0 {
        return Err(HarnessError::EmptyTestSet(Some(path.to_path_buf())));
    }
    Ok(correct as f64 / total as f64)
}

fn labeled(
    sample: crate::io::FeatureSample,
    path: &Path,
    index: u64,
    task: usize,
    task_classes: &[ClassId],
) -> Result<(ClassId, BlockFeatureSet), HarnessError> {
    let label = sample.label.ok_or_else(|| HarnessError::MissingLabel {
        path: path.to_path_buf(),
        sample: index,
    })?;
    if !task_classes.contains(&label) {
        return Err(HarnessError::LabelOutsideTask {
            path: path.to_path_buf(),
            sample: index,
            class: label,
            task,
        });
    }
    Ok((label, sample.features))
}

/// Runs the full protocol over `manifest`.
pub fn run_experiment(
    manifest: &StreamManifest,
    config: &RunConfig,
) -> Result<Experiment, HarnessError> {
    run_experiment_with(manifest, config, |_| {})
}

/// [`run_experiment`] with a callback after every batch update.
pub fn run_experiment_with<F>(
    manifest: &StreamManifest,
    config: &RunConfig,
    mut on_batch: F,
) -> Result<Experiment, HarnessError>
where
    F: FnMut(&BatchEvent<'_>),
{
    config.validate()?;
    manifest.validate()?;

    let block_dim = manifest.block_dim as usize;
    let encoder = config.encoder(block_dim)?;
    let mut classifier = ClassifierState::new(encoder.activation_dim(block_dim), config.gamma)?;
    let mut accuracy = AccuracyMatrix::new(manifest.num_tasks());
    let mut per_task = Vec::with_capacity(manifest.num_tasks());
    let mut batch_seconds = Vec::new();
    let started = Instant::now();

    for task in &manifest.tasks {
        let mut consumed = 0u64;
        let mut batch_index = 0usize;
        let mut samples = Vec::with_capacity(config.batch_size);
        let mut labels = Vec::with_capacity(config.batch_size);

        let mut absorb = |samples: &mut Vec<BlockFeatureSet>,
                          labels: &mut Vec<ClassId>,
                          classifier: &mut ClassifierState,
                          consumed: &mut u64,
                          batch_index: &mut usize|
         -> Result<(), HarnessError> {
            if samples.is_empty() {
                return Ok(());
            }
            let t0 = Instant::now();
            let x = encode_batch(samples, &encoder)?;
            classifier.update(&x, &labels.clone().into())?;
            if config.record_timing {
                batch_seconds.push(t0.elapsed().as_secs_f64());
            }
            on_batch(&BatchEvent {
                task: task.index,
                batch: *batch_index,
                first_sample: *consumed,
                len: samples.len(),
                classifier,
                encoder: &encoder,
            });
            *consumed += samples.len() as u64;
            *batch_index += 1;
            samples.clear();
            labels.clear();
            Ok(())
        };

        for (i, sample) in read_features(&task.train)?.enumerate() {
            let (label, features) = labeled(sample?, &task.train, i as u64, task.index, &task.classes)?;
            samples.push(features);
            labels.push(label);
            if samples.len() == config.batch_size {
                absorb(&mut samples, &mut labels, &mut classifier, &mut consumed, &mut batch_index)?;
            }
        }
        absorb(&mut samples, &mut labels, &mut classifier, &mut consumed, &mut batch_index)?;
        per_task.push(consumed);

        for seen in &manifest.tasks[..task.index] {
            let a = evaluate_file(&classifier, &encoder, &seen.test, seen.index, &seen.classes)?;
            accuracy.set(task.index, seen.index, a)?;
        }
    }

    let timing = config.record_timing.then(|| Timing {
        batch_seconds,
        total_seconds: started.elapsed().as_secs_f64(),
    });
    let report = MetricsReport::from_run(config, &accuracy, &classifier, per_task, timing)?;
    Ok(Experiment {
        report,
        accuracy,
        classifier,
    })
}
