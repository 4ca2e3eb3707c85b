//! Synthetic fixtures: block-feature streams and raw activation streams.
//!
//! [`generate`] writes a complete class-incremental stream (feature files
//! plus manifest). Every class has a "home" block, `class % n`, where its
//! mean is shifted away from a shared per-block baseline; in every other
//! block the class looks like all the rest. The blocks therefore carry
//! complementary information: the last block alone separates only the
//! classes that live there, while the block average separates all of them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::ClassId;
use crate::features::{ActivationBatch, BlockFeatureSet};
use crate::io::{write_manifest, FeatureWriter, FormatError, StreamManifest, TaskSpec};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Parameters of the Gaussian block-blob generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub tasks: usize,
    pub classes_per_task: usize,
    pub samples_per_class: usize,
    pub test_samples_per_class: usize,
    pub block_count: usize,
    pub block_dim: usize,
    pub seed: u64,
    /// Per-entry standard deviation of the class offset in the home block.
    pub signal: f64,
    /// Per-entry standard deviation of sample noise, independent per block.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            tasks: 5,
            classes_per_task: 4,
            samples_per_class: 50,
            test_samples_per_class: 20,
            block_count: 4,
            block_dim: 32,
            seed: 0,
            signal: 1.0,
            noise: 0.35,
        }
    }
}

struct ClassModel {
    // means[b] is the class mean in block b
    means: Vec<Vec<f64>>,
}

fn gaussian_vec(rng: &mut ChaCha20Rng, len: usize, sd: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            sd * z
        })
        .collect()
}

fn class_models(spec: &SyntheticSpec, rng: &mut ChaCha20Rng) -> Vec<ClassModel> {
    let baselines: Vec<Vec<f64>> = (0..spec.block_count)
        .map(|_| gaussian_vec(rng, spec.block_dim, 0.5))
        .collect();
    let total = spec.tasks * spec.classes_per_task;
    (0..total)
        .map(|class| {
            let home = class % spec.block_count;
            let offset = gaussian_vec(rng, spec.block_dim, spec.signal);
            let means = baselines
                .iter()
                .enumerate()
                .map(|(b, base)| {
                    if b == home {
                        base.iter().zip(&offset).map(|(a, o)| a + o).collect()
                    } else {
                        base.clone()
                    }
                })
                .collect();
            ClassModel { means }
        })
        .collect()
}

fn draw(model: &ClassModel, noise: f64, rng: &mut ChaCha20Rng) -> BlockFeatureSet {
    let blocks = model
        .means
        .iter()
        .map(|mean| {
            mean.iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(rng);
                    (m + noise * z) as f32
                })
                .collect()
        })
        .collect();
    BlockFeatureSet::new(blocks).expect("finite gaussian draws")
}

fn write_split(
    path: &Path,
    spec: &SyntheticSpec,
    models: &[ClassModel],
    classes: &[ClassId],
    per_class: usize,
    rng: &mut ChaCha20Rng,
) -> Result<(), FormatError> {
    let mut labels: Vec<ClassId> = classes
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c, per_class))
        .collect();
    labels.shuffle(rng);
    let mut writer = FeatureWriter::create(path, spec.block_count as u32, spec.block_dim as u32, true)?;
    for label in labels {
        let sample = draw(&models[label as usize], spec.noise, rng);
        writer.write_sample(Some(label), &sample)?;
    }
    writer.finish()?;
    Ok(())
}

/// Writes feature files and `manifest.json` into `out_dir` and returns the
/// manifest.
pub fn generate(spec: &SyntheticSpec, out_dir: impl AsRef<Path>) -> Result<StreamManifest, FormatError> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| FormatError::io(out_dir, e))?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let models = class_models(spec, &mut rng);
    let mut tasks = Vec::with_capacity(spec.tasks);
    for k in 1..=spec.tasks {
        let first = ((k - 1) * spec.classes_per_task) as ClassId;
        let classes: Vec<ClassId> = (first..first + spec.classes_per_task as ClassId).collect();
        let train = out_dir.join(format!("task{k}_train.foal"));
        let test = out_dir.join(format!("task{k}_test.foal"));
        write_split(&train, spec, &models, &classes, spec.samples_per_class, &mut rng)?;
        write_split(&test, spec, &models, &classes, spec.test_samples_per_class, &mut rng)?;
        tasks.push(TaskSpec {
            index: k,
            classes,
            train,
            test,
        });
    }
    let mut extraction = BTreeMap::new();
    extraction.insert("backbone".into(), "synthetic-gaussian-blocks".into());
    extraction.insert("seed".into(), spec.seed.to_string());
    extraction.insert("signal".into(), spec.signal.to_string());
    extraction.insert("noise".into(), spec.noise.to_string());
    let manifest = StreamManifest {
        dataset: "synthetic".into(),
        block_count: spec.block_count as u32,
        block_dim: spec.block_dim as u32,
        extraction,
        tasks,
    };
    write_manifest(&manifest, out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

/// One mini-batch of a raw activation stream.
#[derive(Debug, Clone)]
pub struct RawBatch {
    pub activations: ActivationBatch,
    pub labels: Vec<ClassId>,
}

/// Tasks of uniformly random activations in `(0, 1)` with labels drawn from
/// each task's own classes. Each task holds `samples_per_task` samples cut
/// into batches of `batch_size` (the last one may be short).
pub fn random_activation_stream(
    dim: usize,
    tasks: usize,
    samples_per_task: usize,
    batch_size: usize,
    classes_per_task: usize,
    seed: u64,
) -> Vec<Vec<RawBatch>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..tasks)
        .map(|t| {
            let first = (t * classes_per_task) as ClassId;
            let rows: Vec<Vec<f32>> = (0..samples_per_task)
                .map(|_| (0..dim).map(|_| rng.random::<f32>()).collect())
                .collect();
            let labels: Vec<ClassId> = (0..samples_per_task)
                .map(|_| first + rng.random_range(0..classes_per_task as ClassId))
                .collect();
            rows.chunks(batch_size.max(1))
                .zip(labels.chunks(batch_size.max(1)))
                .map(|(x, y)| RawBatch {
                    activations: ActivationBatch::from_rows(x).expect("non-empty chunk"),
                    labels: y.to_vec(),
                })
                .collect()
        })
        .collect()
}
