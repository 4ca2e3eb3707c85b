//! Frozen feature pipeline: block fusion followed by smooth random projection.
//!
//! A sample arrives as the outputs of every backbone block. Fusion averages
//! them into a single vector of length `E`; smooth projection expands that
//! vector to `D` dimensions with a frozen Gaussian matrix and squashes it
//! through a sigmoid. Nothing in here is trainable, so every function is pure
//! and a [`ProjectionSpec`] can be shared freely across threads.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Identifier of the generator used by [`init_projection`].
///
/// `ChaCha20Rng::seed_from_u64(seed)` feeds `rand_distr::StandardNormal`
/// (ziggurat, rand_distr 0.5) as `f64`; draws fill the `E x D` matrix in
/// row-major order and are rounded to `f32`. Bump the suffix if any of
/// that changes.
pub const PROJECTION_RNG: &str = "chacha20-ziggurat-f32-v1";

/// Smallest and largest `f32` strictly inside `(0, 1)`. Sigmoid outputs are
/// clamped into this range so that saturation never rounds to an endpoint.
const SIGMOID_FLOOR: f32 = f32::MIN_POSITIVE;
const SIGMOID_CEIL: f32 = 1.0 - f32::EPSILON / 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("sample has no blocks")]
    NoBlocks,
    #[error("block {index} has length {found}, expected {expected}")]
    BlockDimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("block {block}, entry {entry} is not finite")]
    NonFinite { block: usize, entry: usize },
    #[error("projection dimensions must be positive (input {input_dim}, output {output_dim})")]
    ZeroDimension { input_dim: usize, output_dim: usize },
    #[error("feature length {found} does not match projection input {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("smooth projection is enabled but no projection was configured")]
    MissingProjection,
    #[error("cannot encode an empty batch")]
    EmptyBatch,
    #[error("sample {index} has shape {found:?} (blocks, dim), expected {expected:?}")]
    HeterogeneousBatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("activation batch rows must all have length {expected}, row {row} has {found}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
}

/// Per-block feature vectors of one sample, in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFeatureSet {
    blocks: Vec<Vec<f32>>,
}

impl BlockFeatureSet {
    pub fn new(blocks: Vec<Vec<f32>>) -> Result<Self, FeatureError> {
        let dim = blocks.first().ok_or(FeatureError::NoBlocks)?.len();
        for (index, block) in blocks.iter().enumerate() {
            if block.len() != dim {
                return Err(FeatureError::BlockDimMismatch {
                    index,
                    expected: dim,
                    found: block.len(),
                });
            }
            if let Some(entry) = block.iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite { block: index, entry });
            }
        }
        Ok(Self { blocks })
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn blocks(&self) -> &[Vec<f32>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Vec<f32>> {
        self.blocks
    }

    /// Multiplies every entry by `alpha`.
    pub fn scaled(&self, alpha: f32) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| b.iter().map(|v| v * alpha).collect())
                .collect(),
        }
    }
}

/// A frozen `E x D` Gaussian projection matrix, fully determined by its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionSpec {
    seed: u64,
    input_dim: usize,
    output_dim: usize,
    // row-major, row i holds the D weights fed by input feature i
    weights: Vec<f32>,
}

impl ProjectionSpec {
    /// Builds a projection from explicit row-major weights. Mostly useful for
    /// tests; [`init_projection`] is the normal constructor.
    pub fn from_weights(
        input_dim: usize,
        output_dim: usize,
        weights: Vec<f32>,
    ) -> Result<Self, FeatureError> {
        if input_dim == 0 || output_dim == 0 {
            return Err(FeatureError::ZeroDimension {
                input_dim,
                output_dim,
            });
        }
        if weights.len() != input_dim * output_dim {
            return Err(FeatureError::LengthMismatch {
                expected: input_dim * output_dim,
                found: weights.len(),
            });
        }
        Ok(Self {
            seed: 0,
            input_dim,
            output_dim,
            weights,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weight(&self, input: usize, output: usize) -> f32 {
        self.weights[input * self.output_dim + output]
    }
}

/// Samples an `input_dim x output_dim` matrix of i.i.d. standard normal
/// entries with the generator described by [`PROJECTION_RNG`].
pub fn init_projection(
    seed: u64,
    input_dim: usize,
    output_dim: usize,
) -> Result<ProjectionSpec, FeatureError> {
    if input_dim == 0 || output_dim == 0 {
        return Err(FeatureError::ZeroDimension {
            input_dim,
            output_dim,
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let weights = (0..input_dim * output_dim)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v as f32
        })
        .collect();
    Ok(ProjectionSpec {
        seed,
        input_dim,
        output_dim,
        weights,
    })
}

/// Encoder configuration, including the two ablation switches.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub fusion_enabled: bool,
    pub smooth_projection_enabled: bool,
    pub projection: Option<ProjectionSpec>,
}

impl EncoderConfig {
    /// Fusion and smooth projection both on.
    pub fn full(projection: ProjectionSpec) -> Self {
        Self {
            fusion_enabled: true,
            smooth_projection_enabled: true,
            projection: Some(projection),
        }
    }

    /// Fusion and smooth projection both off: the encoder returns the last
    /// block unchanged.
    pub fn passthrough() -> Self {
        Self {
            fusion_enabled: false,
            smooth_projection_enabled: false,
            projection: None,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.smooth_projection_enabled && self.projection.is_none() {
            return Err(FeatureError::MissingProjection);
        }
        Ok(())
    }

    /// Width of the activations this encoder produces for `block_dim` inputs.
    pub fn activation_dim(&self, block_dim: usize) -> usize {
        match (&self.projection, self.smooth_projection_enabled) {
            (Some(p), true) => p.output_dim(),
            _ => block_dim,
        }
    }
}

/// `S x D_eff` activations, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBatch {
    rows: DMatrix<f32>,
}

impl ActivationBatch {
    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, FeatureError> {
        let width = rows.first().ok_or(FeatureError::EmptyBatch)?.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(FeatureError::RaggedRows {
                row,
                expected: width,
                found: r.len(),
            });
        }
        Ok(Self {
            rows: DMatrix::from_fn(rows.len(), width, |i, j| rows[i][j]),
        })
    }

    pub fn from_matrix(rows: DMatrix<f32>) -> Result<Self, FeatureError> {
        if rows.nrows() == 0 {
            return Err(FeatureError::EmptyBatch);
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f32> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec<f32> {
        self.rows.row(i).iter().copied().collect()
    }

    /// Promotes to 64-bit for the classifier.
    pub fn to_f64(&self) -> DMatrix<f64> {
        self.rows.map(f64::from)
    }
}

/// Averages all blocks when fusion is on, otherwise returns the last block.
pub fn fuse_blocks(sample: &BlockFeatureSet, config: &EncoderConfig) -> Vec<f32> {
    let blocks = sample.blocks();
    if !config.fusion_enabled || blocks.len() == 1 {
        return blocks[blocks.len() - 1].clone();
    }
    let n = blocks.len() as f64;
    let mut acc = vec![0.0f64; sample.block_dim()];
    for block in blocks {
        for (a, v) in acc.iter_mut().zip(block) {
            *a += f64::from(*v);
        }
    }
    acc.into_iter().map(|s| (s / n) as f32).collect()
}

fn sigmoid(z: f64) -> f32 {
    let s = 1.0 / (1.0 + (-z).exp());
    (s as f32).clamp(SIGMOID_FLOOR, SIGMOID_CEIL)
}

/// Projects `fused` through `spec` and applies the sigmoid, or returns it
/// untouched when `enabled` is false.
pub fn smooth_project(
    fused: &[f32],
    spec: &ProjectionSpec,
    enabled: bool,
) -> Result<Vec<f32>, FeatureError> {
    if !enabled {
        return Ok(fused.to_vec());
    }
    if fused.len() != spec.input_dim {
        return Err(FeatureError::LengthMismatch {
            expected: spec.input_dim,
            found: fused.len(),
        });
    }
    // Fixed accumulation order (input index ascending) so that batched and
    // per-sample encoding agree bit for bit.
    let mut acc = vec![0.0f64; spec.output_dim];
    for (x, row) in fused.iter().zip(spec.weights.chunks_exact(spec.output_dim)) {
        let x = f64::from(*x);
        if x == 0.0 {
            continue;
        }
        for (a, w) in acc.iter_mut().zip(row) {
            *a += x * f64::from(*w);
        }
    }
    Ok(acc.into_iter().map(sigmoid).collect())
}

/// Runs the full encoder on one sample.
pub fn encode_sample(
    sample: &BlockFeatureSet,
    config: &EncoderConfig,
) -> Result<Vec<f32>, FeatureError> {
    config.validate()?;
    let fused = fuse_blocks(sample, config);
    match (&config.projection, config.smooth_projection_enabled) {
        (Some(spec), true) => smooth_project(&fused, spec, true),
        _ => Ok(fused),
    }
}

/// Encodes a batch of samples into an [`ActivationBatch`], row `i` holding
/// the encoding of `samples[i]`.
pub fn encode_batch(
    samples: &[BlockFeatureSet],
    config: &EncoderConfig,
) -> Result<ActivationBatch, FeatureError> {
    config.validate()?;
    let first = samples.first().ok_or(FeatureError::EmptyBatch)?;
    let shape = (first.block_count(), first.block_dim());
    let mut rows = Vec::with_capacity(samples.len());
    for (index, sample) in samples.iter().enumerate() {
        let found = (sample.block_count(), sample.block_dim());
        if found != shape {
            return Err(FeatureError::HeterogeneousBatch {
                index,
                expected: shape,
                found,
            });
        }
        rows.push(encode_sample(sample, config)?);
    }
    ActivationBatch::from_rows(&rows)
}
