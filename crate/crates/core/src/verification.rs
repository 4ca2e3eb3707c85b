//! Operational checks of the recursive update: equivalence with the joint
//! ridge solution, and constant per-update cost.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::classifier::{closed_form, one_hot, relative_frobenius_error, ClassId, ClassifierError, ClassifierState};
use crate::features::ActivationBatch;
use crate::synthetic::{random_activation_stream, RawBatch};

/// Tolerance on the relative Frobenius error between recursive and joint
/// weights.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;

/// Tolerance on `max |R (Σ XᵀX + γI) - I|`.
pub const R_IDENTITY_TOLERANCE: f64 = 1e-7;

/// Allowed ratio between last-decile and first-decile median update time.
pub const COST_RATIO_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub dim: usize,
    pub tasks: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub classes_per_task: usize,
    pub seed: u64,
    pub gamma: f64,
    /// Fix the number of samples per task independently of the batching,
    /// so different batch sizes partition the same stream.
    pub samples_per_task: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            dim: 64,
            tasks: 5,
            batches: 10,
            batch_size: 8,
            classes_per_task: 4,
            seed: 0,
            gamma: 1.0,
            samples_per_task: None,
        }
    }
}

impl VerifyOptions {
    pub fn samples_per_task(&self) -> usize {
        self.samples_per_task
            .unwrap_or(self.batches * self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub samples: usize,
    pub updates: usize,
    /// `‖W_rec - W_joint‖_F / ‖W_joint‖_F`.
    pub relative_error: f64,
    pub r_identity_error: f64,
    pub asymmetry: f64,
    pub positive_definite: bool,
    /// Digest of the recursive weights, columns in class-id order, rounded
    /// to 7 significant digits.
    pub weight_digest: String,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.relative_error <= EQUIVALENCE_TOLERANCE
    }
}

/// SHA-256 over the entries of `w` printed with 7 significant digits.
pub fn weight_digest(ids: &[ClassId], w: &DMatrix<f64>) -> String {
    let mut hasher = Sha256::new();
    for id in ids {
        hasher.update(id.to_le_bytes());
    }
    for v in w.iter() {
        // fold -0 into 0 so signs of vanishing entries do not matter
        let v = if *v == 0.0 { 0.0 } else { *v };
        hasher.update(format!("{v:.6e};").as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Feeds `stream` to a fresh classifier and compares against the joint
/// solution over the stacked data.
pub fn verify_stream(
    stream: &[Vec<RawBatch>],
    dim: usize,
    gamma: f64,
) -> Result<(VerifyReport, ClassifierState), ClassifierError> {
    let mut state = ClassifierState::new(dim, gamma)?;
    let mut rows: Vec<DMatrix<f64>> = Vec::new();
    let mut labels: Vec<ClassId> = Vec::new();
    let mut updates = 0;
    for batch in stream.iter().flatten() {
        state.update(&batch.activations, &batch.labels.clone().into())?;
        rows.push(batch.activations.to_f64());
        labels.extend_from_slice(&batch.labels);
        updates += 1;
    }
    let samples = labels.len();
    let mut x = DMatrix::zeros(samples, dim);
    let mut at = 0;
    for block in &rows {
        x.rows_mut(at, block.nrows()).copy_from(block);
        at += block.nrows();
    }
    let y = one_hot(&labels, state.class_ids()).expect("every label has a column");
    let joint = closed_form(&x, &y, gamma)?;

    let mut gram = x.tr_mul(&x);
    for i in 0..dim {
        gram[(i, i)] += gamma;
    }
    let identity_gap = state.autocorrelation_inverse() * &gram - DMatrix::<f64>::identity(dim, dim);

    let (ids, w) = state.weights_by_class_id();
    let report = VerifyReport {
        samples,
        updates,
        relative_error: relative_frobenius_error(state.weights(), &joint),
        r_identity_error: identity_gap.amax(),
        asymmetry: state.asymmetry(),
        positive_definite: state.is_positive_definite(),
        weight_digest: weight_digest(&ids, &w),
    };
    Ok((report, state))
}

/// Generates a random stream from `opts` and verifies it.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport, ClassifierError> {
    let stream = random_activation_stream(
        opts.dim,
        opts.tasks,
        opts.samples_per_task(),
        opts.batch_size,
        opts.classes_per_task,
        opts.seed,
    );
    verify_stream(&stream, opts.dim, opts.gamma).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub dim: usize,
    pub batch_size: usize,
    pub latencies: Vec<Duration>,
    pub first_decile_median: Duration,
    pub last_decile_median: Duration,
}

impl BenchReport {
    pub fn ratio(&self) -> f64 {
        let first = self.first_decile_median.as_secs_f64();
        if first == 0.0 {
            return 1.0;
        }
        self.last_decile_median.as_secs_f64() / first
    }

    pub fn passed(&self) -> bool {
        self.ratio() <= COST_RATIO_LIMIT
    }

    pub fn median(&self) -> Duration {
        median(&self.latencies)
    }
}

fn median(values: &[Duration]) -> Duration {
    let mut v = values.to_vec();
    v.sort_unstable();
    if v.is_empty() {
        return Duration::ZERO;
    }
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2
    }
}

/// Times `updates` classifier updates on random `batch_size x dim` batches
/// spread over 10 classes. Data generation is outside the timed region.
pub fn bench_updates(
    dim: usize,
    batch_size: usize,
    updates: usize,
    seed: u64,
) -> Result<BenchReport, ClassifierError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut state = ClassifierState::new(dim, 1.0)?;
    let mut latencies = Vec::with_capacity(updates);
    for _ in 0..updates {
        let rows = DMatrix::from_fn(batch_size, dim, |_, _| rng.random::<f32>());
        let batch = ActivationBatch::from_matrix(rows).map_err(|_| ClassifierError::ZeroDimension)?;
        let labels: Vec<ClassId> = (0..batch_size).map(|_| rng.random_range(0..10)).collect();
        let labels = labels.into();
        let t0 = Instant::now();
        state.update(&batch, &labels)?;
        latencies.push(t0.elapsed());
    }
    let decile = (updates / 10).max(1).min(updates);
    let first = median(&latencies[..decile]);
    let last = median(&latencies[updates - decile..]);
    Ok(BenchReport {
        dim,
        batch_size,
        latencies,
        first_decile_median: first,
        last_decile_median: last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_stream_is_equivalent() {
        let r = verify(&VerifyOptions::default()).unwrap();
        assert_eq!(r.samples, 400);
        assert_eq!(r.updates, 50);
        assert!(r.passed(), "relative error {}", r.relative_error);
        assert!(r.r_identity_error <= R_IDENTITY_TOLERANCE);
        assert!(r.asymmetry <= 1e-10);
        assert!(r.positive_definite);
    }

    #[test]
    fn single_batch_is_trivial() {
        let r = verify(&VerifyOptions {
            tasks: 1,
            batches: 1,
            ..VerifyOptions::default()
        })
        .unwrap();
        assert_eq!(r.updates, 1);
        assert!(r.passed());
    }

    #[test]
    fn digest_ignores_batching() {
        let base = VerifyOptions {
            samples_per_task: Some(320),
            ..VerifyOptions::default()
        };
        let one = verify(&VerifyOptions {
            batch_size: 1,
            ..base.clone()
        })
        .unwrap();
        let whole = verify(&VerifyOptions {
            batch_size: 320,
            ..base
        })
        .unwrap();
        assert_eq!(one.samples, whole.samples);
        assert_eq!(one.weight_digest, whole.weight_digest);
    }

    #[test]
    fn bench_single_update_passes() {
        let r = bench_updates(16, 4, 1, 0).unwrap();
        assert_eq!(r.latencies.len(), 1);
        assert!(r.passed());
    }

    #[test]
    fn median_of_even_count() {
        let d = |ms| Duration::from_millis(ms);
        assert_eq!(median(&[d(4), d(1), d(3), d(2)]), Duration::from_micros(2500));
    }
}
