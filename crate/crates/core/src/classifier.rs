//! Analytic classifier trained by recursive least squares.
//!
//! The classifier keeps two matrices: the `D x C` weights `W` and the
//! `D x D` regularized autocorrelation inverse `R = (sum XᵀX + γI)⁻¹`.
//! Each mini-batch `X` (`S x D`) with one-hot targets `Y` is absorbed with
//!
//! ```text
//! K  = R Xᵀ
//! R' = R - K (I + X K)⁻¹ Kᵀ
//! W' = W + R' Xᵀ (Y - X W)
//! ```
//!
//! which only factors an `S x S` matrix (`R' Xᵀ` is available as
//! `K (I + X K)⁻¹`, so no second `D x D` product is needed). After any sequence of batches `W`
//! equals the ridge solution over everything seen so far, which is what
//! [`closed_form`] computes directly.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use thiserror::Error;

use crate::features::ActivationBatch;

/// External class identifier, as stored in feature files.
pub type ClassId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("activation dimension must be positive")]
    ZeroDimension,
    #[error("class {0} is already known")]
    DuplicateClass(ClassId),
    #[error("batch has {rows} activation rows but {labels} labels")]
    LabelCountMismatch { rows: usize, labels: usize },
    #[error("activation width {found} does not match classifier dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("activation row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("batch system is not numerically positive definite (eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}])")]
    NotPositiveDefinite {
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },
    #[error("no classes learned")]
    NoClasses,
    #[error("stacked data has {rows} rows but targets have {target_rows}")]
    RowMismatch { rows: usize, target_rows: usize },
    #[error("invalid classifier state: {0}")]
    InvalidState(String),
}

/// Class labels for the rows of an [`ActivationBatch`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelBatch {
    pub class_ids: Vec<ClassId>,
}

impl LabelBatch {
    pub fn new(class_ids: Vec<ClassId>) -> Self {
        Self { class_ids }
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }
}

impl From<Vec<ClassId>> for LabelBatch {
    fn from(class_ids: Vec<ClassId>) -> Self {
        Self { class_ids }
    }
}

/// Output of [`ClassifierState::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_ids: Vec<ClassId>,
    pub logits: DMatrix<f64>,
}

/// Trainable state of the analytic classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    weights: DMatrix<f64>,
    r: DMatrix<f64>,
    gamma: f64,
    class_ids: Vec<ClassId>,
    samples_seen: u64,
}

impl ClassifierState {
    /// Fresh classifier: `R = I / gamma` and no classes.
    pub fn new(dim: usize, gamma: f64) -> Result<Self, ClassifierError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ClassifierError::InvalidGamma(gamma));
        }
        if dim == 0 {
            return Err(ClassifierError::ZeroDimension);
        }
        Ok(Self {
            weights: DMatrix::zeros(dim, 0),
            r: DMatrix::identity(dim, dim) / gamma,
            gamma,
            class_ids: Vec::new(),
            samples_seen: 0,
        })
    }

    /// Reassembles a state from its parts, checking shapes and ids.
    pub fn from_parts(
        weights: DMatrix<f64>,
        r: DMatrix<f64>,
        gamma: f64,
        class_ids: Vec<ClassId>,
        samples_seen: u64,
    ) -> Result<Self, ClassifierError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ClassifierError::InvalidGamma(gamma));
        }
        let dim = r.nrows();
        if dim == 0 || r.ncols() != dim || weights.nrows() != dim {
            return Err(ClassifierError::InvalidState(format!(
                "R is {}x{}, W is {}x{}",
                r.nrows(),
                r.ncols(),
                weights.nrows(),
                weights.ncols()
            )));
        }
        if weights.ncols() != class_ids.len() {
            return Err(ClassifierError::InvalidState(format!(
                "W has {} columns for {} classes",
                weights.ncols(),
                class_ids.len()
            )));
        }
        for (i, id) in class_ids.iter().enumerate() {
            if class_ids[..i].contains(id) {
                return Err(ClassifierError::DuplicateClass(*id));
            }
        }
        Ok(Self {
            weights,
            r,
            gamma,
            class_ids,
            samples_seen,
        })
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn autocorrelation_inverse(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn class_ids(&self) -> &[ClassId] {
        &self.class_ids
    }

    pub fn samples_seen(&self) -> u64 {
        self.samples_seen
    }

    fn column_of(&self, id: ClassId) -> Option<usize> {
        self.class_ids.iter().position(|&c| c == id)
    }

    /// Appends one zero weight column per new class, in the given order.
    pub fn expand_classes(&mut self, new_ids: &[ClassId]) -> Result<(), ClassifierError> {
        for (i, id) in new_ids.iter().enumerate() {
            if self.class_ids.contains(id) || new_ids[..i].contains(id) {
                return Err(ClassifierError::DuplicateClass(*id));
            }
        }
        if new_ids.is_empty() {
            return Ok(());
        }
        let old = self.weights.ncols();
        let weights = std::mem::replace(&mut self.weights, DMatrix::zeros(0, 0));
        self.weights = weights.resize_horizontally(old + new_ids.len(), 0.0);
        self.class_ids.extend_from_slice(new_ids);
        Ok(())
    }

    /// Absorbs one mini-batch. Unknown labels get fresh columns first. On
    /// error the state is left untouched.
    pub fn update(
        &mut self,
        batch: &ActivationBatch,
        labels: &LabelBatch,
    ) -> Result<(), ClassifierError> {
        let x = self.checked_activations(batch)?;
        if labels.len() != x.nrows() {
            return Err(ClassifierError::LabelCountMismatch {
                rows: x.nrows(),
                labels: labels.len(),
            });
        }

        // K = R Xᵀ, M = I + X K
        let xt = x.transpose();
        let k = &self.r * &xt;
        let mut m = &x * &k;
        for i in 0..m.nrows() {
            m[(i, i)] += 1.0;
        }
        symmetrize(&mut m);
        let chol = match Cholesky::new(m.clone()) {
            Some(c) => c,
            None => return Err(not_positive_definite(m)),
        };

        let mut fresh = Vec::new();
        for &id in &labels.class_ids {
            if self.column_of(id).is_none() && !fresh.contains(&id) {
                fresh.push(id);
            }
        }
        self.expand_classes(&fresh)?;

        // R <- R - K M⁻¹ Kᵀ
        let gain = chol.solve(&k.transpose());
        self.r.gemm(-1.0, &k, &gain, 1.0);
        symmetrize(&mut self.r);

        // W <- W + R Xᵀ (Y - X W), using R Xᵀ = K M⁻¹ = gainᵀ for the
        // updated R
        let mut residual = self.one_hot(&labels.class_ids);
        residual.gemm(-1.0, &x, &self.weights, 1.0);
        self.weights.gemm_tr(1.0, &gain, &residual, 1.0);

        self.samples_seen += x.nrows() as u64;
        Ok(())
    }

    fn checked_activations(&self, batch: &ActivationBatch) -> Result<DMatrix<f64>, ClassifierError> {
        if batch.dim() != self.dim() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.dim(),
                found: batch.dim(),
            });
        }
        let m = batch.matrix();
        for col in 0..m.ncols() {
            for row in 0..m.nrows() {
                if !m[(row, col)].is_finite() {
                    return Err(ClassifierError::NonFinite { row, col });
                }
            }
        }
        Ok(batch.to_f64())
    }

    /// One-hot targets against the current column order. Ids must be known.
    fn one_hot(&self, ids: &[ClassId]) -> DMatrix<f64> {
        let mut y = DMatrix::zeros(ids.len(), self.num_classes());
        for (row, id) in ids.iter().enumerate() {
            let col = self.column_of(*id).expect("label column allocated");
            y[(row, col)] = 1.0;
        }
        y
    }

    /// Logits `X W` and the arg-max class per row (ties go to the lowest
    /// column).
    pub fn predict(&self, batch: &ActivationBatch) -> Result<Prediction, ClassifierError> {
        if self.class_ids.is_empty() {
            return Err(ClassifierError::NoClasses);
        }
        let x = self.checked_activations(batch)?;
        let logits = &x * &self.weights;
        let class_ids = (0..logits.nrows())
            .map(|row| {
                let mut best = 0;
                for col in 1..logits.ncols() {
                    if logits[(row, col)] > logits[(row, best)] {
                        best = col;
                    }
                }
                self.class_ids[best]
            })
            .collect();
        Ok(Prediction { class_ids, logits })
    }

    /// L2 norm of each class's weight column, in column order.
    pub fn weight_column_norms(&self) -> Vec<(ClassId, f64)> {
        self.class_ids
            .iter()
            .zip(self.weights.column_iter())
            .map(|(&id, col)| (id, col.norm()))
            .collect()
    }

    /// Weights with columns sorted by class id, for comparing runs that saw
    /// classes in different orders.
    pub fn weights_by_class_id(&self) -> (Vec<ClassId>, DMatrix<f64>) {
        let mut order: Vec<usize> = (0..self.class_ids.len()).collect();
        order.sort_by_key(|&i| self.class_ids[i]);
        let ids = order.iter().map(|&i| self.class_ids[i]).collect();
        let w = self.weights.select_columns(order.iter());
        (ids, w)
    }

    /// Whether `R` still factors as symmetric positive definite.
    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(self.r.clone()).is_some()
    }

    /// Largest absolute asymmetry `max |R - Rᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        (&self.r - self.r.transpose()).amax()
    }
}

/// `m <- (m + mᵀ) / 2`, tiled to keep both halves in cache.
fn symmetrize(m: &mut DMatrix<f64>) {
    const TILE: usize = 64;
    let n = m.nrows();
    let data = m.as_mut_slice();
    for jb in (0..n).step_by(TILE) {
        for ib in (jb..n).step_by(TILE) {
            for j in jb..(jb + TILE).min(n) {
                let start = if ib == jb { j + 1 } else { ib };
                for i in start..(ib + TILE).min(n) {
                    // column-major: (i, j) lives at i + j * n
                    let lower = i + j * n;
                    let upper = j + i * n;
                    let avg = 0.5 * (data[lower] + data[upper]);
                    data[lower] = avg;
                    data[upper] = avg;
                }
            }
        }
    }
}

fn not_positive_definite(m: DMatrix<f64>) -> ClassifierError {
    let eig = SymmetricEigen::<f64, Dyn>::new(m).eigenvalues;
    ClassifierError::NotPositiveDefinite {
        min_eigenvalue: eig.min(),
        max_eigenvalue: eig.max(),
    }
}

/// Direct ridge solution `(XᵀX + γI)⁻¹ XᵀY` over stacked data.
pub fn closed_form(
    x_all: &DMatrix<f64>,
    y_all: &DMatrix<f64>,
    gamma: f64,
) -> Result<DMatrix<f64>, ClassifierError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(ClassifierError::InvalidGamma(gamma));
    }
    if x_all.nrows() != y_all.nrows() {
        return Err(ClassifierError::RowMismatch {
            rows: x_all.nrows(),
            target_rows: y_all.nrows(),
        });
    }
    let dim = x_all.ncols();
    if x_all.nrows() == 0 {
        return Ok(DMatrix::zeros(dim, y_all.ncols()));
    }
    let mut gram = x_all.tr_mul(x_all);
    for i in 0..dim {
        gram[(i, i)] += gamma;
    }
    let rhs = x_all.tr_mul(y_all);
    let chol = match Cholesky::new(gram.clone()) {
        Some(c) => c,
        None => return Err(not_positive_definite(gram)),
    };
    Ok(chol.solve(&rhs))
}

/// One-hot encodes `labels` against `class_ids` (column order).
pub fn one_hot(labels: &[ClassId], class_ids: &[ClassId]) -> Option<DMatrix<f64>> {
    let mut y = DMatrix::zeros(labels.len(), class_ids.len());
    for (row, id) in labels.iter().enumerate() {
        let col = class_ids.iter().position(|c| c == id)?;
        y[(row, col)] = 1.0;
    }
    Some(y)
}

/// `‖a - b‖_F / ‖b‖_F`, or the absolute norm when `b` is zero.
pub fn relative_frobenius_error(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let diff = (a - b).norm();
    let base = b.norm();
    if base == 0.0 {
        diff
    } else {
        diff / base
    }
}
