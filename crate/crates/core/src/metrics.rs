//! Accuracy and forgetting metrics over a lower-triangular accuracy matrix.
//!
//! `a[i][j]` is the accuracy on task `j`'s test set after training through
//! task `i` (both 1-based in the public API, `j <= i`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("task index {index} is out of range 1..={tasks}")]
    TaskOutOfRange { index: usize, tasks: usize },
    #[error("entry ({row}, {col}) is not populated")]
    Unpopulated { row: usize, col: usize },
    #[error("forgetting needs at least two tasks, got task index {0}")]
    TooFewTasks(usize),
    #[error("accuracy {value} at ({row}, {col}) is outside [0, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
}

/// Lower-triangular accuracy matrix. Row `i` (0-based) holds `i + 1` slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccuracyMatrix {
    rows: Vec<Vec<Option<f64>>>,
}

impl AccuracyMatrix {
    pub fn new(tasks: usize) -> Self {
        Self {
            rows: (1..=tasks).map(|i| vec![None; i]).collect(),
        }
    }

    /// Builds a fully populated matrix from its lower-triangular rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, MetricsError> {
        let tasks = rows.len();
        let mut acc = Self::new(tasks);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != i + 1 {
                return Err(MetricsError::Unpopulated {
                    row: i + 1,
                    col: row.len() + 1,
                });
            }
            for (j, v) in row.into_iter().enumerate() {
                acc.set(i + 1, j + 1, v)?;
            }
        }
        Ok(acc)
    }

    pub fn tasks(&self) -> usize {
        self.rows.len()
    }

    /// Records `a[i][j]`, 1-based.
    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<(), MetricsError> {
        self.check(i, j)?;
        if !(0.0..=1.0).contains(&value) {
            return Err(MetricsError::OutOfRange {
                row: i,
                col: j,
                value,
            });
        }
        self.rows[i - 1][j - 1] = Some(value);
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64, MetricsError> {
        self.check(i, j)?;
        self.rows[i - 1][j - 1].ok_or(MetricsError::Unpopulated { row: i, col: j })
    }

    fn check(&self, i: usize, j: usize) -> Result<(), MetricsError> {
        let tasks = self.tasks();
        if i == 0 || i > tasks {
            return Err(MetricsError::TaskOutOfRange { index: i, tasks });
        }
        if j == 0 || j > i {
            return Err(MetricsError::TaskOutOfRange { index: j, tasks: i });
        }
        Ok(())
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().flatten().all(Option::is_some)
    }
}

/// `A_i`: mean of `a[i][1..=i]`.
pub fn average_accuracy(acc: &AccuracyMatrix, i: usize) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    for j in 1..=i {
        sum += acc.get(i, j)?;
    }
    Ok(sum / i as f64)
}

/// Forgetting after task `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forgetting {
    /// `F_i`, mean of `per_task`.
    pub mean: f64,
    /// `f_{i,j}` for `j = 1..i-1`. Not clamped, so improvements show up as
    /// negative values.
    pub per_task: Vec<f64>,
}

/// `f_{i,j} = max_{l in j..i-1} a[l][j] - a[i][j]` and their mean `F_i`.
pub fn forgetting(acc: &AccuracyMatrix, i: usize) -> Result<Forgetting, MetricsError> {
    if i < 2 {
        return Err(MetricsError::TooFewTasks(i));
    }
    let per_task = (1..i)
        .map(|j| {
            let mut best = f64::NEG_INFINITY;
            for l in j..i {
                best = best.max(acc.get(l, j)?);
            }
            Ok(best - acc.get(i, j)?)
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    let mean = per_task.iter().sum::<f64>() / per_task.len() as f64;
    Ok(Forgetting { mean, per_task })
}

/// Sample coefficient of variation (population standard deviation over the
/// mean). `None` for empty input or a zero mean.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return None;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(var.sqrt() / mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_tasks() -> AccuracyMatrix {
        AccuracyMatrix::from_rows(vec![
            vec![0.9],
            vec![0.7, 0.9],
            vec![0.8, 0.85, 0.9],
        ])
        .unwrap()
    }

    #[test]
    fn average_accuracy_rows() {
        let acc = AccuracyMatrix::from_rows(vec![vec![1.0]]).unwrap();
        assert_eq!(average_accuracy(&acc, 1).unwrap(), 1.0);

        let acc = AccuracyMatrix::from_rows(vec![vec![1.0], vec![0.8, 0.9]]).unwrap();
        assert!((average_accuracy(&acc, 2).unwrap() - 0.85).abs() < 1e-15);

        let acc =
            AccuracyMatrix::from_rows(vec![vec![0.0], vec![0.0, 0.0], vec![0.0, 0.0, 0.0]])
                .unwrap();
        assert_eq!(average_accuracy(&acc, 3).unwrap(), 0.0);
    }

    #[test]
    fn unpopulated_row_is_an_error() {
        let mut acc = AccuracyMatrix::new(2);
        acc.set(1, 1, 1.0).unwrap();
        acc.set(2, 1, 0.5).unwrap();
        assert_eq!(
            average_accuracy(&acc, 2),
            Err(MetricsError::Unpopulated { row: 2, col: 2 })
        );
        assert!(average_accuracy(&acc, 3).is_err());
    }

    #[test]
    fn two_task_forgetting() {
        let acc = AccuracyMatrix::from_rows(vec![vec![1.0], vec![0.8, 0.9]]).unwrap();
        let f = forgetting(&acc, 2).unwrap();
        assert!((f.per_task[0] - 0.2).abs() < 1e-15);
        assert!((f.mean - 0.2).abs() < 1e-15);
    }

    #[test]
    fn three_task_forgetting() {
        let f = forgetting(&three_tasks(), 3).unwrap();
        assert!((f.per_task[0] - 0.1).abs() < 1e-12);
        assert!((f.per_task[1] - 0.05).abs() < 1e-12);
        assert!((f.mean - 0.075).abs() < 1e-12);
    }

    #[test]
    fn forgetting_needs_two_tasks() {
        assert_eq!(
            forgetting(&three_tasks(), 1),
            Err(MetricsError::TooFewTasks(1))
        );
    }

    #[test]
    fn improvements_are_negative() {
        let acc = AccuracyMatrix::from_rows(vec![vec![0.5], vec![0.7, 0.9]]).unwrap();
        let f = forgetting(&acc, 2).unwrap();
        assert!(f.mean < 0.0);
    }

    #[test]
    fn rejects_out_of_range_accuracy() {
        let mut acc = AccuracyMatrix::new(1);
        assert!(acc.set(1, 1, 1.5).is_err());
        assert!(acc.set(1, 2, 0.5).is_err());
    }

    #[test]
    fn cv_of_norms() {
        assert_eq!(coefficient_of_variation(&[2.0, 2.0]), Some(0.0));
        assert_eq!(coefficient_of_variation(&[]), None);
        let cv = coefficient_of_variation(&[1.0, 3.0]).unwrap();
        assert!((cv - 0.5).abs() < 1e-15);
    }
}
