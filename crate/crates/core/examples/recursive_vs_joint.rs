// Trains batch by batch and compares against ridge regression fitted on the
// whole stream at once.

use foal::classifier::{closed_form, one_hot, relative_frobenius_error};
use foal::synthetic::random_activation_stream;
use foal::{ActivationBatch, ClassifierState};
use nalgebra::DMatrix;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dim = 48;
    let gamma = 0.5;
    let stream = random_activation_stream(dim, 4, 60, 9, 3, 21);

    let mut state = ClassifierState::new(dim, gamma)?;
    let mut rows: Vec<DMatrix<f32>> = Vec::new();
    let mut labels = Vec::new();
    for batch in stream.iter().flatten() {
        state.update(&batch.activations, &batch.labels.clone().into())?;
        rows.push(batch.activations.matrix().clone());
        labels.extend_from_slice(&batch.labels);
    }

    let all: Vec<Vec<f32>> = rows
        .iter()
        .flat_map(|m| (0..m.nrows()).map(move |i| m.row(i).iter().copied().collect()))
        .collect();
    let x = ActivationBatch::from_rows(&all)?.to_f64();
    let y = one_hot(&labels, state.class_ids()).ok_or("label outside learned classes")?;
    let joint = closed_form(&x, &y, gamma)?;

    let err = relative_frobenius_error(state.weights(), &joint);
    println!("samples seen:      {}", state.samples_seen());
    println!("classes learned:   {:?}", state.class_ids());
    println!("relative error:    {err:e}");
    println!("R asymmetry:       {:e}", state.asymmetry());
    assert!(err <= 1e-8);
    assert!(state.is_positive_definite());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
