// Average accuracy and forgetting from a filled accuracy matrix.

use foal::{average_accuracy, forgetting, AccuracyMatrix};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut acc = AccuracyMatrix::new(3);
    for (i, row) in [[1.0, 0.0, 0.0], [0.8, 0.9, 0.0], [0.9, 0.85, 0.9]].iter().enumerate() {
        for (j, &a) in row.iter().enumerate().take(i + 1) {
            acc.set(i + 1, j + 1, a)?;
        }
    }
    for i in 1..=3 {
        print!("A_{i} = {:.4}", average_accuracy(&acc, i)?);
        if i >= 2 {
            let f = forgetting(&acc, i)?;
            print!("   F_{i} = {:.4}   per task {:?}", f.mean, f.per_task);
        }
        println!();
    }
    // a task that improves later gets negative forgetting, kept as is
    let improving = AccuracyMatrix::from_rows(vec![vec![0.6], vec![0.7, 0.9]])?;
    println!("improving stream F_2 = {:.4}", forgetting(&improving, 2)?.mean);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
