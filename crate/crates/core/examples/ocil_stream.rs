// Full one-pass run: generate a labelled feature stream, learn it task by
// task and write the results document.

use foal::io::results::format_f64;
use foal::io::{serialize_results, ResultsDocument};
use foal::synthetic::{generate, SyntheticSpec};
use foal::{run_experiment, RunConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SyntheticSpec {
        tasks: 4,
        samples_per_class: 30,
        test_samples_per_class: 10,
        ..SyntheticSpec::default()
    };
    let manifest = generate(&spec, dir.path())?;
    let config = RunConfig {
        projection_dim: 256,
        ..RunConfig::default()
    };
    let experiment = run_experiment(&manifest, &config)?;

    println!("accuracy matrix (row i = after task i):");
    for row in experiment.accuracy.rows() {
        let cells: Vec<String> = row.iter().flatten().map(|a| format!("{a:.3}")).collect();
        println!("  {}", cells.join("  "));
    }
    let r = &experiment.report;
    println!("A_avg   = {}", format_f64(r.a_avg));
    println!("A_last  = {}", format_f64(r.a_last));
    println!("F_final = {}", r.f_final.map_or("n/a".into(), format_f64));

    let doc = ResultsDocument::new(&manifest.dataset, &experiment);
    let text = serialize_results(&doc);
    println!("results document: {} bytes", text.len());
    assert!(r.a_last >= 0.9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
