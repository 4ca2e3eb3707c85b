// Per-class weight norms after a run. An unbiased learner keeps early and
// late classes at similar scale.

use foal::synthetic::{generate, SyntheticSpec};
use foal::{run_experiment, RunConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let spec = SyntheticSpec {
        tasks: 5,
        samples_per_class: 30,
        test_samples_per_class: 5,
        ..SyntheticSpec::default()
    };
    let manifest = generate(&spec, dir.path())?;
    let e = run_experiment(
        &manifest,
        &RunConfig {
            projection_dim: 256,
            ..RunConfig::default()
        },
    )?;

    for task in &manifest.tasks {
        let norms: Vec<f64> = e
            .report
            .weight_norms
            .iter()
            .filter(|n| task.classes.contains(&n.class))
            .map(|n| n.norm)
            .collect();
        let mean = norms.iter().sum::<f64>() / norms.len() as f64;
        println!("task {}: mean class-weight norm {mean:.4}", task.index);
    }
    println!("coefficient of variation: {:.4}", e.report.weight_norm_cv.unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
