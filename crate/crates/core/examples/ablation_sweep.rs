// Sweeps the encoder switches, the regularizer and the projection width on
// one synthetic stream.

use foal::synthetic::{generate, SyntheticSpec};
use foal::{run_experiment, RunConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let manifest = generate(
        &SyntheticSpec {
            samples_per_class: 25,
            test_samples_per_class: 10,
            ..SyntheticSpec::default()
        },
        dir.path(),
    )?;
    let base = RunConfig {
        projection_dim: 256,
        ..RunConfig::default()
    };

    println!("fusion  projection  A_last   F_final");
    for (ff, sp) in [(true, true), (false, true), (true, false), (false, false)] {
        let cfg = RunConfig {
            fusion_enabled: ff,
            smooth_projection_enabled: sp,
            ..base.clone()
        };
        let r = run_experiment(&manifest, &cfg)?.report;
        println!("{ff:<7} {sp:<11} {:.4}   {:+.4}", r.a_last, r.f_final.unwrap_or(f64::NAN));
    }

    // the regularizer matters once samples are scarce relative to the width
    let scarce_dir = tempfile::tempdir()?;
    let scarce = generate(
        &SyntheticSpec {
            samples_per_class: 50,
            noise: 0.6,
            ..SyntheticSpec::default()
        },
        scarce_dir.path(),
    )?;
    println!("\ngamma     A_last (noisier stream, width 1000)");
    for gamma in [100.0, 10.0, 1.0, 0.1, 0.01, 0.001] {
        let r = run_experiment(&scarce, &RunConfig { gamma, ..RunConfig::default() })?.report;
        println!("{gamma:<9} {:.4}", r.a_last);
    }

    println!("\nwidth     A_last");
    for projection_dim in [32, 128, 512] {
        let r = run_experiment(&manifest, &RunConfig { projection_dim, ..base.clone() })?.report;
        println!("{projection_dim:<9} {:.4}", r.a_last);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
