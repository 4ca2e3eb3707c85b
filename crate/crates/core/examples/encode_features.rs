// Turns per-block backbone features into classifier activations.
//
// Shows block fusion, the frozen random projection and the two ablation
// switches on a single hand-made sample.

use foal::{encode_batch, fuse_blocks, init_projection, smooth_project, BlockFeatureSet, EncoderConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    // three blocks of width 4, as if pooled from three encoder stages
    let sample = BlockFeatureSet::new(vec![
        vec![1.0, 2.0, 3.0, 4.0],
        vec![0.0, -2.0, 6.0, 1.0],
        vec![2.0, 0.0, 0.0, 1.0],
    ])?;
    let projection = init_projection(42, 4, 8)?;
    let full = EncoderConfig::full(projection.clone());

    let fused = fuse_blocks(&sample, &full);
    println!("fused (block mean): {fused:?}");
    let activations = smooth_project(&fused, &projection, true)?;
    println!("activations:        {activations:?}");
    assert!(activations.iter().all(|&v| v > 0.0 && v < 1.0));

    let last_block_only = EncoderConfig {
        fusion_enabled: false,
        ..full.clone()
    };
    println!("without fusion:     {:?}", fuse_blocks(&sample, &last_block_only));

    let no_projection = EncoderConfig {
        smooth_projection_enabled: false,
        projection: None,
        ..full.clone()
    };
    let raw = encode_batch(std::slice::from_ref(&sample), &no_projection)?;
    println!("without projection: {:?} (width {})", raw.row(0), raw.dim());

    // the batch path and the one-sample path agree bit for bit
    let batch = encode_batch(&[sample.clone(), sample.scaled(2.0)], &full)?;
    assert_eq!(batch.row(0), activations);
    println!("batch of {} rows, width {}", batch.len(), batch.dim());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
