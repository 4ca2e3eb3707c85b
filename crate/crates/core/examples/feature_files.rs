// Writing and streaming the binary feature files and the task manifest that
// an extractor hands over.

use foal::io::{parse_manifest, read_features, read_header, write_manifest, FeatureWriter, StreamManifest, TaskSpec};
use foal::BlockFeatureSet;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let train = dir.path().join("train.foal");
    let test = dir.path().join("test.foal");

    for (path, count) in [(&train, 6u32), (&test, 2)] {
        let mut w = FeatureWriter::create(path, 2, 3, true)?;
        for i in 0..count {
            let v = i as f32;
            let sample = BlockFeatureSet::new(vec![vec![v, 1.0, -v], vec![0.5, v * v, 2.0]])?;
            w.write_sample(Some(i % 2), &sample)?;
        }
        let header = w.finish()?;
        println!("{}: {header:?}", path.file_name().unwrap().to_string_lossy());
    }

    let h = read_header(&train)?;
    assert_eq!(std::fs::metadata(&train)?.len(), h.file_len());

    // the reader is lazy: one sample in memory at a time
    for sample in read_features(&train)?.take(2) {
        let s = sample?;
        println!("label {:?} blocks {:?}", s.label, s.features.blocks());
    }

    let manifest = StreamManifest {
        dataset: "toy".into(),
        block_count: 2,
        block_dim: 3,
        extraction: [("backbone".to_owned(), "none".to_owned())].into(),
        tasks: vec![TaskSpec {
            index: 1,
            classes: vec![0, 1],
            train,
            test,
        }],
    };
    let path = dir.path().join("manifest.json");
    write_manifest(&manifest, &path)?;
    println!("{}", std::fs::read_to_string(&path)?);
    let back = parse_manifest(&path)?;
    back.validate()?;
    assert_eq!(back.tasks[0].train, manifest.tasks[0].train);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
