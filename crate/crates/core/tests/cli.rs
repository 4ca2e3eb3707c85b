//! Drives the `foal` binary and checks exit codes and printed output.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use foal::io::read_results;
use foal::io::results::format_f64;

fn foal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_foal")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture_manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/synthetic2/manifest.json")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn run_writes_results_and_prints_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.json");
    let o = foal(&["run", "--manifest", s(&fixture_manifest()), "--proj-dim", "64", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = read_results(&out).unwrap();
    let text = stdout(&o);
    assert_eq!(line_value(&text, "A_avg"), format_f64(doc.report.a_avg));
    assert_eq!(line_value(&text, "A_last"), format_f64(doc.report.a_last));
    assert_eq!(line_value(&text, "F_final"), format_f64(doc.report.f_final.unwrap()));
    assert_eq!(doc.accuracy_matrix.tasks(), 2);
    assert!(doc.report.timing.is_none());
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
    for p in &paths {
        let o = foal(&["run", "--manifest", s(&fixture_manifest()), "--proj-dim", "32", "--seed", "3", "--output", s(p)]);
        assert!(o.status.success());
    }
    assert_eq!(std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
}

#[test]
fn non_positive_gamma_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = foal(&["run", "--manifest", s(&fixture_manifest()), "--gamma", "0", "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gamma must be positive, got 0"));
    assert!(!out.exists());
}

#[test]
fn parse_errors_exit_one() {
    assert_eq!(foal(&["run", "--bogus"]).status.code(), Some(1));
    assert_eq!(foal(&["nonsense"]).status.code(), Some(1));
    assert_eq!(foal(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_manifest_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = foal(&["run", "--manifest", s(&dir.path().join("none.json")), "--output", s(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_defaults_pass() {
    let o = foal(&["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err: f64 = line_value(&stdout(&o), "relative_error").parse().unwrap();
    assert!(err <= 1e-8);
    assert_eq!(line_value(&stdout(&o), "r_positive_definite"), "true");
}

#[test]
fn verify_digest_ignores_batch_size() {
    let digest = |bs: &str| {
        let o = foal(&["verify", "--samples-per-task", "320", "--batch-size", bs]);
        assert!(o.status.success());
        line_value(&stdout(&o), "w_digest").to_owned()
    };
    assert_eq!(digest("1"), digest("320"));
}

#[test]
fn verify_single_update() {
    let o = foal(&["verify", "--tasks", "1", "--batches", "1"]);
    assert!(o.status.success());
    assert_eq!(line_value(&stdout(&o), "updates"), "1");
}

#[test]
fn bench_single_update_passes() {
    let o = foal(&["bench", "--dim", "16", "--updates", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(line_value(&stdout(&o), "ratio"), "1.000");
}

#[test]
fn norms_from_saved_state_and_from_manifest_agree() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("c.fost");
    let o = foal(&[
        "run", "--manifest", s(&fixture_manifest()), "--proj-dim", "48",
        "--output", s(&dir.path().join("r.json")), "--save-state", s(&state),
    ]);
    assert!(o.status.success());
    let a = foal(&["norms", "--state", s(&state)]);
    let b = foal(&["norms", "--manifest", s(&fixture_manifest()), "--proj-dim", "48"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "class,norm");
    assert_eq!(lines.len(), 8, "header, six classes, cv");
    assert!(lines[7].starts_with("cv,"));
}

#[test]
fn norms_needs_a_source() {
    assert_eq!(foal(&["norms"]).status.code(), Some(1));
}

#[test]
fn make_synthetic_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "make-synthetic".to_owned(), "--tasks".into(), "2".into(), "--samples-per-class".into(), "6".into(),
            "--test-samples-per-class".into(), "3".into(), "--seed".into(), "11".into(),
            "--out-dir".into(), s(d).to_owned(),
        ]
    };
    for name in ["a", "b"] {
        let d = dir.path().join(name);
        let a: Vec<String> = args(&d);
        let o = foal(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["manifest.json", "task1_train.foal", "task2_test.foal"] {
        assert_eq!(
            std::fs::read(dir.path().join("a").join(f)).unwrap(),
            std::fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn single_task_reports_no_forgetting() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("one");
    assert!(foal(&["make-synthetic", "--tasks", "1", "--samples-per-class", "5", "--out-dir", s(&d)]).status.success());
    let o = foal(&[
        "run", "--manifest", s(&d.join("manifest.json")), "--proj-dim", "32",
        "--output", s(&dir.path().join("r.json")),
    ]);
    assert!(o.status.success());
    assert_eq!(line_value(&stdout(&o), "F_final"), "n/a");
}

#[test]
fn default_synthetic_stream_is_learned() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("syn");
    assert!(foal(&["make-synthetic", "--out-dir", s(&d)]).status.success());
    let o = foal(&["run", "--manifest", s(&d.join("manifest.json")), "--output", s(&dir.path().join("r.json"))]);
    assert!(o.status.success());
    let a_last: f64 = line_value(&stdout(&o), "A_last").parse().unwrap();
    assert!(a_last >= 0.9, "{a_last}");
}

#[test]
fn norms_report_exact_zero_for_untrained_class() {
    use foal::{ActivationBatch, ClassifierState};
    let dir = tempfile::tempdir().unwrap();
    let mut c = ClassifierState::new(3, 1.0).unwrap();
    let x = ActivationBatch::from_rows(&[vec![0.2, 0.5, 0.9], vec![0.7, 0.1, 0.3]]).unwrap();
    c.update(&x, &vec![4, 2].into()).unwrap();
    c.expand_classes(&[9]).unwrap();
    let path = dir.path().join("c.fost");
    foal::io::write_state(&c, &path).unwrap();

    let o = foal(&["norms", "--state", s(&path)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).take(3).collect();
    assert!(rows[0].starts_with("4,") && rows[1].starts_with("2,"), "{text}");
    assert_eq!(rows[2], format!("9,{}", format_f64(0.0)));

    let empty = dir.path().join("empty.fost");
    foal::io::write_state(&ClassifierState::new(3, 1.0).unwrap(), &empty).unwrap();
    assert_eq!(foal(&["norms", "--state", s(&empty)]).status.code(), Some(1));
}

#[test]
fn update_cost_grows_faster_than_width() {
    let median = |dim: &str| {
        let o = foal(&["bench", "--dim", dim, "--updates", "40"]);
        assert!(o.status.success());
        line_value(&stdout(&o), "median_update_us").parse::<f64>().unwrap()
    };
    let (small, large) = (median("250"), median("500"));
    // dense D x D work dominates, so doubling D should cost about four times as much
    assert!(large > 2.0 * small, "{small} us -> {large} us");
}
