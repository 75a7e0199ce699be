use std::path::Path;
use std::process::{Command, Output};

fn ufo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ufo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synthetic_run_with_ground_truth_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = ufo(&[
        "--synthetic",
        "frames=10,distractors=0.2,drop=5",
        "--seed",
        "7",
        "--out",
        path(&out),
        "--overlay",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sequence,precision,recall,f_score,corloc,ap,seconds_per_frame"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "synthetic");
    assert_eq!(row[1..].len(), 6);
    assert!(row[1..].iter().all(|v| v.parse::<f64>().is_ok()));
    assert!(out.join("overlays/00009.png").is_file());
    assert!(out.join("timing.json").is_file());
}

#[test]
fn run_without_ground_truth_skips_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert!(ufo(&["--synthetic", "frames=4", "--out", path(&gen)])
        .status
        .success());
    let out = dir.path().join("out");
    let frames = gen.join("synthetic/frames");
    let o = ufo(&["--input", path(&frames), "--out", path(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dets = std::fs::read_to_string(out.join("detections.jsonl")).unwrap();
    assert_eq!(dets.lines().count(), 4);
    assert!(!out.join("metrics.csv").exists());
}

#[test]
fn detections_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let o = ufo(&[
                "--synthetic",
                "frames=8,distractors=0.3",
                "--seed",
                "3",
                "--out",
                path(&out),
            ]);
            assert!(o.status.success());
            std::fs::read(out.join("detections.jsonl")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn window_of_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ufo(&[
        "--synthetic",
        "frames=4",
        "--window",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("window"));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ufo(&[
        "--input",
        path(&dir.path().join("nope")),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_with_config_code() {
    assert_eq!(ufo(&["--gate", "abc"]).status.code(), Some(1));
    assert_eq!(ufo(&[]).status.code(), Some(1));
    assert_eq!(ufo(&["--synthetic", "frames=0"]).status.code(), Some(1));
    assert!(ufo(&["--help"]).status.success());
}

#[test]
fn embedding_count_mismatch_is_a_pipeline_error() {
    let dir = tempfile::tempdir().unwrap();
    let emb = dir.path().join("emb");
    std::fs::create_dir_all(&emb).unwrap();
    // header for zero rows of dimension 4; every frame has proposals
    let mut bytes = b"UFOE".to_vec();
    bytes.extend_from_slice(&0u32.to_le_bytes());
    bytes.extend_from_slice(&4u32.to_le_bytes());
    std::fs::write(emb.join("00000.ufoe"), bytes).unwrap();
    let o = ufo(&[
        "--synthetic",
        "frames=2",
        "--embeddings",
        path(&emb),
        "--out",
        path(&dir.path().join("o")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
