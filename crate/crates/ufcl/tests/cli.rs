//! End-to-end smoke tests for the `ufcl` binary: every subcommand, the
//! on-disk formats it reads and writes, and config handling.

use std::path::Path;
use std::process::{Command, Output};

use ufcl::pipeline::{io, EpochReport};

fn ufcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ufcl"))
        .args(args)
        .output()
        .expect("failed to launch ufcl")
}

fn ufcl_ok(args: &[&str]) -> String {
    let out = ufcl(args);
    assert!(
        out.status.success(),
        "ufcl {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synth_writes_readable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = ufcl_ok(&[
        "--out-dir",
        path_str(dir.path()),
        "--seed",
        "7",
        "synth",
        "--classes",
        "6",
        "--per-class",
        "10",
        "--dim",
        "16",
    ]);
    assert!(out.contains("60 train"), "unexpected synth output: {out}");

    let train = io::read_matrix(&dir.path().join("train.mat")).unwrap();
    let test = io::read_matrix(&dir.path().join("test.mat")).unwrap();
    assert_eq!((train.rows(), train.cols()), (60, 16));
    assert_eq!((test.rows(), test.cols()), (60, 16));
    let labels = io::read_class_labels(&dir.path().join("train_labels.txt")).unwrap();
    assert_eq!(labels.len(), 60);
    assert_eq!(labels.iter().max(), Some(&5));

    // Same seed, same bytes.
    let rerun = tempfile::tempdir().unwrap();
    ufcl_ok(&[
        "--out-dir",
        path_str(rerun.path()),
        "--seed",
        "7",
        "synth",
        "--classes",
        "6",
        "--per-class",
        "10",
        "--dim",
        "16",
    ]);
    assert_eq!(
        std::fs::read(dir.path().join("train.mat")).unwrap(),
        std::fs::read(rerun.path().join("train.mat")).unwrap()
    );
}

#[test]
fn cluster_reads_csv_and_scores_against_labels() {
    let dir = tempfile::tempdir().unwrap();
    // Three tight blobs of six points each, in CSV form.
    let mut csv = String::new();
    let mut truth = String::new();
    for (cls, center) in [(0, 0.0f64), (1, 10.0), (2, 20.0)] {
        for i in 0..6 {
            csv.push_str(&format!("{},{}\n", center + 0.01 * i as f64, center));
            truth.push_str(&format!("{cls}\n"));
        }
    }
    let embeddings = dir.path().join("embeddings.csv");
    let labels = dir.path().join("labels.txt");
    std::fs::write(&embeddings, csv).unwrap();
    std::fs::write(&labels, truth).unwrap();

    let out = ufcl_ok(&[
        "--out-dir",
        path_str(dir.path()),
        "--set",
        "distance_kind=euclidean",
        "--set",
        "min_cluster_size=3",
        "cluster",
        "--embeddings",
        path_str(&embeddings),
        "--labels",
        path_str(&labels),
    ]);
    assert!(out.contains("clusters=3 outliers=0 of 18"), "unexpected: {out}");
    assert!(out.contains("acc=1.0000"), "unexpected: {out}");

    let pseudo = io::read_labels(&dir.path().join("pseudo_labels.txt")).unwrap();
    assert_eq!(pseudo.len(), 18);
}

#[test]
fn train_eval_resume_roundtrip() {
    let data_dir = tempfile::tempdir().unwrap();
    ufcl_ok(&[
        "--out-dir",
        path_str(data_dir.path()),
        "synth",
        "--classes",
        "5",
        "--per-class",
        "10",
        "--dim",
        "16",
    ]);

    let small = [
        "--set",
        "iterations_per_epoch=4",
        "--set",
        "batch_size=32",
        "--set",
        "min_cluster_size=3",
        "--set",
        "jaccard_k=10",
    ];
    let run_dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--out-dir", path_str(run_dir.path()), "--set", "epochs=2"];
    args.extend_from_slice(&small);
    args.extend_from_slice(&["train", "--data-dir", path_str(data_dir.path())]);
    let out = ufcl_ok(&args);
    let last: EpochReport = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(last.epoch, 2);

    let reports = io::read_reports(&run_dir.path().join("reports.jsonl")).unwrap();
    assert_eq!(reports.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![1, 2]);

    // Eval the fresh checkpoint.
    let eval_dir = tempfile::tempdir().unwrap();
    let ckpt = run_dir.path().join("checkpoint");
    let mut args = vec!["--out-dir", path_str(eval_dir.path())];
    args.extend_from_slice(&small);
    args.extend_from_slice(&[
        "eval",
        "--data-dir",
        path_str(data_dir.path()),
        "--checkpoint",
        path_str(&ckpt),
    ]);
    let out = ufcl_ok(&args);
    let eval: EpochReport = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(eval.epoch, 2);
    let on_disk = io::read_reports(&eval_dir.path().join("eval.jsonl")).unwrap();
    assert_eq!(on_disk.len(), 1);

    // Resume to epoch 4; only the two new epochs run.
    let resume_dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--out-dir", path_str(resume_dir.path()), "--set", "epochs=4"];
    args.extend_from_slice(&small);
    args.extend_from_slice(&[
        "train",
        "--data-dir",
        path_str(data_dir.path()),
        "--resume",
        path_str(&ckpt),
    ]);
    let out = ufcl_ok(&args);
    let last: EpochReport = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(last.epoch, 4);
    let reports = io::read_reports(&resume_dir.path().join("reports.jsonl")).unwrap();
    assert_eq!(reports.iter().map(|r| r.epoch).collect::<Vec<_>>(), vec![3, 4]);
}

#[test]
fn pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = ufcl_ok(&[
        "--out-dir",
        path_str(dir.path()),
        "--threads",
        "2",
        "--set",
        "epochs=1",
        "--set",
        "iterations_per_epoch=4",
        "--set",
        "batch_size=32",
        "--set",
        "min_cluster_size=3",
        "--set",
        "jaccard_k=10",
        "pipeline",
        "--classes",
        "5",
        "--per-class",
        "10",
        "--dim",
        "16",
    ]);
    let report: EpochReport = serde_json::from_str(out.lines().last().unwrap()).unwrap();
    assert_eq!(report.epoch, 1);
    assert!(dir.path().join("train.mat").exists());
    assert!(dir.path().join("reports.jsonl").exists());
    io::load_checkpoint(&dir.path().join("checkpoint")).unwrap();
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "epochs = 1\nbatch_size = 32\n# comment\nseed = 3\n").unwrap();
    ufcl_ok(&[
        "--config",
        path_str(&cfg),
        "--out-dir",
        path_str(dir.path()),
        "--set",
        "iterations_per_epoch=2",
        "--set",
        "min_cluster_size=3",
        "--set",
        "jaccard_k=10",
        "pipeline",
        "--classes",
        "5",
        "--per-class",
        "10",
        "--dim",
        "16",
    ]);
    assert!(dir.path().join("reports.jsonl").exists());
}

#[test]
fn unknown_config_key_is_rejected() {
    let out = ufcl(&["--set", "nonsense=1", "synth"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error"), "stderr: {stderr}");
    assert!(stderr.contains("nonsense"), "stderr: {stderr}");
}
