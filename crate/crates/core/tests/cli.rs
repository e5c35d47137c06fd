use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drowsyrank::data::{write_trip_file, SensorFrame, Trip, TripLabel};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drowsyrank")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        ok(&["synth", "--out", &s(&root.join("data")), "--drowsy", "4", "--normal", "6", "--min-len", "60", "--max-len", "90"]);
        Self { _dir: dir, root }
    }

    fn p(&self, rel: &str) -> String {
        s(&self.root.join(rel))
    }

    fn train(&self) -> String {
        ok(&["train", "--manifest", &self.p("data/manifest.csv"), "--out", &self.p("model"), "--iterations", "20000", "--lambda", "0"])
    }
}

#[test]
fn train_score_eval_report_round() {
    let w = Workspace::new();
    let log = w.train();
    assert!(log.contains("lambda 0"));
    for f in ["model.txt", "pipeline.txt", "train_log.csv"] {
        assert!(w.root.join("model").join(f).is_file(), "{f}");
    }
    let steps: Vec<f64> = fs::read_to_string(w.root.join("model/train_log.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(steps[0], 1.0);
    assert!(steps.last().unwrap() < &steps[0]);

    ok(&["score", "--manifest", &w.p("data/manifest.csv"), "--model", &w.p("model"), "--out", &w.p("scores.csv")]);
    let scores = fs::read_to_string(w.root.join("scores.csv")).unwrap();
    assert!(scores.starts_with("trip_id,t,score\n"));

    let eval = ok(&["eval", "--manifest", &w.p("data/manifest.csv"), "--model", &w.p("model"), "--out", &w.p("eval"), "--auc2"]);
    assert!(eval.contains("auc1") && eval.contains("auc2"), "{eval}");
    for f in ["roc1.csv", "roc2.csv"] {
        let text = fs::read_to_string(w.root.join("eval").join(f)).unwrap();
        assert!(text.starts_with("threshold,fpr,tpr\n"));
    }

    let report = ok(&["report", &w.p("model"), "--top", "3"]);
    assert_eq!(report.lines().filter(|l| !l.trim().is_empty()).count(), 3 + 1, "{report}");
}

#[test]
fn cv_writes_reports_per_method() {
    let w = Workspace::new();
    ok(&[
        "cv", "--manifest", &w.p("data/manifest.csv"), "--out", &w.p("cv"), "--k", "2", "--iterations", "5000",
        "--lambda", "0",
    ]);
    for m in ["proposed", "logistic", "anomaly"] {
        for f in [format!("report_{m}.csv"), format!("roc1_{m}.csv"), format!("roc2_{m}.csv")] {
            assert!(w.root.join("cv").join(&f).is_file(), "{f}");
        }
    }
    let combined = fs::read_to_string(w.root.join("cv/cv_report.csv")).unwrap();
    assert!(combined.lines().count() > 3);
}

#[test]
fn auc2_without_truth_exits_one() {
    let w = Workspace::new();
    w.train();
    let dir = w.root.join("plain");
    fs::create_dir_all(&dir).unwrap();
    let mut manifest = String::new();
    for (i, label) in [TripLabel::Drowsy, TripLabel::Normal].into_iter().enumerate() {
        let trip = Trip {
            id: format!("p{i}"),
            label,
            frames: (0..20).map(|k| SensorFrame::new(k as f64, 0.1 * k as f64, 0.0, 9.8, 12.0, 45.0)).collect(),
            truth: None,
        };
        write_trip_file(&trip, &dir.join(format!("p{i}.csv"))).unwrap();
        manifest.push_str(&format!("p{i}.csv,{label}\n"));
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    let m = s(&dir.join("manifest.csv"));
    let out = cli(&["eval", "--manifest", &m, "--model", &w.p("model"), "--out", &w.p("e"), "--auc2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    // without --auc2 the trip-level part still works
    ok(&["eval", "--manifest", &m, "--model", &w.p("model"), "--out", &w.p("e")]);
}

#[test]
fn flag_errors_exit_two() {
    assert_eq!(cli(&["train", "--iterations", "many"]).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(cli(&[]).status.code(), Some(2));
}

#[test]
fn missing_manifest_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["train", "--manifest", &s(&dir.path().join("nope.csv")), "--out", &s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn training_is_reproducible() {
    let w = Workspace::new();
    w.train();
    let first = fs::read(w.root.join("model/model.txt")).unwrap();
    w.train();
    assert_eq!(first, fs::read(w.root.join("model/model.txt")).unwrap());
}
