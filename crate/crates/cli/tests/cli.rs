use std::path::Path;
use std::process::{Command, Output};

fn stepclust(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepclust"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn simulate_small(dir: &Path) {
    let out = stepclust(
        dir,
        &["simulate", "--family", "step-amount", "--seed", "5", "--n-per-group", "15", "-o", "d.csv", "--truth", "t.csv"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_then_cluster_recovers_groups() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let out = stepclust(tmp.path(), &["cluster", "-i", "d.csv", "-k", "3", "--method", "pam", "--truth", "t.csv", "-o", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["labels.csv", "scores.csv", "explained.csv", "model.json", "report.json"] {
        assert!(tmp.path().join("run").join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("run/report.json")).unwrap()).unwrap();
    assert!(report["metrics"]["ccr"].as_f64().unwrap() >= 0.95);
    let labels = std::fs::read_to_string(tmp.path().join("run/labels.csv")).unwrap();
    assert!(labels.starts_with("day_id,cluster\n"));
    assert_eq!(labels.lines().count(), 46);
}

#[test]
fn fit_and_cluster_scores() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    assert_eq!(code(&stepclust(tmp.path(), &["fit", "-i", "d.csv", "-o", "fit"])), 0);
    let out = stepclust(tmp.path(), &["cluster", "--scores", "fit/scores.csv", "-k", "3", "--truth", "t.csv", "-o", "c"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("c/metrics.json").exists());

    // scoring the same data with the saved model reproduces the scores
    let out = stepclust(tmp.path(), &["fit", "-i", "d.csv", "--model", "fit/model.json", "-o", "again"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read_to_string(tmp.path().join("fit/scores.csv")).unwrap();
    let b = std::fs::read_to_string(tmp.path().join("again/scores.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn config_file_with_flag_override() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    std::fs::write(tmp.path().join("cfg.json"), r#"{"q1": 6, "k": 5, "method": "pam"}"#).unwrap();
    let out = stepclust(tmp.path(), &["cluster", "-i", "d.csv", "--config", "cfg.json", "-k", "3", "-o", "run"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["k"], 3);
    assert_eq!(report["config"]["q1"], 6);
    assert_eq!(report["config"]["method"], "pam");
}

#[test]
fn validation_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    std::fs::write(tmp.path().join("neg.csv"), "day_id,t0001,t0002\nd1,1,-3\n").unwrap();
    assert_eq!(code(&stepclust(tmp.path(), &["ingest-check", "-i", "neg.csv"])), 2);
    assert_eq!(code(&stepclust(tmp.path(), &["ingest-check", "-i", "d.csv", "--q2", "7"])), 2);
    std::fs::write(tmp.path().join("bad.json"), r#"{"q1": 0}"#).unwrap();
    assert_eq!(code(&stepclust(tmp.path(), &["features", "-i", "d.csv", "--config", "bad.json", "-o", "f.csv"])), 2);
    std::fs::write(tmp.path().join("typo.json"), r#"{"qq1": 3}"#).unwrap();
    assert_eq!(code(&stepclust(tmp.path(), &["features", "-i", "d.csv", "--config", "typo.json", "-o", "f.csv"])), 2);
    assert_eq!(code(&stepclust(tmp.path(), &["sweep-q1", "-i", "d.csv", "-o", "s.csv"])), 2);
    assert_eq!(code(&stepclust(tmp.path(), &["simulate", "--family", "nope", "-o", "x", "--truth", "y"])), 2);
}

#[test]
fn other_errors_exit_with_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stepclust(tmp.path(), &["ingest-check", "-i", "absent.csv"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.csv"));
}

#[test]
fn gap_sweep_and_plots_write_csv() {
    let tmp = tempfile::tempdir().unwrap();
    simulate_small(tmp.path());
    let out = stepclust(tmp.path(), &["gap", "-i", "d.csv", "--k-max", "5", "--b-gap", "5", "-o", "gap.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let gap = std::fs::read_to_string(tmp.path().join("gap.csv")).unwrap();
    assert!(gap.starts_with("k,gap,sk\n"));
    assert_eq!(gap.lines().count(), 6);

    let out = stepclust(tmp.path(), &["sweep-q1", "-i", "d.csv", "-k", "3", "--q1-values", "4,8", "-o", "s.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);

    let out = stepclust(tmp.path(), &["plots", "-i", "d.csv", "-k", "3", "-o", "plots"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("heatmap"));
    assert!(tmp.path().join("plots/cluster_means.svg").exists());
    assert!(tmp.path().join("plots/eigenfunctions.csv").exists());
}

#[test]
fn benchmark_writes_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = stepclust(
        tmp.path(),
        &["benchmark", "--families", "sinusoidal", "--methods", "kmeans,pam", "--replicates", "2", "--n-per-group", "10", "-o", "bm"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("bm/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(tmp.path().join("bm/replicates.csv")).unwrap().lines().count(), 5);
    assert!(String::from_utf8_lossy(&out.stdout).contains("aRand"));
}
