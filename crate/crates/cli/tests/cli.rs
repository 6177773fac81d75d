use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn qppm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qppm"))
        .args(args)
        .env_remove("QPPM_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, body: serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&body).unwrap()).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stats_prints_counts() {
    let log = fixture("toy_log.csv");
    let out = qppm(&["stats", path_str(&log)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let lines: Vec<String> = stdout(&out).lines().map(str::to_owned).collect();
    assert_eq!(lines[0], "cases\tevents\tactivities\tvariants\tmedian case time");
    assert!(lines[1].starts_with("30\t93\t6\t6\t"), "{}", lines[1]);

    let out = qppm(&["stats", "--json", path_str(&log)]);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["no. cases"], 30);
    assert_eq!(json["no. events"], 93);
}

#[test]
fn stats_on_empty_log_is_zero() {
    let out = qppm(&["stats", "--json", path_str(&fixture("empty_log.csv"))]);
    assert_eq!(code(&out), 0);
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["no. cases", "no. events", "no. activities", "no. variants"] {
        assert_eq!(json[key], 0, "{key}");
    }
}

#[test]
fn stats_bad_path_is_usage_error() {
    assert_eq!(code(&qppm(&["stats", "/definitely/not/here.xes"])), 2);
    assert_eq!(code(&qppm(&["stats"])), 2);
}

#[test]
fn data_root_resolves_relative_paths() {
    let out = Command::new(env!("CARGO_BIN_EXE_qppm"))
        .args(["stats", "toy_log.csv"])
        .env("QPPM_DATA_ROOT", fixture(""))
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("\n30\t93\t"));
}

#[test]
fn prepare_without_filters_copies() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("copy.csv");
    let out = qppm(&["prepare", path_str(&fixture("toy_log.csv")), "--out", path_str(&out_file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let original = qppm(&["stats", "--json", path_str(&fixture("toy_log.csv"))]);
    let copy = qppm(&["stats", "--json", path_str(&out_file)]);
    assert_eq!(stdout(&original), stdout(&copy));
}

#[test]
fn prepare_filters_and_slices() {
    let dir = tempfile::tempdir().unwrap();
    let out = qppm(&[
        "prepare",
        path_str(&fixture("toy_log.csv")),
        "--filter-singletons",
        "--from",
        "20030501",
        "--to",
        "20030630",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stats = qppm(&["stats", "--json", path_str(&dir.path().join("prepared.csv"))]);
    let json: serde_json::Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert_eq!(json["no. cases"], 20);
    assert_eq!(json["no. variants"], 4);
}

#[test]
fn prepare_inverted_range_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qppm(&[
        "prepare",
        path_str(&fixture("toy_log.csv")),
        "--from",
        "2004-04-30",
        "--to",
        "2003-05-01",
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("after end"));
}

fn encode_config(dir: &Path, log: &Path) -> PathBuf {
    write_config(
        dir,
        serde_json::json!({
            "experiment": {
                "dataset": { "path": log },
                "encoding": "index_bsd_4",
                "inter_case": { "window_base": { "seconds": 864000.0 } }
            }
        }),
    )
}

fn encoded(dir: &Path, extra: &[&str]) -> (i32, Vec<String>) {
    let cfg = encode_config(dir, &fixture("three_events.csv"));
    let out_file = dir.join("features.csv");
    let mut args = vec!["encode", "--config", path_str(&cfg), "--out", path_str(&out_file)];
    args.extend_from_slice(extra);
    let out = qppm(&args);
    let lines = std::fs::read_to_string(&out_file)
        .map(|s| s.lines().map(str::to_owned).collect())
        .unwrap_or_default();
    (code(&out), lines)
}

#[test]
fn encode_three_event_trace() {
    let dir = tempfile::tempdir().unwrap();
    let (status, lines) = encoded(dir.path(), &[]);
    assert_eq!(status, 0);
    assert_eq!(lines.len(), 1 + 3);
    let columns = lines[0].split(',').count();
    assert!(lines[0].ends_with(",label"));
    assert_eq!(lines[1].rsplit(',').next(), Some("Send"));
    assert_eq!(lines[3].rsplit(',').next(), Some("END"));

    let dir2 = tempfile::tempdir().unwrap();
    let (status, lines) = encoded(dir2.path(), &["--features", "peer_cases"]);
    assert_eq!(status, 0);
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0].split(',').count(), columns + 1);
    assert!(lines[0].contains("peer_cases"));
}

#[test]
fn encode_unknown_encoder_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(encoded(dir.path(), &["--encoding", "fourier_7"]).0, 2);
    assert_eq!(code(&qppm(&["encode"])), 2);
}

fn bench_config(dir: &Path, log: &Path) -> PathBuf {
    write_config(
        dir,
        serde_json::json!({
            "experiment": {
                "dataset": { "path": log },
                "encoding": "index_bsd_2",
                "seed": 5
            },
            "classifiers": [
                { "type": "majority" },
                { "type": "svc_rbf" },
                { "type": "qke", "map": "zz_1" }
            ],
            "feature_sets": [[], ["peer_cases"]],
            "window_fractions": [0.15, 0.3, 0.5],
            "sampling_fractions": [0.5]
        }),
    )
}

#[test]
fn bench_toy_config_is_fast_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bench_config(dir.path(), &fixture("toy_log.csv"));
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let started = Instant::now();
        let out = qppm(&["bench", "--config", path_str(&cfg), "--out-dir", path_str(&out_dir), "--threads", "2"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert!(started.elapsed() < Duration::from_secs(60));
        (stdout(&out), std::fs::read_to_string(out_dir.join("results.csv")).unwrap())
    };
    let (stdout_a, table_a) = run("a");
    let (_, table_b) = run("b");
    assert_eq!(table_a, table_b);
    assert!(table_a.starts_with("classifier,index_bsd_2,peer_cases\nmajority,"));
    assert_eq!(table_a.lines().count(), 4);
    assert!(stdout_a.contains("qke_zz_1,"));
    for file in ["runs.csv", "sampling.csv", "report.json"] {
        assert!(dir.path().join("a").join(file).exists(), "{file}");
    }
}

#[test]
fn bench_missing_dataset_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bench_config(dir.path(), &dir.path().join("missing.xes"));
    let out = qppm(&["bench", "--config", path_str(&cfg), "--out-dir", path_str(dir.path())]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), serde_json::json!({ "experiment": { "folds": 1 } }));
    assert_eq!(code(&qppm(&["bench", "--config", path_str(&cfg)])), 2);
    let cfg = write_config(dir.path(), serde_json::json!({ "no_such_key": 1 }));
    assert_eq!(code(&qppm(&["bench", "--config", path_str(&cfg)])), 2);
    assert_eq!(code(&qppm(&["bench", "--config", "/no/config.json"])), 2);
}

#[test]
fn kernel_check_passes_by_default() {
    let out = qppm(&["kernel-check", "--samples", "20"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    assert!(text.ends_with("kernel-check passed\n"));
}

#[test]
fn kernel_check_detects_perturbation() {
    let out = qppm(&["kernel-check", "--perturb", "--map", "angle_1", "--samples", "5"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).starts_with("FAIL angle_1"));
}

#[test]
fn kernel_check_refuses_wide_registers() {
    assert_eq!(code(&qppm(&["kernel-check", "--qubits", "21"])), 2);
    assert_eq!(code(&qppm(&["kernel-check", "--qubits", "0"])), 2);
    assert_eq!(code(&qppm(&["kernel-check", "--map", "sine_1"])), 2);
}

#[test]
fn flag_errors_are_usage_errors() {
    assert_eq!(code(&qppm(&[])), 2);
    assert_eq!(code(&qppm(&["kernel-check", "--shots", "10", "--exact"])), 2);
    assert_eq!(code(&qppm(&["kernel-check", "--threads", "0"])), 2);
}
