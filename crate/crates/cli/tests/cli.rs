use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn smc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smc")).args(args).output().expect("run smc")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = smc(args);
    assert!(
        out.status.success(),
        "smc {} failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn records(text: &str) -> Vec<Value> {
    text.lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

/// Writes a synthetic data set into `dir`, returning the data and schema paths.
fn dataset(dir: &Path, n: usize, d: usize, extra: &[&str]) -> (String, String) {
    let data = dir.join("data.csv");
    let data_s = data.to_str().unwrap().to_string();
    let n_s = n.to_string();
    let d_s = d.to_string();
    let mut args = vec!["generate", "--n", &n_s, "--d", &d_s, "--out", &data_s];
    args.extend_from_slice(extra);
    ok_stdout(&args);
    let schema: PathBuf = data.with_extension("toml");
    (data_s, schema.to_str().unwrap().to_string())
}

#[test]
fn convergence_grid_has_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("conv.toml");
    std::fs::write(&config, "sizes = [100, 1000]\nreps = 10\n[synthetic]\nn = 5000\nd = 4\n").unwrap();
    let recs = records(&ok_stdout(&["convergence", config.to_str().unwrap()]));
    assert_eq!(recs.len(), 20);
    assert!(recs.iter().all(|r| r["status"] == "ok"));
    assert_eq!(recs.iter().filter(|r| r["size"] == 100).count(), 10);
}

#[test]
fn empty_size_list_yields_no_records() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("conv.toml");
    std::fs::write(&config, "sizes = []\n[synthetic]\nn = 100\nd = 2\n").unwrap();
    assert_eq!(ok_stdout(&["convergence", config.to_str().unwrap()]).trim(), "");
}

#[test]
fn glm_on_all_rows_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = dataset(dir.path(), 2000, 3, &["--response", "logistic"]);
    let recs = records(&ok_stdout(&[
        "glm", "--data", &data, "--schema", &schema, "--sizes", "2000", "--reps", "1",
    ]));
    assert_eq!(recs.len(), 1);
    assert!((recs[0]["concordance"].as_f64().unwrap() - 1.0).abs() < 1e-9, "{}", recs[0]);
    assert_eq!(recs[0]["log_mse"], "-inf");
}

#[test]
fn partition_size_saturates_at_minimum() {
    let out = ok_stdout(&["partition-size", "--n", "10000", "--d", "7", "--tolerance", "10"]);
    let rec: Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(rec["i"], 8);
    assert_eq!(rec["satisfied"], true);
}

#[test]
fn csv_output_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = dataset(dir.path(), 1000, 3, &[]);
    let out = ok_stdout(&[
        "concordance", "--data", &data, "--schema", &schema, "--sizes", "50,100", "--reps", "2", "--csv",
    ]);
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "concordance"));
    assert_eq!(reader.records().count(), 4);
}

#[test]
fn generated_schema_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = dataset(dir.path(), 500, 3, &["--categorical"]);
    let meta_text = std::fs::read_to_string(&schema).unwrap();
    assert!(meta_text.contains("\"g\""), "{meta_text}");
    let recs = records(&ok_stdout(&[
        "concordance", "--data", &data, "--schema", &schema, "--sizes", "500",
    ]));
    // the whole file against itself
    assert!((recs[0]["concordance"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(recs[0]["n_total"], 500);
}

#[test]
fn synthetic_curve_stays_within_model_band() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = dataset(dir.path(), 20_000, 5, &["--response", "none"]);
    let recs = records(&ok_stdout(&[
        "concordance", "--data", &data, "--schema", &schema, "--sizes", "200,2000", "--reps", "30",
    ]));
    for size in [200.0, 2000.0] {
        let values: Vec<f64> = recs
            .iter()
            .filter(|r| r["size"].as_f64() == Some(size))
            .map(|r| r["concordance"].as_f64().unwrap())
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let model_sd = (2.0 * (20_000.0 - size) / (5.0 * size * 20_002.0) / values.len() as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * model_sd, "size {size}: mean {mean}, sd {model_sd}");
    }
}

#[test]
fn failures_emit_one_error_line() {
    let out = smc(&["concordance", "--data", "/nonexistent.csv", "--schema", "/nonexistent.toml", "--sizes", "10"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.trim().lines().count(), 1, "{stderr}");
    let rec: Value = serde_json::from_str(stderr.trim()).unwrap();
    assert!(rec["error"].is_string() && rec["message"].is_string());

    let usage = smc(&["concordance"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn head_sampling_differs_from_random_under_drift() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema) = dataset(
        dir.path(),
        20_000,
        3,
        &["--response", "none", "--drift-column", "0", "--drift-magnitude", "4"],
    );
    let recs = records(&ok_stdout(&[
        "concordance", "--data", &data, "--schema", &schema, "--sizes", "500", "--sampling", "head,random",
    ]));
    let gap = |kind: &str| {
        let r = recs.iter().find(|r| r["sampling"] == kind).unwrap();
        (r["concordance"].as_f64().unwrap() - 1.0).abs()
    };
    assert!(gap("head") > 3.0 * gap("random"), "head {} random {}", gap("head"), gap("random"));
}
