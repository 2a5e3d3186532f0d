use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_thermocode");

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(BIN).args(args).arg("--config").arg(&path).output().unwrap()
}

fn csv_rows(text: &str) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

const QUBIT: &str =
    r#"{"energies": [0, 1], "betas": [1], "register": {"mode": "explicit", "probabilities": [0.5, 0.5]}}"#;

#[test]
fn encode_minimal_qubit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), QUBIT, &["encode"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    let c: f64 = rows[0]["c_max"].parse().unwrap();
    assert!((c - 0.731_058_578_630_004_9).abs() < 1e-12);
    assert_eq!(rows[0]["conditional"].split('|').count(), 2);
}

#[test]
fn encode_limits() {
    let dir = tempfile::tempdir().unwrap();
    let hot = run(dir.path(), &QUBIT.replace("[1]", "[0]"), &["encode"]);
    let row = &csv_rows(&String::from_utf8(hot.stdout).unwrap())[0];
    assert!(row["holevo"].parse::<f64>().unwrap().abs() < 1e-12);

    let sure = run(dir.path(), &QUBIT.replace("[0.5, 0.5]", "[1, 0]"), &["encode"]);
    let row = &csv_rows(&String::from_utf8(sure.stdout).unwrap())[0];
    assert_eq!(row["h_x"].parse::<f64>().unwrap(), 0.0);
    assert!(row["mutual_information"].parse::<f64>().unwrap().abs() < 1e-12);
}

#[test]
fn encode_json_to_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"dims": [4], "betas": [0.5, 2], "trials": 3, "register": {"mode": "haar"}}"#;
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let out = run(
            dir.path(),
            config,
            &[
                "encode",
                "--format",
                "json",
                "--seed",
                "4",
                "--parallel",
                threads,
                "--out",
                path.to_str().unwrap(),
            ],
        );
        assert!(out.status.success());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let records: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(records.as_array().unwrap().len(), 12);
}

#[test]
fn verify_passes_and_mislabeling_fails() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"dims": [2, 4], "betas": [0, 1], "trials": 2, "register": {"mode": "haar"}}"#;
    let ok = run(dir.path(), config, &["verify"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["instances"], 12);

    let bad = run(dir.path(), &config.replace("\"trials\"", "\"povm_offset\": 1, \"trials\""), &["verify"]);
    assert_eq!(bad.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(report["laws"]["theorem3"]["pass"], false);
    assert!(!report["laws"]["theorem3"]["failing"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("theorem3"));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = run(dir.path(), r#"{"dims": [4], "betas": [], "register": {"mode": "haar"}}"#, &["verify"]);
    assert_eq!(empty.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&empty.stderr).contains("empty"));

    let indivisible = run(
        dir.path(),
        r#"{"dims": [4], "betas": [1], "ns": [3], "register": {"mode": "haar"}}"#,
        &["encode"],
    );
    assert_eq!(indivisible.status.code(), Some(2));

    let quantity = run(dir.path(), QUBIT, &["sweep", "--quantity", "entropy", "--axis", "beta"]);
    assert_eq!(quantity.status.code(), Some(2));

    let missing = run(dir.path(), QUBIT, &["sweep"]);
    assert_eq!(missing.status.code(), Some(2));

    let garbage = run(dir.path(), "{", &["verify"]);
    assert_eq!(garbage.status.code(), Some(2));
}

#[test]
fn beta_sweep_of_c_max() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"energies": [0, 1, 2, 3], "betas": [0, 1, 2, 5, 10, 20], "ns": [2, 4],
        "register": {"mode": "haar"}, "sweep": {"quantity": "c_max", "axis": "beta"}}"#;
    let out = run(dir.path(), config, &["sweep"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 12);
    let values: Vec<f64> = rows[..6].iter().map(|r| r["value"].parse().unwrap()).collect();
    assert_eq!(values[0], 0.5);
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    assert!(values[5] > 0.999_999);
}

#[test]
fn n_sweep_fano_floor_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"dims": [8], "betas": [1], "register": {"mode": "haar"}}"#;
    let out = run(dir.path(), config, &["sweep", "--quantity", "mutual_info", "--axis", "n"]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.iter().map(|r| r["axis"].as_str()).collect::<Vec<_>>(), ["2", "4", "8"]);
    for r in &rows {
        let (lo, v, hi): (f64, f64, f64) =
            (r["bound_lo"].parse().unwrap(), r["value"].parse().unwrap(), r["bound_hi"].parse().unwrap());
        assert!(lo <= v + 1e-9 && v <= hi + 1e-9);
    }
}

#[test]
fn copies_sweep_matches_single_copy_blocking() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"energies": [0, 1], "betas": [1], "ns": [2], "copies": [1, 2],
        "register": {"mode": "explicit", "probabilities": [0.5, 0.5]}}"#;
    let out =
        run(dir.path(), config, &["sweep", "--quantity", "p_succ", "--axis", "copies", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = result["rows"].as_array().unwrap();
    let r0 = 0.731_058_578_630_004_9;
    // one copy: block 0 = {|0⟩}; two copies: block 0 = {|00⟩, |10⟩}, weight r0
    assert!((rows[0]["value"].as_f64().unwrap() - r0).abs() < 1e-12);
    assert!((rows[1]["value"].as_f64().unwrap() - r0).abs() < 1e-12);
}
