use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use orfh_core::io::tensors_to_json;
use orfh_core::measurement::{estimate_shots, group_general_commuting};
use orfh_core::reference::exact_ground_state;
use orfh_core::{build_hubbard, jordan_wigner, CoefficientTensors, Complex64, HubbardParams};
use serde_json::Value;

fn orfh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orfh"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("ORFH_THREADS", "1")
        .output()
        .expect("spawn orfh")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = orfh(dir, args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn analyze_reports_hubbard_norms() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["analyze", "--model", "fh", "--sites", "4"]);
    let row = &csv_rows(&out)[0];
    assert_eq!(row[0], "FH");
    assert_eq!(row[5].parse::<f64>().unwrap(), 24.0);
    assert!((row[6].parse::<f64>().unwrap() - 22f64.sqrt()).abs() < 1e-11);
    assert_eq!(fs::read_to_string(dir.path().join("analyze.csv")).unwrap(), out);
}

#[test]
fn shots_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["shots", "--model", "fh", "--sites", "2", "--eps", "0.001", "--method", "gc", "--format", "json"]);
    let json: Value = serde_json::from_str(&out).unwrap();
    let reported = json[0]["shots"].as_f64().unwrap();

    let sum = jordan_wigner(&build_hubbard(&HubbardParams::half_filled(2)).unwrap()).unwrap();
    let psi = exact_ground_state(&sum, 1).unwrap()[0].statevector.clone().unwrap();
    let expected = estimate_shots(&group_general_commuting(&sum), &sum, &psi, 1e-3).unwrap().shots;
    assert!((reported - expected).abs() <= 1e-9 * expected);
}

#[test]
fn dense_request_beyond_the_guard_is_a_capability_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = CoefficientTensors::zeros(15);
    t.add_one_body(14, 14, Complex64::new(1.0, 0.0));
    let input = dir.path().join("wide.json");
    fs::write(&input, tensors_to_json(&t).unwrap()).unwrap();
    let out = orfh(dir.path(), &["exact", "--method", "dense", "--input", input.to_str().unwrap()]);
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "capability");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn bad_input_is_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = orfh(dir.path(), &["exact", "--input", "/nonexistent/file.json"]);
    assert_eq!(error_json(&out)["error"]["kind"], "io");
    let out = orfh(dir.path(), &["exact", "--model", "both"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
    let out = orfh(dir.path(), &["generate", "--sites", "1"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn fcidump_export_and_ingest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    ok(&gen, &["generate", "--model", "fh", "--sites", "2", "--fcidump"]);
    let ing = dir.path().join("ing");
    let dump = gen.join("instance.fcidump");
    ok(&ing, &["ingest", dump.to_str().unwrap()]);
    let tensors = ing.join("tensors.json");
    let out = ok(&dir.path().join("ed"), &["exact", "--input", tensors.to_str().unwrap()]);
    let e: f64 = csv_rows(&out)[0][1].parse().unwrap();
    assert!((e + 4.531128874149274).abs() < 1e-10);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(ing.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["inputs"][0]["path"], dump.to_str().unwrap());
}

#[test]
fn rotated_instances_refuse_fcidump_export() {
    let dir = tempfile::tempdir().unwrap();
    let out = orfh(dir.path(), &["generate", "--sites", "2", "--fcidump"]);
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn replay_regenerates_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    ok(&first, &["--seed", "3", "dmrg", "--model", "both", "--sites", "3", "--bonds", "4,8", "--sweeps", "4"]);
    let second = dir.path().join("second");
    let manifest = first.join("manifest.json");
    ok(&second, &["replay", manifest.to_str().unwrap()]);
    for name in ["dmrg.csv", "manifest.json"] {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn replay_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    ok(&gen, &["generate", "--model", "fh", "--sites", "2"]);
    let input = gen.join("tensors.json");
    let run = dir.path().join("run");
    ok(&run, &["exact", "--input", input.to_str().unwrap()]);
    fs::write(&input, fs::read_to_string(&input).unwrap().replace("\"constant\": 0.0", "\"constant\": 1.0")).unwrap();
    let out = orfh(&dir.path().join("again"), &["replay", run.join("manifest.json").to_str().unwrap()]);
    assert_eq!(error_json(&out)["error"]["kind"], "input_changed");
}

#[test]
fn vqe_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["vqe", "--sites", "2", "--optimizers", "nft,spsa", "--trials", "2", "--iterations", "3", "--depth", "1"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2 * 2 * 4);
    assert_eq!(rows[0][0], "NFT");
    assert_eq!(rows.last().unwrap()[0], "SPSA");
}

#[test]
fn hf_scan_and_bethe() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["hf", "--model", "fh", "--sites", "2", "--us", "0.5,1"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    let gap = rows[1][5].parse::<f64>().unwrap() - rows[1][6].parse::<f64>().unwrap();
    assert!((gap - 0.031128874149270).abs() < 1e-9);
    let out = ok(&dir.path().join("b"), &["bethe", "--sizes", "2", "--us", "1"]);
    let total: f64 = csv_rows(&out)[0][4].parse().unwrap();
    assert!((total + 4.531128874149274).abs() < 1e-10);
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_orfh"))
        .args(["bethe", "--out"])
        .arg(dir.path())
        .env("ORFH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(error_json(&out)["error"]["kind"], "invalid_input");
}

#[test]
fn group_json_lists_members() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["group", "--model", "fh", "--sites", "2", "--method", "qwc", "--format", "json"]);
    let json: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json[0]["method"], "QWC");
    assert_eq!(json[0]["n_groups"], 5);
}
