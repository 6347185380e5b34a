//! End-to-end tests of the `railyard` binary: exit-status contract,
//! output files with embedded manifests, and rerun determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use railyard_core::load_operator;
use serde_json::Value;
use tempfile::tempdir;

fn railyard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_railyard"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_bell(dir: &Path) -> PathBuf {
    let path = dir.join("bell.qc");
    fs::write(&path, "qubits 2\nH 0\nCNOT 0 1\n").unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Manifest timestamps are the one part of an output allowed to differ
/// between reruns.
fn strip_timestamps(v: &mut Value) {
    if let Some(m) = v.get_mut("manifest") {
        m.as_object_mut().unwrap().remove("timestamps");
    }
}

#[test]
fn compile_writes_layout_and_operator_dump() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "compile",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--cycle",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let layout = read_json(&dir.path().join("bell.layout.json"));
    assert!(layout["manifest"]["command"].as_str().unwrap().contains("compile"));
    assert_eq!(layout["manifest"]["config"]["model"], "3local");
    assert_eq!(layout["layout"]["topology"], "cycle");
    assert!(layout["layout"]["gadgets"].as_array().unwrap().len() >= 2);

    let dump = fs::read_to_string(dir.path().join("bell.operator.txt")).unwrap();
    let header: Value = serde_json::from_str(dump.lines().next().unwrap()).unwrap();
    assert!(header["manifest"]["timestamps"]["created_unix"].is_u64());
    let (op, header) = load_operator(&dump).expect("dump round-trips");
    assert_eq!(op.dim(), header.dim);
    assert!(op.hermiticity_deviation() <= 1e-12);
}

#[test]
fn missing_circuit_file_exits_two() {
    let dir = tempdir().unwrap();
    let out = railyard(&[
        "compile",
        dir.path().join("absent.qc").to_str().unwrap(),
        "--model",
        "3local",
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
}

#[test]
fn qutrit_without_cnots_warns_and_compiles() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("plain.qc");
    fs::write(&path, "qubits 2\nH 0\nH 1\nS 0\nH 0\n").unwrap();
    let out = railyard(&[
        "compile",
        path.to_str().unwrap(),
        "--model",
        "qutrit",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("warning"), "stderr: {}", stderr(&out));
    let layout = read_json(&dir.path().join("plain.layout.json"));
    assert_eq!(layout["layout"]["topology"], "cycle");
    assert_eq!(layout["layout"]["gadgets"].as_array().unwrap().len(), 0);
}

#[test]
fn exact_protocol_meets_the_success_floor() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "protocol",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--exact",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("p_success"));
    assert!(stdout(&out).contains("conditional_fidelity"));

    let report = read_json(&dir.path().join("bell.protocol.json"));
    let result = &report["result"];
    assert!(result["p_success"].as_f64().unwrap() >= 0.6);
    assert!(result["conditional_fidelity"].as_f64().unwrap() >= 1.0 - 1e-9);
    assert!(result["stderr"].is_null());
    assert_eq!(report["manifest"]["config"]["mode"], "exact-average");
}

#[test]
fn protocol_reruns_are_byte_identical_up_to_timestamps() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = railyard(&[
            "protocol",
            bell.to_str().unwrap(),
            "--model",
            "3local",
            "--samples",
            "1000",
            "--seed",
            "7",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let mut v = read_json(&dir.path().join("bell.protocol.json"));
        strip_timestamps(&mut v);
        runs.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn thread_count_does_not_change_the_result() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let mut runs = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_railyard"))
            .args([
                "protocol",
                bell.to_str().unwrap(),
                "--model",
                "3local",
                "--samples",
                "400",
                "--seed",
                "3",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ])
            .env("RAILYARD_THREADS", threads)
            .output()
            .expect("binary runs");
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let mut v = read_json(&dir.path().join("bell.protocol.json"));
        strip_timestamps(&mut v);
        runs.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn zero_tau_max_is_rejected() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "protocol",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--tau-max",
        "0",
    ]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("tau_max"));
}

#[test]
fn lemma_two_needs_length_divisible_by_four() {
    let out = railyard(&["walk", "--topology", "cycle", "--L", "6", "--lemma", "2"]);
    assert_eq!(code(&out), 2, "stderr: {}", stderr(&out));
    assert!(stderr(&out).contains("divisible"), "stderr: {}", stderr(&out));
}

#[test]
fn line_walk_emits_csv_rows_over_the_time_grid() {
    let dir = tempdir().unwrap();
    let out = railyard(&[
        "walk",
        "--topology",
        "line",
        "--L",
        "16",
        "--lemma",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let csv = fs::read_to_string(dir.path().join("walk_line_L16_lemma1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# manifest "));
    assert_eq!(lines[1], "L,tau,tv,p_success,bound");
    let rows = &lines[2..];
    // Doubling grid 16, 32, …, 131072 plus the 1e4·L cap.
    assert_eq!(rows.len(), 15);
    for row in rows {
        assert!(row.starts_with("16,"));
        assert_eq!(row.split(',').count(), 5);
    }

    let report = read_json(&dir.path().join("walk_line_L16_lemma1.json"));
    assert!(report["report"]["fitted_c"].as_f64().unwrap() > 0.0);
    assert_eq!(report["report"]["envelope_decays"], true);
}

#[test]
fn cycle_walk_report_carries_the_limit_mass_field() {
    let dir = tempdir().unwrap();
    let out = railyard(&[
        "walk",
        "--topology",
        "cycle",
        "--L",
        "8",
        "--lemma",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&dir.path().join("walk_cycle_L8_lemma2.json"));
    assert!(report["report"]["p_limit"].is_f64());
    assert!(report["report"]["p_success"].is_f64());
    assert!(report["report"]["doubled_sites"].is_array());
    assert!(dir.path().join("walk_cycle_L8_lemma2.csv").exists());
}

#[test]
fn walk_reruns_are_byte_identical_up_to_the_manifest_line() {
    let dir = tempdir().unwrap();
    let mut bodies = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = railyard(&[
            "walk",
            "--topology",
            "line",
            "--L",
            "8",
            "--lemma",
            "1",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
        let csv = fs::read_to_string(out_dir.join("walk_line_L8_lemma1.csv")).unwrap();
        let body: Vec<&str> =
            csv.lines().filter(|l| !l.starts_with("# manifest ")).collect();
        bodies.push(body.join("\n"));
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn verify_passes_on_the_three_local_bell_cycle() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "verify",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}\nstderr: {}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    for line in [
        "hermitian: pass",
        "projector terms: pass",
        "frustration-free: pass",
        "invariance: pass",
        "switch restriction: pass",
        "sector floors: pass",
        "interpolation gap: pass",
        "all checks passed",
    ] {
        assert!(text.contains(line), "missing `{line}` in:\n{text}");
    }
    let report = read_json(&dir.path().join("bell.verify.json"));
    assert_eq!(report["passed"], true);
}

#[test]
fn corrupted_operator_dump_fails_the_restriction_check() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "compile",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--cycle",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    // Perturb the diagonal entry at the start configuration, which every
    // embedded basis touches.
    let dump_path = dir.path().join("bell.operator.txt");
    let dump = fs::read_to_string(&dump_path).unwrap();
    let mut lines: Vec<String> = dump.lines().map(str::to_owned).collect();
    let target = lines[1..]
        .iter()
        .position(|l| l.starts_with("0 0 "))
        .expect("dump has the start-configuration diagonal")
        + 1;
    let mut toks: Vec<String> = lines[target].split_whitespace().map(str::to_owned).collect();
    toks[2] = "1.25000000000000000e0".into();
    lines[target] = toks.join(" ");
    let corrupt = dir.path().join("bell.operator.corrupt.txt");
    fs::write(&corrupt, lines.join("\n") + "\n").unwrap();

    let out = railyard(&[
        "verify",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--operator",
        corrupt.to_str().unwrap(),
        "--full-space-max-dim",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "stdout: {}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("operator dump: FAIL"), "stdout: {text}");
    assert!(text.contains("switch restriction: FAIL"), "stdout: {text}");

    // The intact dump passes the same gauntlet.
    let out = railyard(&[
        "verify",
        bell.to_str().unwrap(),
        "--model",
        "3local",
        "--operator",
        dump_path.to_str().unwrap(),
        "--full-space-max-dim",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}", stdout(&out));
    assert!(stdout(&out).contains("operator dump: pass"));
}

#[test]
fn qutrit_verify_reports_the_necklace_restriction() {
    let dir = tempdir().unwrap();
    let bell = write_bell(dir.path());
    let out = railyard(&[
        "verify",
        bell.to_str().unwrap(),
        "--model",
        "qutrit",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stdout: {}\nstderr: {}", stdout(&out), stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("necklace restriction: pass"), "stdout: {text}");
    assert!(text.contains("all checks passed"));
}
