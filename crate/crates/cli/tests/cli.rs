//! End-to-end tests of the command-line interface: exit-code contract,
//! golden outputs, the external round trip, and worker-count determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_excursion")
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .output()
        .expect("spawn excursion binary")
}

fn construct_args(dir: &Path, out: &str, extra: &[&str]) -> Vec<String> {
    let mut args: Vec<String> = [
        "construct",
        "--train",
        golden("train.csv").to_str().unwrap(),
        "--outcome-col",
        "y",
        "--test",
        golden("test.csv").to_str().unwrap(),
        "--model",
        "linear",
        "--level",
        "0.5",
        "--tlb",
        "0.85",
        "--bootstraps",
        "60",
        "--seed",
        "2024",
        "--out",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.push(dir.join(out).to_str().unwrap().to_string());
    args.extend(extra.iter().map(|s| s.to_string()));
    args
}

#[test]
fn construct_matches_golden_output_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let args = construct_args(dir.path(), "result.json", &[]);
    let argv: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let output = run(&argv);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let produced = std::fs::read(dir.path().join("result.json")).unwrap();
    let expected = std::fs::read(golden("construct_expected.json")).unwrap();
    assert_eq!(
        produced, expected,
        "construct output drifted from the golden file"
    );

    // The manifest is written alongside the output.
    let manifest: serde_json::Value = serde_json::from_slice(
        &std::fs::read(dir.path().join("result.json.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "construct");
    assert_eq!(manifest["master_seed"], 2024);
    assert!(manifest["duration_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn baselines_matches_golden_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sci.json");
    let output = run(&[
        "baselines",
        "--train",
        golden("train.csv").to_str().unwrap(),
        "--outcome-col",
        "y",
        "--test",
        golden("test.csv").to_str().unwrap(),
        "--model",
        "linear",
        "--level",
        "0.5",
        "--tlb",
        "0.85",
        "--bootstraps",
        "60",
        "--seed",
        "2024",
        "--method",
        "sci",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let produced = std::fs::read(&out).unwrap();
    let expected = std::fs::read(golden("baselines_expected.json")).unwrap();
    assert_eq!(produced, expected);

    // inner is nested in outer on any baselines run.
    let report: serde_json::Value = serde_json::from_slice(&produced).unwrap();
    let inner: Vec<u64> = report["inner"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    let outer: Vec<u64> = report["outer"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(inner.iter().all(|i| outer.contains(i)));
}

#[test]
fn external_round_trip_reproduces_the_construct_result() {
    let dir = tempfile::tempdir().unwrap();
    let args = construct_args(
        dir.path(),
        "result.json",
        &[
            "--dump-point",
            dir.path().join("point.csv").to_str().unwrap(),
            "--dump-samples",
            dir.path().join("samples.csv").to_str().unwrap(),
        ],
    );
    let argv: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    assert!(run(&argv).status.success());

    let out_ext = dir.path().join("external.json");
    let output = run(&[
        "construct-external",
        "--point",
        dir.path().join("point.csv").to_str().unwrap(),
        "--samples",
        dir.path().join("samples.csv").to_str().unwrap(),
        "--level",
        "0.5",
        "--tlb",
        "0.85",
        "--out",
        out_ext.to_str().unwrap(),
    ]);
    assert!(output.status.success());

    let a: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("result.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&std::fs::read(&out_ext).unwrap()).unwrap();
    assert_eq!(a["inner"], b["inner"]);
    assert_eq!(a["outer"], b["outer"]);
    assert_eq!(a["a"], b["a"]);
    assert_eq!(a["e"], b["e"]);
}

#[test]
fn zero_variance_external_matrix_classifies_by_sign() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("point.csv"), "1.5\n-0.5\n2.0\n").unwrap();
    std::fs::write(
        dir.path().join("samples.csv"),
        "1.5,-0.5,2.0\n1.5,-0.5,2.0\n1.5,-0.5,2.0\n",
    )
    .unwrap();
    let out = dir.path().join("result.json");
    let output = run(&[
        "construct-external",
        "--point",
        dir.path().join("point.csv").to_str().unwrap(),
        "--samples",
        dir.path().join("samples.csv").to_str().unwrap(),
        "--level",
        "0.0",
        "--tlb",
        "0.9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success());
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(result["inner"], serde_json::json!([0, 2]));
    assert_eq!(result["outer"], serde_json::json!([0, 2]));
}

#[test]
fn unattainable_target_exits_with_code_three_but_writes_the_result() {
    // Residuals two orders of magnitude beyond the threshold search range:
    // no a in [0.1, 10] can reach the target, for any band.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("point.csv"), "100.0\n100.5\n").unwrap();
    std::fs::write(
        dir.path().join("samples.csv"),
        "0.0,0.5\n1.0,1.5\n0.0,0.5\n1.0,1.5\n",
    )
    .unwrap();
    let out = dir.path().join("flagged.json");
    let output = run(&[
        "construct-external",
        "--point",
        dir.path().join("point.csv").to_str().unwrap(),
        "--samples",
        dir.path().join("samples.csv").to_str().unwrap(),
        "--level",
        "100.0",
        "--tlb",
        "0.999999",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(3));
    let result: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(result["flags"], serde_json::json!(["tlb_unattainable"]));
}

#[test]
fn transposed_samples_matrix_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("point.csv"), "1.0\n2.0\n3.0\n").unwrap();
    // 3 x 2 sample matrix against a length-3 point vector.
    std::fs::write(dir.path().join("samples.csv"), "1,2\n3,4\n5,6\n").unwrap();
    let output = run(&[
        "construct-external",
        "--point",
        dir.path().join("point.csv").to_str().unwrap(),
        "--samples",
        dir.path().join("samples.csv").to_str().unwrap(),
        "--level",
        "0.0",
        "--tlb",
        "0.9",
        "--out",
        dir.path().join("never.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--point/--samples"), "stderr: {stderr}");
    assert!(!dir.path().join("never.json").exists());
}

#[test]
fn missing_outcome_column_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let output = run(&[
        "construct",
        "--train",
        golden("train.csv").to_str().unwrap(),
        "--outcome-col",
        "nope",
        "--test",
        golden("test.csv").to_str().unwrap(),
        "--model",
        "linear",
        "--level",
        "0.0",
        "--tlb",
        "0.9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--train"), "stderr: {stderr}");
    assert!(stderr.contains("nope"), "stderr: {stderr}");
}

#[test]
fn invalid_tlb_is_rejected_before_any_work() {
    let output = run(&[
        "construct",
        "--train",
        golden("train.csv").to_str().unwrap(),
        "--outcome-col",
        "y",
        "--test",
        golden("test.csv").to_str().unwrap(),
        "--model",
        "linear",
        "--level",
        "0.0",
        "--tlb",
        "1.5",
        "--out",
        "/tmp/never.json",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("--tlb"));
}

fn smoke_config_json() -> String {
    serde_json::json!({
        "scenarios": [{
            "name": "smoke",
            "generator": {"kind": "linear", "p": 2, "sigma": 1.0},
            "n": 50,
            "m": 20,
            "c": 0.0,
            "tlb": 0.8,
            "b": 24,
            "replications": 3,
            "objective": "expected",
            "methods": ["cs", "ci", "sci"],
            "master_seed": 99
        }]
    })
    .to_string()
}

#[test]
fn simulate_smoke_config_completes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, smoke_config_json()).unwrap();
    let out_dir = dir.path().join("reports");
    let started = std::time::Instant::now();
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(started.elapsed().as_secs() < 10, "smoke config too slow");
    assert!(out_dir.join("smoke.json").exists());
    assert!(out_dir.join("report.csv").exists());
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4); // header + three methods
}

#[test]
fn aborted_scenario_exits_with_code_four() {
    // A level far above every outcome leaves no test point on the
    // nonnegative side, so the closest-point method fails in every
    // replication and the scenario aborts past the 5% failure budget.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "scenarios": [{
                "name": "doomed",
                "generator": {"kind": "linear", "p": 2, "sigma": 1.0},
                "n": 40,
                "m": 20,
                "c": 1e6,
                "tlb": 0.9,
                "b": 16,
                "replications": 4,
                "objective": "expected",
                "methods": ["corollary"],
                "master_seed": 3
            }]
        })
        .to_string(),
    )
    .unwrap();
    let output = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        dir.path().join("reports").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&output.stderr).contains("aborted"));
}

#[test]
fn worker_count_does_not_change_simulation_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, smoke_config_json()).unwrap();

    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let out_dir = dir.path().join(format!("reports-{workers}"));
        let output = run(&[
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(output.status.success());
        outputs.push(std::fs::read(out_dir.join("report.json")).unwrap());
    }
    assert_eq!(
        outputs[0], outputs[1],
        "reports differ across worker counts"
    );
}
