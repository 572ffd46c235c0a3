//! End-to-end checks of the binary: exit codes, artifact layout,
//! reproducibility and the write-once discipline.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_channel-stab"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn single_point_resolvent_writes_report_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    run_ok(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "t",
        "resolvent",
        "--nu",
        "1e-3",
        "--k",
        "1",
        "--lambda",
        "0.5",
        "--ineq",
        "a",
        "--n",
        "48",
    ]);
    let base = out_dir.join("t/resolvent");
    assert!(base.join("resol_slip_a.csv").exists());
    assert!(base.join("resol_slip_a.json").exists());
    assert!(base.join("ratios.svg").exists());
    assert!(base.join("effective_config.json").exists());
    let csv = std::fs::read_to_string(base.join("resol_slip_a.csv")).unwrap();
    assert!(csv.starts_with("inequality_id,nu,k,lambda,term_name,ratio,flagged"));
}

#[test]
fn unknown_inequality_exits_64_naming_valid_ids() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "--output-dir",
            tmp.path().to_str().unwrap(),
            "resolvent",
            "--ineq",
            "bogus",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("lambda_a"), "stderr: {err}");
}

#[test]
fn report_on_empty_directory_exits_66_listing_expectations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--output-dir", tmp.path().to_str().unwrap(), "report"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(66));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("campaign.json"), "stderr: {err}");
}

#[test]
fn malformed_config_exits_64() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let out = bin()
        .args([
            "--output-dir",
            tmp.path().to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "simulate",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn sweep_config_produces_all_five_reports_with_exponents() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("plan.json");
    std::fs::write(
        &cfg,
        r#"{
            "nus": [1e-2, 1e-3, 1e-4],
            "ks": [1],
            "lambdas": [0.1, 0.3, 0.5, 0.7, 0.9],
            "n": 48,
            "bank_count": 6
        }"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("out");
    run_ok(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "resolvent",
    ]);
    let base = out_dir.join("sweep/resolvent");
    for id in [
        "resol_slip_a",
        "resol_slip_b",
        "resol_slip_c",
        "resol_lambda_a",
        "resol_lambda_b",
    ] {
        let json = std::fs::read_to_string(base.join(format!("{id}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(
            v["fitted_exponent_vs_nu"].is_number(),
            "{id} missing fitted exponent: {json}"
        );
    }
}

#[test]
fn synthetic_scan_then_fit_recovers_two_thirds() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    run_ok(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "syn",
        "scan",
        "--synthetic",
    ]);
    let stdout = run_ok(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "syn",
        "fit",
    ]);
    assert!(stdout.contains("gamma_hat"), "stdout: {stdout}");
    let fit_json = out_dir.join("syn/fit/fit.json");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit_json).unwrap()).unwrap();
    let gamma = v["gamma_hat"].as_f64().unwrap();
    assert!((gamma - 2.0 / 3.0).abs() <= 0.05, "gamma_hat {gamma}");

    // Campaign outputs exist and feed the aggregate report.
    assert!(out_dir.join("syn/scan/campaign.json").exists());
    assert!(out_dir.join("syn/scan/threshold.svg").exists());
    run_ok(&["--output-dir", out_dir.to_str().unwrap(), "report"]);
    assert!(out_dir.join("report/summary.md").exists());
    assert!(out_dir.join("report/threshold.svg").exists());
}

#[test]
fn evolve_writes_trajectory_and_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    run_ok(&[
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "ev",
        "evolve",
        "--nu",
        "1e-2",
        "--k",
        "1",
        "--n",
        "48",
        "--t",
        "30",
    ]);
    let base = out_dir.join("ev/evolve");
    assert!(base.join("trajectory.csv").exists());
    assert!(base.join("trajectory.cstb").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(base.join("spacetime.json")).unwrap())
            .unwrap();
    assert!(summary["decay_rate"].as_f64().unwrap() > 0.0);
    let bytes = std::fs::read(base.join("trajectory.cstb")).unwrap();
    assert_eq!(&bytes[..4], b"CSTB");
}

#[test]
fn quick_simulation_classifies_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    for out in [&out1, &out2] {
        run_ok(&[
            "--output-dir",
            out.to_str().unwrap(),
            "--campaign",
            "sim",
            "simulate",
            "--nu",
            "1e-2",
            "--amp",
            "1e-8",
            "--t",
            "5",
            "--k-max",
            "2",
            "--n",
            "32",
        ]);
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(
        read(&out1.join("sim/simulate/series.csv")),
        read(&out2.join("sim/simulate/series.csv")),
        "rerun with identical config must be byte-identical"
    );
    assert_eq!(
        read(&out1.join("sim/simulate/summary.json")),
        read(&out2.join("sim/simulate/summary.json"))
    );
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("sim/simulate/summary.json")).unwrap())
            .unwrap();
    assert!(v["outcome"].is_string());
}

#[test]
fn outputs_are_write_once_without_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let args = [
        "--output-dir",
        out_dir.to_str().unwrap(),
        "--campaign",
        "wo",
        "simulate",
        "--nu",
        "1e-2",
        "--amp",
        "1e-8",
        "--t",
        "2",
        "--k-max",
        "2",
        "--n",
        "32",
    ];
    run_ok(&args);
    let second = bin().args(args).output().unwrap();
    assert!(!second.status.success(), "overwrite without --force must fail");
    let mut forced: Vec<&str> = args.to_vec();
    forced.push("--force");
    run_ok(&forced);
}
