//! End-to-end checks of the command-line binary: instance generation, a batch
//! run with CSV output, trace re-evaluation, and the exit-code contract.

use std::path::Path;
use std::process::Command;

fn inccp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inccp"))
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn generate_run_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("instance.json");
    let out = dir.path().join("out");

    let status = inccp()
        .args(["generate-instance", "--seed", "3", "--n-g", "3", "--n-t", "6"])
        .arg("--out")
        .arg(&instance)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(read(&instance).contains("\"n_G\": 3"));

    let status = inccp()
        .arg("run")
        .arg("--instance")
        .arg(&instance)
        .args([
            "--p",
            "1,3",
            "--stepsize-adjusted",
            "0.01",
            "--max-iters",
            "30",
            "--tol",
            "0.05",
            "--record-x",
            "all",
        ])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let summary = read(&out.join("summary.csv"));
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "cell,p_over_m,stepsize_adjusted,W,start,tol,time_s,comp_eval,iter"
    );
    assert_eq!(lines.count(), 2); // one row per cell and tolerance

    let traces: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().into_string().unwrap();
            name.starts_with("trace_").then_some(name)
        })
        .collect();
    assert_eq!(traces.len(), 2);
    let trace_path = out.join(&traces[0]);
    let header = read(&trace_path).lines().next().unwrap().to_string();
    assert!(header.starts_with("k,t_k,cum_evals,wall_s,f_xk,dual_bound"));
    assert!(header.contains("x0")); // recorded iterates

    // re-evaluating recorded iterates must leave every value consistent
    let reeval = dir.path().join("reeval.csv");
    let status = inccp()
        .arg("evaluate-trace")
        .arg("--instance")
        .arg(&instance)
        .arg("--trace")
        .arg(&trace_path)
        .arg("--out")
        .arg(&reeval)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(read(&trace_path), read(&reeval));
}

#[test]
fn config_errors_exit_1() {
    // unknown flag
    let status = inccp().args(["run", "--bogus"]).status().unwrap();
    assert_eq!(status.code(), Some(1));
    // both sources at once
    let status = inccp()
        .args([
            "run",
            "--instance",
            "a.json",
            "--synthetic",
            "3,2,1",
            "--p",
            "1",
            "--stepsize",
            "0.1",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // window below the refusal threshold is a configuration error
    let status = inccp()
        .args([
            "run",
            "--synthetic",
            "6,2,1",
            "--p",
            "1",
            "--stepsize",
            "0.1",
            "--window",
            "2",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_2() {
    // missing instance file surfaces as an I/O failure
    let status = inccp()
        .args([
            "run",
            "--instance",
            "/nonexistent/instance.json",
            "--p",
            "1",
            "--stepsize",
            "0.1",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn synthetic_run_reports_reference() {
    let dir = tempfile::tempdir().unwrap();
    let output = inccp()
        .arg("run")
        .args([
            "--synthetic",
            "5,2,42",
            "--p",
            "5",
            "--stepsize",
            "0.05",
            "--max-iters",
            "50",
            "--tol",
            "0.01",
        ])
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("summary.csv"), "{stdout}");
}
