//! End-to-end runs of the `goldstein` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use goldstein_cli::artifacts::{CertificateFile, RunManifest, TraceFile};
use goldstein_cli::bench::CellResult;
use goldstein_cli::ExitCode;
use goldstein_core::verify::VerifyReport;
use goldstein_core::{InnerKind, PROBLEM_NAMES};

fn goldstein() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_goldstein"));
    cmd.env_remove("GOLDSTEIN_OUT_DIR");
    cmd
}

fn run(cmd: &mut Command) -> (i32, Output) {
    let out = cmd.output().unwrap();
    (out.status.code().unwrap(), out)
}

fn solve(out: &Path, extra: &[&str]) -> i32 {
    let (code, output) = run(goldstein().arg("solve").args(extra).arg("--out").arg(out));
    if code != 0 {
        eprintln!("{}", String::from_utf8_lossy(&output.stderr));
    }
    code
}

const BALL: [&str; 6] = ["--problem", "ball-linear", "--delta", "0.05", "--eps", "0.05"];

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    for inner in ["rand", "bisect"] {
        let out = dir.path().join(inner);
        assert_eq!(solve(&out, &[&BALL[..], &["--inner", inner, "--seed", "3"]].concat()), 0);
        let cert: CertificateFile = serde_json::from_slice(&fs::read(out.join("certificate.json")).unwrap()).unwrap();
        assert_eq!(cert.run.solver.inner.name(), inner);
        let manifest: RunManifest = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.exit_code, 0);
        assert!(manifest.files.iter().any(|f| f == "certificate.json"));

        let (code, output) = run(goldstein().args(["verify", "--json"]).arg(out.join("certificate.json")));
        assert_eq!(code, 0);
        let report: VerifyReport = serde_json::from_slice(&output.stdout).unwrap();
        assert!(report.passed());
        assert!(report.estimate.is_some());
        // Human-readable form as well.
        let (code, output) = run(goldstein().args(["verify", "--no-estimate"]).arg(out.join("certificate.json")));
        assert_eq!(code, 0);
        assert!(String::from_utf8_lossy(&output.stdout).contains("vector_replay"));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for inner in ["rand", "bisect"] {
        let args = [&BALL[..], &["--inner", inner, "--seed", "9", "--dim", "4"]].concat();
        let (a, b) = (dir.path().join(format!("{inner}-a")), dir.path().join(format!("{inner}-b")));
        assert_eq!(solve(&a, &args), 0);
        assert_eq!(solve(&b, &args), 0);
        for file in ["certificate.json", "trace.json"] {
            assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{inner} {file}");
        }
    }
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(
        &config,
        r#"{"problem": {"name": "l1-ball"}, "solver": {"delta": 0.05, "target_eps": 0.05, "inner": "bisect"}}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(solve(&out, &[config.to_str().unwrap(), "--seed", "4"]), 0);
    let trace: TraceFile = serde_json::from_slice(&fs::read(out.join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace.run.problem.name, "l1-ball");
    assert_eq!(trace.run.solver.inner, InnerKind::Bisect);
    assert_eq!(trace.run.solver.seed, 4);

    fs::write(&config, r#"{"problem": {"name": "l1-ball"}, "solver": {"delta": 0.05, "target_eps": 0.05, "bogus": 1}}"#)
        .unwrap();
    assert_eq!(solve(&dir.path().join("bad"), &[config.to_str().unwrap()]), ExitCode::Usage.code());
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from-env");
    let (code, _) = run(goldstein().arg("solve").args(BALL).env("GOLDSTEIN_OUT_DIR", &out));
    assert_eq!(code, 0);
    assert!(out.join("certificate.json").exists());
}

#[test]
fn kkt_mode_certificate_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("kkt");
    assert_eq!(solve(&out, &["--problem", "ball-linear", "--delta", "0.01", "--eps", "0.01", "--kkt"]), 0);
    let cert: CertificateFile = serde_json::from_slice(&fs::read(out.join("certificate.json")).unwrap()).unwrap();
    let c = &cert.certificate;
    let lambda = c.lambda.unwrap();
    assert!(lambda >= 0.0 && lambda <= c.lambda_bound.unwrap());
    let (code, _) = run(goldstein().args(["verify", "--no-estimate"]).arg(out.join("certificate.json")));
    assert_eq!(code, 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let usage = ExitCode::Usage.code();

    let out = dir.path().join("infeasible");
    assert_eq!(solve(&out, &[&BALL[..], &["--x0", "2,0"]].concat()), ExitCode::InfeasibleStart.code());
    assert!(!out.join("certificate.json").exists());
    let trace: TraceFile = serde_json::from_slice(&fs::read(out.join("trace.json")).unwrap()).unwrap();
    assert!(trace.error.is_some());

    let out = dir.path().join("budget");
    let args = [&BALL[..], &["--x0", "-1,0", "--inner-call-cap", "1"]].concat();
    assert_eq!(solve(&out, &args), ExitCode::BudgetExceeded.code());
    assert!(!out.join("certificate.json").exists());

    assert_eq!(solve(&dir.path().join("u1"), &["--problem", "nope", "--delta", "0.05", "--eps", "0.05"]), usage);
    assert_eq!(solve(&dir.path().join("u2"), &["--problem", "ball-linear", "--eps", "0.05"]), usage);
    assert_eq!(solve(&dir.path().join("u3"), &[&BALL[..], &["--x0", "1,2,3"]].concat()), usage);
    assert_eq!(solve(&dir.path().join("u4"), &[&BALL[..], &["--delta", "0.7"]].concat()), usage);
    assert_eq!(solve(&dir.path().join("u5"), &[&BALL[..], &["--kkt", "--sigma=0"]].concat()), usage);
    let (code, _) = run(goldstein().arg("frobnicate"));
    assert_eq!(code, usage);

    let garbage = dir.path().join("garbage.json");
    fs::write(&garbage, "{ not json").unwrap();
    let (code, _) = run(goldstein().arg("verify").arg(&garbage));
    assert_eq!(code, ExitCode::CertificateCorrupt.code());
}

#[test]
fn problems_are_listed() {
    let (code, out) = run(goldstein().arg("problems"));
    assert_eq!(code, 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in PROBLEM_NAMES {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn bench_suite() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    fs::write(
        &suite,
        r#"{
            "problems": [{"name": "ball-linear"}, {"name": "l1-ball"}, {"name": "linf-nonconvex"}],
            "seeds": 20,
            "grid": [{"delta": 0.05, "eps": 0.05}]
        }"#,
    )
    .unwrap();
    let out = dir.path().join("bench");
    let (code, output) = run(goldstein().arg("bench").arg(&suite).arg("--out").arg(&out));
    assert_eq!(code, 0, "{}", String::from_utf8_lossy(&output.stderr));
    for file in ["summary.csv", "table.txt", "cells.json"] {
        assert!(out.join(file).exists(), "{file}");
    }
    let cells: Vec<CellResult> = serde_json::from_slice(&fs::read(out.join("cells.json")).unwrap()).unwrap();
    assert_eq!(cells.len(), 3 * 2 * 20);
    for cell in &cells {
        assert_eq!(cell.outcome, ExitCode::Ok, "{}", cell.id);
        assert!(cell.outer_ratio.unwrap() <= 1.0);
        assert!(out.join("cells").join(format!("{}.json", cell.id)).exists());
        assert!(out.join("series").join(format!("{}.csv", cell.id)).exists());
    }
    for problem in ["ball-linear", "l1-ball", "linf-nonconvex"] {
        let group = |inner| cells.iter().filter(move |c| c.problem.name == problem && c.inner == inner);
        // Seeds only feed the randomized search.
        let calls: Vec<u64> = group(InnerKind::Bisect).map(|c| c.total_oracle_calls).collect();
        assert!(calls.iter().all(|&c| c == calls[0]), "{problem}: {calls:?}");
        assert!(group(InnerKind::Bisect).all(|c| c.invocations_over_budget == 0));
        let over = group(InnerKind::Rand).filter(|c| c.invocations_over_budget > 0).count();
        assert!(over <= 2, "{problem}: {over} of 20 cells over budget");
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 7);
    let table = fs::read_to_string(out.join("table.txt")).unwrap();
    assert!(table.contains("linf-nonconvex"));
}

#[test]
fn exit_code_table_is_stable() {
    let codes: Vec<i32> = ExitCode::ALL.iter().map(|c| c.code()).collect();
    assert_eq!(codes, (0..=8).collect::<Vec<_>>());
    assert!(ExitCode::ALL.iter().all(|c| !c.describe().is_empty()));
}
