//! End-to-end checks of the command-line tool: artifact round trips, exit
//! codes, and byte-identical output across seeds and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rough3")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn write(path: &Path, contents: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, contents).unwrap();
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn lift_check_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    write(&input, "t,x1,x2\n0.0,0.0,0.0\n0.5,1.0,0.0\n1.0,1.0,1.0\n");
    let out = dir.path().join("out");
    let lift = run(&["lift", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(lift.status.success(), "{}", String::from_utf8_lossy(&lift.stderr));
    let stdout = String::from_utf8_lossy(&lift.stdout);
    assert!(stdout.contains("|||X|||="), "missing norm print: {stdout}");

    let check = run(&["check", "--input", out.join("roughpath.csv").to_str().unwrap()]);
    assert!(check.status.success());
    let stdout = String::from_utf8_lossy(&check.stdout);
    assert!(stdout.contains("chen_residual="));
    assert!(stdout.contains("shuffle_residual="));
}

#[test]
fn lift_rejects_single_sample_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    write(&input, "t,x1\n0.0,0.0\n");
    let out = dir.path().join("out");
    let lift = run(&["lift", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(lift.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&lift.stderr);
    assert!(stderr.contains(">= 2 samples"), "stderr: {stderr}");
    assert!(lift.stdout.is_empty());
}

#[test]
fn check_flags_corrupted_file_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    write(&input, "t,x1,x2\n0.0,0.0,0.0\n0.5,1.0,0.0\n1.0,1.0,1.0\n");
    let out = dir.path().join("out");
    assert!(run(&["lift", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    // corrupt one level-2 entry
    let rp_path = out.join("roughpath.csv");
    let text = std::fs::read_to_string(&rp_path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    fields[4] = "9.0".into();
    lines[1] = fields.join(",");
    std::fs::write(&rp_path, lines.join("\n")).unwrap();
    let check = run(&["check", "--input", rp_path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(1));
}

#[test]
fn parse_error_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("path.csv");
    write(&input, "t,x1\n0.0,0.0\nbad,row\n");
    let out = dir.path().join("out");
    let lift = run(&["lift", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(lift.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&lift.stderr);
    assert!(stderr.contains("line 3"), "stderr: {stderr}");
}

#[test]
fn mixed_is_deterministic_across_threads_and_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("m1");
    let out2 = dir.path().join("m2");
    let out3 = dir.path().join("m3");
    let base = [
        "mixed", "--hurst", "0.3", "-d", "1", "-e", "1", "-n", "128", "--seed", "9",
    ];
    let mut with_out1: Vec<&str> = base.to_vec();
    with_out1.extend(["--out", out1.to_str().unwrap(), "--threads", "1"]);
    let mut with_out2: Vec<&str> = base.to_vec();
    with_out2.extend(["--out", out2.to_str().unwrap(), "--threads", "4"]);
    assert!(run(&with_out1).status.success());
    assert!(run(&with_out2).status.success());
    for file in ["b.csv", "w.csv", "arp.csv", "xi.csv"] {
        assert_eq!(read(&out1.join(file)), read(&out2.join(file)), "{file} differs across thread counts");
    }
    let mut with_out3: Vec<&str> = vec![
        "mixed", "--hurst", "0.3", "-d", "1", "-e", "1", "-n", "128", "--seed", "10",
    ];
    with_out3.extend(["--out", out3.to_str().unwrap()]);
    assert!(run(&with_out3).status.success());
    assert_ne!(read(&out1.join("b.csv")), read(&out3.join("b.csv")));
}

#[test]
fn mixed_degenerate_brownian_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    let status = run(&[
        "mixed", "--hurst", "0.3", "-d", "2", "-e", "0", "-n", "64", "--seed", "4", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success());
    assert!(out.join("b.csv").exists());
    assert!(out.join("xi.csv").exists());
    assert!(!out.join("w.csv").exists());
    // the extended path IS the fBm lift: check validates it
    let check = run(&["check", "--input", out.join("xi.csv").to_str().unwrap(), "--alpha", "0.29"]);
    assert!(check.status.success());
}

#[test]
fn rde_solves_and_reports_self_convergence() {
    let dir = tempfile::tempdir().unwrap();
    // a smooth driver: x(t) = sin t on [0, 1]
    let n = 256;
    let mut path_csv = String::from("t,x1\n");
    for k in 0..=n {
        let t = k as f64 / n as f64;
        path_csv.push_str(&format!("{t},{}\n", t.sin()));
    }
    let input = dir.path().join("path.csv");
    write(&input, &path_csv);
    let out = dir.path().join("lift");
    assert!(run(&["lift", "--input", input.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status
        .success());
    let cfg = dir.path().join("rde.cfg");
    write(&cfg, "xi = 1.0\nsigma = linear\ndrift = zero\nalpha = 0.33\nbeta = 0.26\n");
    let rdeout = dir.path().join("rde");
    let result = run(&[
        "rde",
        "--config",
        cfg.to_str().unwrap(),
        "--driver",
        out.join("roughpath.csv").to_str().unwrap(),
        "--out",
        rdeout.to_str().unwrap(),
        "--refine",
        "3",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("self_convergence_order="));
    assert!(rdeout.join("solution.csv").exists());
    // σ(y) = y along sin t: terminal value e^{sin 1}
    let solution = std::fs::read_to_string(rdeout.join("solution.csv")).unwrap();
    let last = solution.lines().last().unwrap();
    let y_final: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    let want = 1.0f64.sin().exp();
    assert!((y_final - want).abs() / want <= 1e-3, "terminal {y_final} vs {want}");
}

#[test]
fn average_writes_results_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("avg.cfg");
    write(
        &cfg,
        "m = 1\nn = 1\nd = 1\ne = 1\nH = 0.3\nT = 0.5\nN = 64\nbeta = 0.26\np = 2\n\
         epsilons = 0.4, 0.1\nsamples = 6\nseed = 3\nsystem = ou\n",
    );
    let out1 = dir.path().join("a1");
    let out2 = dir.path().join("a2");
    let r1 = run(&[
        "average", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap(), "--threads", "1",
    ]);
    assert!(r1.status.success(), "{}", String::from_utf8_lossy(&r1.stderr));
    let r2 = run(&[
        "average", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap(), "--threads", "3",
    ]);
    assert!(r2.status.success());
    assert_eq!(read(&out1.join("results.csv")), read(&out2.join("results.csv")));
    let text = std::fs::read_to_string(out1.join("results.csv")).unwrap();
    assert!(text.starts_with("epsilon,delta,estimate,stderr,samples_used,exploded"));
    assert_eq!(text.lines().count(), 3);
    // unknown config keys are a validation failure
    write(&cfg, "m = 1\nbogus = 2\n");
    let bad = run(&["average", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
}
