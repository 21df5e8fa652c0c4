//! End-to-end tests of the `bpalm` binary: file formats, determinism,
//! trace contents, and the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bpalm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpalm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, seed: &str, noise: &str) {
    let out = bpalm(
        &[
            "generate", "--m", "12", "--n", "40", "--r", "3", "--noise", noise, "--seed", seed,
            "--out-x", "x.csv", "--out-u", "u.csv", "--out-v", "v.csv",
        ],
        dir,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn generate_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "7", "0.05");
    let first = fs::read(dir.path().join("x.csv")).unwrap();
    generate(dir.path(), "7", "0.05");
    let second = fs::read(dir.path().join("x.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn noiseless_generation_factors_exactly() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "3", "0");
    let read = |name: &str| {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
            .collect();
        rows
    };
    let x = read("x.csv");
    let u = read("u.csv");
    let v = read("v.csv");
    for i in 0..12 {
        for j in 0..40 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += u[i][k] * v[k][j];
            }
            assert_eq!(acc, x[i][j], "X != U V at ({i}, {j})");
        }
    }
}

#[test]
fn binary_format_round_trips_through_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpalm(
        &[
            "generate", "--m", "8", "--n", "20", "--r", "2", "--seed", "5", "--format", "bplm",
            "--out-x", "x.bplm", "--out-u", "u.bplm", "--out-v", "v.bplm",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let bytes = fs::read(dir.path().join("x.bplm")).unwrap();
    assert_eq!(&bytes[..4], b"BPLM");
    assert_eq!(bytes.len(), 4 + 8 + 8 + 8 * 8 * 20);
    let out = bpalm(
        &[
            "solve",
            "x.bplm",
            "--alg",
            "bpalm",
            "--r",
            "2",
            "--max-iters",
            "50",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn solve_writes_monotone_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "1", "0.05");
    let out = bpalm(
        &[
            "solve",
            "x.csv",
            "--alg",
            "bpalm",
            "--r",
            "3",
            "--lambda",
            "10",
            "--eps",
            "1e-9",
            "--max-iters",
            "200",
            "--trace-out",
            "trace.csv",
            "--result-out",
            "result.txt",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,phi,gap_sum,gap_1,gap_2,step_1,step_2,est_1,est_2,oracle_calls,wall_time_s"
    );
    let mut prev = f64::INFINITY;
    let mut rows = 0;
    for line in lines {
        assert!(
            !line.starts_with('#'),
            "no stage markers expected in a plain run"
        );
        let phi: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(phi <= prev + 1e-9, "phi column must be nonincreasing");
        prev = phi;
        rows += 1;
    }
    assert_eq!(rows, 200);

    let summary = fs::read_to_string(dir.path().join("result.txt")).unwrap();
    for key in [
        "algorithm=",
        "lambda_final=",
        "iterations=",
        "phi_final=",
        "f_error=",
        "o_error=",
        "oracle_calls=",
        "wall_time_s=",
    ] {
        assert!(summary.contains(key), "summary is missing {key}");
    }
    assert!(summary.contains("algorithm=bpalm"));
    assert!(summary.contains("iterations=200"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("phi_final="),
        "summary must also go to stdout"
    );
}

#[test]
fn continuation_marks_stages_in_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "2", "0.05");
    let out = bpalm(
        &[
            "solve",
            "x.csv",
            "--alg",
            "abpalm1",
            "--r",
            "3",
            "--continuation",
            "--lambda0",
            "10",
            "--factor",
            "1.5",
            "--stage-iters",
            "40",
            "--max-iters",
            "200",
            "--trace-out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let markers: Vec<&str> = trace
        .lines()
        .filter(|l| l.starts_with("# stage="))
        .collect();
    assert_eq!(markers.len(), 5, "expected 5 stage markers:\n{trace}");
    assert!(markers[0].contains("stage=1"));
    assert!(markers[4].contains("stage=5"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lambda_final=5.0625000000000000e1"));
}

#[test]
fn identical_seeds_give_identical_traces_modulo_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "9", "0.05");
    let strip = |text: &str| -> String {
        // Drop the wall-clock column; everything else must match bitwise.
        text.lines()
            .map(|l| {
                if l.starts_with('#') || l.starts_with('k') {
                    l.to_string()
                } else {
                    let mut fields: Vec<&str> = l.split(',').collect();
                    fields.pop();
                    fields.join(",")
                }
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let args = [
        "solve",
        "x.csv",
        "--alg",
        "abpalm2",
        "--r",
        "3",
        "--seed",
        "4",
        "--max-iters",
        "80",
        "--trace-out",
        "trace.csv",
    ];
    assert!(bpalm(&args, dir.path()).status.success());
    let a = strip(&fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    assert!(bpalm(&args, dir.path()).status.success());
    let b = strip(&fs::read_to_string(dir.path().join("trace.csv")).unwrap());
    assert_eq!(a, b);
}

#[test]
fn check_reports_constants_and_certification() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpalm(&["check"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("L1=2\n"), "{stdout}");
    assert!(stdout.contains("L2=120\n"), "{stdout}");
    assert!(stdout.contains("certified=true"), "{stdout}");

    let out = bpalm(&["check", "--lambda", "1"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("L2=12\n"), "{stdout}");
}

#[test]
fn check_falsifies_an_undersized_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = bpalm(&["check", "--l2-override", "6"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("certified=false"), "{stdout}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // 1: unreadable input, and no partial trace file appears.
    let out = bpalm(
        &[
            "solve",
            "missing.csv",
            "--alg",
            "bpalm",
            "--r",
            "3",
            "--trace-out",
            "trace.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(
        !dir.path().join("trace.csv").exists(),
        "no partial trace on failure"
    );
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // 1: malformed matrix content is an I/O-class failure.
    fs::write(dir.path().join("bad.csv"), "1.0,2.0\n3.0\n").unwrap();
    let out = bpalm(
        &["solve", "bad.csv", "--alg", "bpalm", "--r", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    // 2: configuration errors.
    generate(dir.path(), "1", "0.05");
    let out = bpalm(
        &[
            "solve",
            "x.csv",
            "--alg",
            "bpalm",
            "--r",
            "99",
            "--max-iters",
            "10",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(
        err.contains("rank"),
        "error names the failing invariant: {err}"
    );

    let out = bpalm(
        &[
            "solve", "x.csv", "--alg", "bpalm", "--r", "3", "--lambda", "0",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = bpalm(
        &[
            "solve",
            "x.csv",
            "--alg",
            "bpalm",
            "--r",
            "3",
            "--continuation",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
