use std::path::Path;
use std::process::{Command, Output};

const RISING: &str = "s=1; fprime=0.5,0.3";

fn hitting(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitting"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn kernels_table_shape_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hitting(
        d,
        &["kernels", "--t", "1", "--x", "-3:3:0.1", "--n", "0,1,2", "--out", "k"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(d, "k/kernels.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x,n,value"));
    assert_eq!(lines.count(), 183);
    assert!(!csv.contains('\r'));

    assert_eq!(code(&hitting(d, &["kernels", "--t", "0", "--out", "k"])), 1);
    assert_eq!(code(&hitting(d, &["kernels", "--n", "13", "--out", "k"])), 1);
    assert_eq!(code(&hitting(d, &["kernels", "--x", "3:-3:0.1", "--out", "k"])), 1);
}

#[test]
fn solution_writes_w_and_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hitting(d, &["solution", "--boundary", "s=1; fprime=0", "--out", "s"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let kappa = read(d, "s/kappa.csv");
    let row = kappa.lines().find(|l| l.starts_with("1.0000000000000000e0,")).unwrap();
    let value: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 0.2419707).abs() < 1e-7);
    assert!(read(d, "s/w.csv").starts_with("t,x,value\n"));

    let out = hitting(
        d,
        &[
            "solution",
            "--boundary",
            "s=1; fprime=0",
            "--gamma",
            "0,1",
            "--out",
            "g",
        ],
    );
    assert_eq!(code(&out), 0);
    assert_ne!(read(d, "g/w.csv"), read(d, "s/w.csv"));

    assert_eq!(code(&hitting(d, &["solution", "--out", "s"])), 1);
    let late = hitting(
        d,
        &[
            "solution",
            "--boundary",
            "s=1; fprime=0",
            "--grid",
            "0:0.99:5,0:1:5",
            "--out",
            "s",
        ],
    );
    assert_eq!(code(&late), 1);
}

#[test]
fn verify_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hitting(d, &["verify", "--boundary", RISING, "--gamma", "1,0.5", "--out", "v"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let residuals: serde_json::Value = serde_json::from_str(&read(d, "v/residuals.json")).unwrap();
    assert_eq!(residuals["passed"], true);
    for key in ["max_abs", "max_rel", "t_at_max", "x_at_max", "nt", "nx", "dt", "dx"] {
        assert!(residuals["reports"]["closed_w"].get(key).is_some(), "{key}");
    }
    let diag: serde_json::Value = serde_json::from_str(&read(d, "v/diagnostics.json")).unwrap();
    assert_eq!(diag["closed_w"]["t0"]["violations"], 0);
    // a violated diagnostic never changes the exit code
    assert!(diag["closed_w_gamma"]["t0"]["violations"].as_u64().unwrap() > 0);

    let small = hitting(
        d,
        &[
            "verify",
            "--boundary",
            RISING,
            "--grid",
            "0:0.5:3,0.05:1:11",
            "--out",
            "v",
        ],
    );
    assert_eq!(code(&small), 1);
}

#[test]
fn verify_rejects_corrupted_field() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let grid = "0:0.5:101,0:2:201";
    assert_eq!(
        code(&hitting(
            d,
            &["transform", "--boundary", RISING, "--grid", grid, "--out", "t"]
        )),
        0
    );
    let out = hitting(
        d,
        &[
            "verify",
            "--boundary",
            RISING,
            "--field",
            "t/transform_w.csv",
            "--out",
            "good",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = read(d, "t/transform_w.csv");
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cols: Vec<String> = lines[5000].split(',').map(String::from).collect();
    cols[2] = format!("{}", cols[2].parse::<f64>().unwrap() + 0.5);
    lines[5000] = cols.join(",");
    std::fs::write(d.join("bad.csv"), lines.join("\n") + "\n").unwrap();

    let out = hitting(
        d,
        &["verify", "--boundary", RISING, "--field", "bad.csv", "--out", "bad"],
    );
    assert_eq!(code(&out), 2);
    let residuals: serde_json::Value = serde_json::from_str(&read(d, "bad/residuals.json")).unwrap();
    assert_eq!(residuals["passed"], false);
    assert!(residuals["reports"]["field"]["max_rel"].as_f64().unwrap() > 1.0);

    std::fs::write(d.join("garbage.csv"), "t,x,re,im\n0,0,nope,0\n").unwrap();
    let out = hitting(
        d,
        &["verify", "--boundary", RISING, "--field", "garbage.csv", "--out", "bad"],
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn transform_outputs_and_sampled_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hitting(
        d,
        &[
            "transform",
            "--boundary",
            RISING,
            "--lambda",
            "1.5",
            "--grid",
            "0:0.9:91,0:3:300",
            "--out",
            "t",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(d, "t/transform.json")).unwrap();
    assert_eq!(summary["nx"], 301);
    assert_eq!(summary["nx_rounded_from"], 300);
    assert!(summary["deviation"].as_f64().unwrap() <= 1e-6);
    assert!(read(d, "t/v2.csv").starts_with("t,x,re,im\n"));

    let out = hitting(d, &["transform", "--boundary", RISING, "--u", "t/v2.csv", "--out", "t"]);
    assert_eq!(code(&out), 1);

    // Phi that vanishes somewhere is a numerical failure
    let mut phi = String::from("t,x,re,im\n");
    for i in 0..5 {
        for j in 0..5 {
            let value = if (i, j) == (2, 2) { 0.0 } else { 1.0 };
            phi.push_str(&format!("{},{},{value},0\n", 0.1 * i as f64, 0.25 * j as f64));
        }
    }
    std::fs::write(d.join("phi.csv"), phi).unwrap();
    let out = hitting(
        d,
        &[
            "transform",
            "--boundary",
            RISING,
            "--u",
            "phi.csv",
            "--phi",
            "phi.csv",
            "--out",
            "z",
        ],
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_reproducible_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "simulate",
        "--boundary",
        "s=1; fprime=0",
        "--paths",
        "20000",
        "--seed",
        "42",
        "--threads",
        "1",
        "--out",
        "a",
    ];
    assert_eq!(code(&hitting(d, &args)), 0);
    let first: Vec<String> = ["fpt_histogram.csv", "comparison.csv", "feynman_kac.json"]
        .iter()
        .map(|f| read(d, &format!("a/{f}")))
        .collect();
    assert_eq!(code(&hitting(d, &args)), 0);
    let second: Vec<String> = ["fpt_histogram.csv", "comparison.csv", "feynman_kac.json"]
        .iter()
        .map(|f| read(d, &format!("a/{f}")))
        .collect();
    assert_eq!(first, second);
    assert!(first[1].starts_with("bin_lo,bin_hi,empirical,kappa,reference,z\n"));
    assert_eq!(first[1].lines().count(), 21);

    let fk: serde_json::Value = serde_json::from_str(&first[2]).unwrap();
    assert_eq!(fk["mean"], 1.0);
    for key in ["mean", "std_error", "n_paths", "n_steps", "seed"] {
        assert!(fk.get(key).is_some(), "{key}");
    }

    let mut many = args.to_vec();
    many[8] = "3";
    many[10] = "b";
    assert_eq!(code(&hitting(d, &many)), 0);
    assert_eq!(read(d, "a/comparison.csv"), read(d, "b/comparison.csv"));

    let zero = hitting(
        d,
        &["simulate", "--boundary", "s=1; fprime=0", "--paths", "0", "--out", "a"],
    );
    assert_eq!(code(&zero), 1);
    let odd = hitting(
        d,
        &[
            "simulate",
            "--boundary",
            "s=1; fprime=0",
            "--paths",
            "3",
            "--antithetic",
            "true",
            "--out",
            "a",
        ],
    );
    assert_eq!(code(&odd), 1);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.json"),
        r#"{"command": "simulate", "boundary": {"s": 1, "fprime": [0.5, 0.3]}, "paths": 2000, "steps": 100, "seed": 5, "out": "cfg"}"#,
    )
    .unwrap();
    assert_eq!(
        code(&hitting(d, &["simulate", "--config", "run.json", "--threads", "1"])),
        0
    );
    let sidecar: serde_json::Value = serde_json::from_str(&read(d, "cfg/run_config.json")).unwrap();
    assert_eq!(sidecar["seed"], 5);
    assert_eq!(sidecar["command"], "simulate");

    assert_eq!(
        code(&hitting(
            d,
            &["simulate", "--config", "run.json", "--seed", "6", "--threads", "1"]
        )),
        0
    );
    let sidecar: serde_json::Value = serde_json::from_str(&read(d, "cfg/run_config.json")).unwrap();
    assert_eq!(sidecar["seed"], 6);

    // the sidecar alone reproduces the run
    let before = read(d, "cfg/comparison.csv");
    std::fs::copy(d.join("cfg/run_config.json"), d.join("again.json")).unwrap();
    assert_eq!(code(&hitting(d, &["simulate", "--config", "again.json"])), 0);
    assert_eq!(read(d, "cfg/comparison.csv"), before);

    assert_eq!(code(&hitting(d, &["kernels", "--config", "run.json"])), 1);
    std::fs::write(d.join("typo.json"), r#"{"pathz": 3}"#).unwrap();
    assert_eq!(code(&hitting(d, &["simulate", "--config", "typo.json"])), 1);
}

#[test]
fn compare_reports_without_asserting() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hitting(
        d,
        &[
            "compare",
            "--boundary",
            RISING,
            "--paths",
            "500",
            "--steps",
            "100",
            "--x",
            "0.5:1.5:0.5",
            "--out",
            "c",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(d, "c/compare.csv");
    assert!(csv.starts_with("x,closed_w,kappa,fk_mean,fk_std_error,z\n"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn usage_errors_and_help() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&hitting(d, &["--help"])), 0);
    assert_eq!(code(&hitting(d, &["--version"])), 0);
    assert_eq!(code(&hitting(d, &[])), 1);
    assert_eq!(code(&hitting(d, &["kernels", "--bogus"])), 1);
    assert_eq!(
        code(&hitting(
            d,
            &["simulate", "--boundary", "s=1; fprime=0", "--threads", "0"]
        )),
        1
    );
    assert_eq!(code(&hitting(d, &["solution", "--boundary", "s=-1; fprime=0"])), 1);
}
