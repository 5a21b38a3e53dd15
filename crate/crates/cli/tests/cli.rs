//! End-to-end runs of the `minkcap` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use minkcap_cli::golden::verify_dir;

fn minkcap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minkcap")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn help_and_version_exit_zero_usage_errors_exit_one() {
    assert_eq!(code(&minkcap(&["--help"])), 0);
    assert_eq!(code(&minkcap(&["--version"])), 0);
    assert_eq!(code(&minkcap(&["hit", "sum", "--help"])), 0);
    assert_eq!(code(&minkcap(&[])), 1);
    assert_eq!(code(&minkcap(&["bogus"])), 1);
    assert_eq!(code(&minkcap(&["hit", "sum", "--d", "x"])), 1);
    assert_eq!(code(&minkcap(&["hit", "sum", "--method", "nope"])), 1);
}

#[test]
fn hit_sum_row_schema_and_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.txt", "d=1\n0\n");
    let o = minkcap(&[
        "hit", "sum", "--d", "1", "--p", "0.6", "--q", "0.7", "--m", "1", "--n", "1", "--target", &t, "--method",
        "exact",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,p,q,m,n,target_hash,method,estimate,ci_low,ci_high,trials,seed,elapsed_ms"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 13);
    // P = pq on A = {0}, m = n = 1
    assert!((row[7].parse::<f64>().unwrap() - 0.42).abs() < 1e-12);
}

#[test]
fn config_file_supplies_flags_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.txt", "d=1\n0\n");
    let cfg = write(
        dir.path(),
        "hit.conf",
        &format!("minkcap-config 1\nd = 1\np = 0.6\nq = 0.7\nm = 1\nn = 1\ntarget = {t}\nmethod = exact\n"),
    );
    let o = minkcap(&["hit", "sum", "--config", &cfg, "--no-header"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("1,0.6,0.7,1,1,"));
    let o = minkcap(&[
        "hit",
        "sum",
        "--config",
        &cfg,
        "--no-header",
        "--q",
        "0.55",
        "--p",
        "0.7",
    ]);
    let row = stdout(&o);
    let est: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
    assert!((est - 0.385).abs() < 1e-12);
    let bad = write(dir.path(), "bad.conf", "d = 1\n");
    assert_eq!(code(&minkcap(&["hit", "sum", "--config", &bad])), 1);
}

#[test]
fn experiment_exit_codes_follow_assertions() {
    assert_eq!(code(&minkcap(&["experiment", "run", "pz_diag"])), 0);
    // a band limit below 1 cannot hold
    let o = minkcap(&[
        "experiment",
        "run",
        "fp_cap_ratio",
        "--set",
        "band_limit=0.5",
        "--set",
        "k=2..3",
    ]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("FAIL [FP_cap") && err.contains("d=1 beta=0.5"), "{err}");
    let o = minkcap(&[
        "experiment",
        "run",
        "fp_cap_ratio",
        "--set",
        "band_limit=0.5",
        "--set",
        "k=2..3",
        "--explore",
    ]);
    assert_eq!(code(&o), 0);
    // β ≤ 0 on the main grid is rejected unless exploring
    let args = [
        "experiment",
        "run",
        "main_band",
        "--set",
        "p=0.8",
        "--set",
        "q=0.8",
        "--set",
        "m=1",
        "--set",
        "n_max=1",
        "--trials",
        "100",
    ];
    assert_eq!(code(&minkcap(&args)), 1);
    let mut explore = args.to_vec();
    explore.push("--explore");
    assert_eq!(code(&minkcap(&explore)), 0);
    assert_eq!(code(&minkcap(&["experiment", "run", "no_such"])), 1);
}

#[test]
fn experiment_output_and_plot_files_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let out = dir.path().join(format!("{tag}.csv"));
        let plots = dir.path().join(format!("plots_{tag}"));
        let o = minkcap(&[
            "experiment",
            "run",
            "fp_cap_ratio",
            "--set",
            "k=2..4",
            "--out",
            out.to_str().unwrap(),
            "--plot-dir",
            plots.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&plots)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect();
        files.sort();
        (fs::read(out).unwrap(), files)
    };
    let (a, pa) = run("a");
    let (b, pb) = run("b");
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    // four families × two d × two β
    assert_eq!(pa.len(), 16);
}

#[test]
fn print_config_round_trips() {
    let o = minkcap(&["experiment", "run", "cap_compare", "--seed", "9", "--print-config"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let cfg = minkcap_cli::ExperimentConfig::parse(&text).unwrap();
    assert_eq!(cfg.get_str("seed"), Some("9"));
    assert_eq!(cfg.get_str("experiment"), Some("cap_compare"));
}

#[test]
fn cap_and_fractal_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "pair.txt", "d=1\n0\n4\n");
    let o = minkcap(&["cap", "--target", &t, "--beta", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("value=1.6\n"));
    let o = minkcap(&["cap", "--shape", "segment:-0.25:0.25", "--level", "3", "--beta", "0.5"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&minkcap(&[
            "cap",
            "--shape",
            "point:0.9",
            "--level",
            "2",
            "--beta",
            "1"
        ])),
        1
    );

    let o = minkcap(&[
        "fractal",
        "exact-hit",
        "--d",
        "2",
        "--p",
        "0.5",
        "--k",
        "3",
        "--pair",
        "0 0;-4 3",
    ]);
    assert_eq!(code(&o), 0);
    // the two points split at the root: 6 distinct edges
    assert!(stdout(&o).contains("exact=0.015625\n"));

    let out = dir.path().join("q.txt");
    let args = [
        "fractal",
        "sample",
        "--d",
        "2",
        "--p",
        "0.7",
        "--k",
        "4",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(code(&minkcap(&args)), 0);
    let first = fs::read(&out).unwrap();
    assert_eq!(code(&minkcap(&args)), 0);
    assert_eq!(first, fs::read(&out).unwrap());

    let o = minkcap(&[
        "fractal",
        "chain-test",
        "--d",
        "1",
        "--p",
        "0.6",
        "--k",
        "4",
        "--index",
        "5",
        "--trials",
        "20000",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn randomset_hit_rows() {
    let dir = tempfile::tempdir().unwrap();
    let t = write(dir.path(), "a.txt", "d=3\n0 0 0\n");
    let o = minkcap(&[
        "randomset",
        "hit",
        "--kind",
        "srw",
        "--d",
        "3",
        "--radius",
        "20",
        "--target",
        &t,
        "--x",
        "4,0,0",
        "--x",
        "0,6,0",
        "--trials",
        "300",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].ends_with(",kind,sets,x,hits,reference,ratio,truncation"));
    assert!(lines[1].contains(",srw_range,1,4 0 0,"));
    let o = minkcap(&[
        "randomset",
        "hit",
        "--kind",
        "srw",
        "--d",
        "3",
        "--radius",
        "20",
        "--target",
        &t,
        "--x",
        "4,0",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn golden_directory_verifies() {
    let dir = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"));
    for o in verify_dir(dir).unwrap() {
        assert!(o.passed, "{}: {}", o.name, o.detail);
    }
    let o = minkcap(&["experiment", "verify", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

#[test]
fn tampered_golden_fails_with_exit_two() {
    let src = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden"));
    let dir = tempfile::tempdir().unwrap();
    for name in ["pz_diag.conf", "pz_diag.csv"] {
        fs::copy(src.join(name), dir.path().join(name)).unwrap();
    }
    let csv = dir.path().join("pz_diag.csv");
    let text = fs::read_to_string(&csv).unwrap().replacen("0.6", "0.61", 1);
    fs::write(&csv, text).unwrap();
    let o = minkcap(&["experiment", "verify", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("FAIL pz_diag"));
}
