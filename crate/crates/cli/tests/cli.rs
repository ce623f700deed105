use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "cellres = 4\nM = 3\nN = 2,4\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tresca-homog"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn tiny_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("case.cfg");
    fs::write(&path, format!("{TINY}{extra}")).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn help_exits_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn unknown_profile_is_usage_error() {
    assert_eq!(run(&["cell", "--profile", "huge"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "colour = blue\n");
    let out = run(&["cell", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn missing_config_file_is_usage_error() {
    assert_eq!(
        run(&["cell", "--config", "/nonexistent/case.cfg"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn zero_threads_is_usage_error() {
    assert_eq!(run(&["cell", "--threads", "0"]).status.code(), Some(1));
}

#[test]
fn cell_writes_tensor_and_correctors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let out_dir = dir.path().join("cell");
    let out = run(&[
        "cell",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let tensor = fs::read_to_string(out_dir.join("tensor.csv")).unwrap();
    assert!(tensor.starts_with("i,j,k,l,value\n"));
    assert_eq!(tensor.lines().count(), 17);
    let correctors = fs::read_to_string(out_dir.join("correctors.csv")).unwrap();
    assert!(correctors.starts_with("y1,y2"));
    assert_eq!(correctors.lines().count(), 1 + 16);
}

#[test]
fn solve_writes_report_diagnostics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let out_dir = dir.path().join("solve");
    let out = run(&[
        "solve",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--n",
        "2",
        "--snapshot-every",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("N,eps,h,err1,err2"));
    assert!(lines.next().unwrap().starts_with("2,0.50000,0.12500,"));
    let diag = fs::read_to_string(out_dir.join("diagnostics_eps.txt")).unwrap();
    assert_eq!(diag.lines().count(), 3);
    for step in [2, 3] {
        for kind in ["eps", "hom"] {
            let snap = out_dir
                .join("snapshots")
                .join(format!("u_{kind}_{step:05}.csv"));
            let text = fs::read_to_string(&snap).unwrap();
            assert!(text.starts_with("x1,x2,u1,u2\n"));
            assert_eq!(text.lines().count(), 1 + 9 * 9);
        }
    }
    assert!(!out_dir.join("snapshots").join("u_eps_00001.csv").exists());
}

#[test]
fn sweep_exit_code_matches_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let rates = fs::read_to_string(out_dir.join("rates.txt")).unwrap();
    let expected = if rates.contains("verdict = PASS") {
        0
    } else {
        3
    };
    assert_eq!(
        out.status.code(),
        Some(expected),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(out_dir.join("runs.txt").exists());
}

#[test]
fn single_case_sweep_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.cfg");
    fs::write(&path, "cellres = 4\nM = 2\nN = 2\n").unwrap();
    let out_dir = dir.path().join("sweep");
    let out = run(&[
        "sweep",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
