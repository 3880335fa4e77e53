use std::path::Path;
use std::process::{Command, Output};

use fchs::diagnostics::read_csv;

fn fchs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fchs")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn verify_passes() {
    let out = fchs(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
    assert!(!text(&out.stdout).contains("FAIL"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(fchs(&["--help"]).status.code(), Some(0));
    assert_eq!(fchs(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "dim = 2\ns = 0.5\nnu 0.01\n").unwrap();
    let out = fchs(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("line 3"), "{}", text(&out.stderr));
}

#[test]
fn out_of_range_values_are_config_errors() {
    let base = ["run", "--nu", "0.01", "--alpha", "0.1", "--dt", "0.01", "--t_end", "0.1"];
    for (flag, value, rule) in [
        ("--s", "1.0", "s < 1"),
        ("--s", "0.7", "0.75 <= s"),
        ("--n_points", "12", ""),
    ] {
        let mut args = base.to_vec();
        args.extend([flag, value]);
        if flag == "--s" && value == "0.7" {
            args.extend(["--dim", "3"]);
        } else if flag != "--s" {
            args.extend(["--s", "0.6", "--n_points", "7"]);
        }
        let out = fchs(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(text(&out.stderr).contains(rule), "{}", text(&out.stderr));
    }
}

#[test]
fn overflowing_critical_run_exits_with_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = fchs(&[
        "run", "--n_points", "16", "--s", "0.5", "--nu", "0.01", "--alpha", "0", "--dt", "0.1",
        "--t_end", "5", "--scenario", "random_divfree", "--amplitude", "1e6",
        "--out_dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = text(&out.stderr);
    let path = err.split("last checkpoint: ").nth(1).unwrap().trim();
    assert!(Path::new(path).exists(), "{err}");
    let rows = read_csv(std::fs::File::open(out_dir.join("diagnostics.csv")).unwrap()).unwrap();
    assert!(rows[0].is_finite() && rows[0].t == 0.0);
}

#[test]
fn s_sweep_writes_one_csv_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = fchs(&[
        "sweep", "--n_points", "32", "--s", "0.5", "--nu", "0.01", "--alpha", "0.2", "--dt",
        "0.01", "--t_end", "0.5", "--scenario", "random_divfree", "--seed", "4",
        "--out_dir", out_dir, "--s_values", "0.5,0.625,0.75,0.875",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let mut count = 0;
    for s in ["0.5", "0.625", "0.75", "0.875"] {
        let csv = dir.path().join(format!("s{s}_alpha0.2")).join("diagnostics.csv");
        let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
        assert_eq!(rows.len(), 51);
        assert!(rows.windows(2).all(|w| w[1].energy <= w[0].energy + 1e-12));
        count += 1;
    }
    assert_eq!(count, 4);
}

#[test]
fn empty_sweep_and_rejected_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "sweep", "--s", "0.6", "--nu", "0.01", "--alpha", "0.2", "--dt", "0.01", "--t_end", "0.1",
        "--out_dir", dir.path().to_str().unwrap(),
    ];
    let out = fchs(&base);
    assert_eq!(out.status.code(), Some(0));
    assert!(text(&out.stdout).contains("0 runs"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    let mut args = base.to_vec();
    args.extend(["--s_values", "0.6,0.99,1.2"]);
    let out = fchs(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("s < 1"));
}

#[test]
fn convergence_study_meets_nominal_order() {
    for scheme in ["if_euler", "if_rk4"] {
        let out = fchs(&[
            "convergence", "--n_points", "16", "--s", "0.75", "--nu", "0.05", "--alpha", "0.2",
            "--scheme", scheme,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", text(&out.stdout));
        assert!(text(&out.stdout).contains("PASS"));
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "n_points = 16\ns = 0.75\nnu = 0.05\nalpha = 0.2\ndt = 0.05\nt_end = 0.5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let out = fchs(&[
        "run", "--config", cfg.to_str().unwrap(), "--t_end", "0.2",
        "--out_dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let rows = read_csv(std::fs::File::open(out_dir.join("diagnostics.csv")).unwrap()).unwrap();
    assert_eq!(rows.last().unwrap().t, 0.2);
}
