//! End-to-end checks of the `regionvol` binary: flags, CSV schema, exit
//! codes, and process-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regionvol"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("regionvol-test-{}-{name}", std::process::id()));
    p
}

const GRID_ARGS: &[&str] = &[
    "grid", "--d", "8,16", "--s", "1,2", "--p", "2", "--c", "0,0.5", "--n", "2000",
    "--coverage-n", "500", "--seed", "7", "--out", "-",
];

#[test]
fn grid_emits_schema_and_is_deterministic_across_processes() {
    let a = run(GRID_ARGS);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,s,p,c,alpha,n,cell_seed,permuted,c_p,c_inf,log_vol_ratio,log_vol_ratio_per_dim,xbar_p,lambda_max_bound,coverage_p,coverage_inf"
    );
    assert_eq!(lines.count(), 8, "2 d * 2 s * 2 c cells");

    let b = run(GRID_ARGS);
    assert_eq!(a.stdout, b.stdout, "byte-identical CSV across runs");
}

#[test]
fn grid_writes_files_and_reports_skipped_cells() {
    let out_path = tmp_path("grid.csv");
    let out = run(&[
        "grid", "--d", "10,12", "--s", "4", "--p", "2", "--c", "0", "--n", "1000",
        "--coverage-n", "0", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("does not divide"), "skip report on stderr: {err}");
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 2, "header plus the one divisible cell");
    std::fs::remove_file(&out_path).ok();
}

#[test]
fn grid_preset_fills_in_the_value_lists() {
    // Tiny override of everything expensive; the preset supplies the lists.
    let out = run(&[
        "grid", "--preset", "fig1", "--d", "8,16", "--s", "1,2", "--n", "500",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0")), "fig1 is c = 0");
}

#[test]
fn grid_without_preset_requires_the_lists() {
    let out = run(&["grid", "--d", "8", "--s", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--c"));
}

#[test]
fn grid_rejects_bad_correlation_with_exit_1() {
    let out = run(&["grid", "--d", "8", "--s", "1", "--p", "2", "--c", "1.5", "--n", "100"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn quantile_rejects_infinite_p_with_exit_2() {
    let out = run(&["quantile", "--d", "8", "--s", "2", "--p", "inf", "--c", "0", "--n", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c_inf"));
}

#[test]
fn quantile_prints_radii_bound_and_errors() {
    let out = run(&[
        "quantile", "--d", "16", "--s", "2", "--p", "2", "--c", "0.5", "--n", "5000", "--seed",
        "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    for key in ["c_p = ", "c_inf = ", "xbar_p = ", "mc_se_c_p = ", "mc_se_c_inf = "] {
        assert!(text.contains(key), "missing {key:?} in {text}");
    }
}

#[test]
fn volume_desk_checks() {
    let out = run(&["volume", "--d", "2", "--s", "2", "--p", "2", "--radius", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("log_volume = ")
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - std::f64::consts::PI.ln()).abs() < 1e-9);

    let cube = run(&["volume", "--d", "3", "--p", "inf", "--radius", "0.5"]);
    let text = stdout(&cube);
    let value: f64 = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("log_volume = ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(value.abs() < 1e-12, "unit cube has log-volume 0, got {value}");

    let bad = run(&["volume", "--d", "2", "--s", "2", "--p", "2", "--radius", "0"]);
    assert_eq!(bad.status.code(), Some(2), "domain error exits 2");
}

#[test]
fn slope_fits_groups_from_grid_csv() {
    let grid_csv = tmp_path("slope-in.csv");
    let out = run(&[
        "grid", "--d", "16,32,64,128", "--s", "2", "--p", "2", "--c", "0", "--n", "4000",
        "--coverage-n", "0", "--out", grid_csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let out = run(&["slope", "--input", grid_csv.to_str().unwrap(), "--out", "-"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,p,c,n_points,slope,slope_se,r_squared");
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "2");
    assert_eq!(fields[3], "4");
    let slope: f64 = fields[4].parse().unwrap();
    assert!(slope < 0.0, "independent c=0 decay, got slope {slope}");
    assert!(lines.next().is_none());
    std::fs::remove_file(&grid_csv).ok();
}

#[test]
fn slope_rejects_foreign_csv_with_exit_2() {
    let path = tmp_path("bogus.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    let out = run(&["slope", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}

#[test]
fn check_bounds_passes_and_writes_report() {
    let report = tmp_path("bounds-report.txt");
    let out = run(&[
        "check-bounds", "--n", "20000", "--seed", "42", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS gamma-ratio decreasing"));
    assert!(text.contains("PASS concentration domination"));
    assert!(text.contains("PASS sup-norm quantile growth"));
    assert!(!text.contains("FAIL"));
    let written = std::fs::read_to_string(&report).unwrap();
    assert!(written.contains("concentration domination"));
    std::fs::remove_file(&report).ok();
}

#[test]
fn unknown_subcommand_exits_1() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}
