//! End-to-end checks of the `resolab` binary: exit codes, file
//! contracts, and the determinism tying `reconstruct` to `sweep`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use resolab::{Potential, TriangularKernelGrid, ZeroSet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_resolab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should launch")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (killed by signal?)")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be UTF-8")
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).expect("test file should be writable");
}

/// Field of a `key=value` token list emitted by the summary lines.
fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no field {key} in: {line}"))
}

#[test]
fn full_round_trip_matches_the_sweep_cell_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("ref.pot"), "# reference: free\n");
    write(&dir.path().join("true.pot"), "piece 0 1 const 0.5 0\n");
    let config = dir.path().join("lab.cfg");
    write(
        &config,
        "potential_ref = ref.pot\npotential_true = true.pot\nR_list = 30\neps_list = 0\nseed = 9\nout_dir = .\n",
    );
    let cfg = config.to_str().unwrap();

    // forward: writes the zero list
    let fwd = run(&["forward", "--config", cfg]);
    assert_eq!(code(&fwd), 0, "forward failed: {}", stderr(&fwd));
    let zeros_path = dir.path().join("zeros_true.txt");
    let zeros_text = fs::read_to_string(&zeros_path).unwrap();
    let zs = ZeroSet::parse(&zeros_text).unwrap();
    assert_eq!(zs.radius, 30.0);
    assert!(!zs.zeros.is_empty());
    assert_eq!(zs.to_text(), zeros_text, "zero file must round-trip");

    // zeros: summary agrees with the parsed file
    let zsum = run(&["zeros", "--config", cfg]);
    assert_eq!(code(&zsum), 0);
    let line = stdout(&zsum);
    assert_eq!(field(&line, "entries"), zs.zeros.len().to_string());
    assert!(line.contains("round_trip=ok"));

    // kernels: both grids exist and parse back
    let ker = run(&["kernels", "--config", cfg]);
    assert_eq!(code(&ker), 0, "kernels failed: {}", stderr(&ker));
    for name in ["kernel_k.txt", "kernel_l.txt"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        TriangularKernelGrid::parse(&text).unwrap();
    }

    // reconstruct: CSV with truth columns, summary with the sup error
    let rec = run(&["reconstruct", "--config", cfg]);
    assert_eq!(code(&rec), 0, "reconstruct failed: {}", stderr(&rec));
    let rec_line = stdout(&rec);
    let sup_reported = field(&rec_line, "sup_error").to_string();
    let csv = fs::read_to_string(dir.path().join("reconstruction.csv")).unwrap();
    assert!(csv.starts_with("# reconstruction R=30 eps=0"));
    assert!(csv.lines().nth(1).unwrap().ends_with("truth_re,truth_im"));

    // sweep: single cell, whose row carries the identical error bytes
    let swp = run(&["sweep", "--config", cfg]);
    assert_eq!(code(&swp), 0, "sweep failed: {}", stderr(&swp));
    let sweep_csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let row = sweep_csv
        .lines()
        .find(|l| l.starts_with("30,0,"))
        .expect("sweep must emit the (30, 0) row");
    let sup_cell = row.split(',').nth(2).unwrap();
    assert_eq!(sup_cell, sup_reported, "shared path must agree bitwise");
    assert!(row.ends_with(",ok"));

    // a second sweep run produces byte-identical output
    let again = run(&["sweep", "--config", cfg]);
    assert_eq!(code(&again), 0);
    assert_eq!(
        fs::read_to_string(dir.path().join("sweep.csv")).unwrap(),
        sweep_csv
    );

    // bound: envelope lines for the configured grid
    let bnd = run(&["bound", "--config", cfg]);
    assert_eq!(code(&bnd), 0);
    let bline = stdout(&bnd);
    assert!(bline.starts_with("R=30 eps=0 envelope="));
    assert!(bline.contains("model_shape="));

    // the potential fixture itself survives a parse round-trip
    let q = Potential::parse(&fs::read_to_string(dir.path().join("true.pot")).unwrap()).unwrap();
    assert_eq!(q.l1_norm(), 0.5);
}

#[test]
fn config_problems_exit_with_code_two() {
    // missing config file
    let out = run(&["forward", "--config", "/definitely/not/here.cfg"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cannot read"));

    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.cfg");

    // malformed config contents
    write(&config, "potential_ref = q.pot\nR_list = 60, 30\n");
    let out = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("ascending"));

    // valid config, missing potential file
    write(&config, "potential_ref = q.pot\nR_list = 30\n");
    let out = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("cannot read"));

    // reconstruct before forward: no zero list yet
    write(&dir.path().join("q.pot"), "piece 0 1 const 1 0\n");
    let out = run(&["reconstruct", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("run `resolab forward` first"));

    // unknown subcommand is a usage error
    let out = run(&["explode", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn numerical_failures_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("q.pot"), "piece 0 1 const 1 0\n");
    let config = dir.path().join("small.cfg");
    write(&config, "potential_ref = q.pot\nR_list = 12\nout_dir = .\n");
    let cfg = config.to_str().unwrap();

    // forward happily writes a disc of radius 12...
    let fwd = run(&["forward", "--config", cfg]);
    assert_eq!(code(&fwd), 0, "forward failed: {}", stderr(&fwd));

    // ...but the pipeline needs R >= 20 and must say so via exit 3
    let out = run(&["reconstruct", "--config", cfg]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("numerical failure"));
    assert!(stderr(&out).contains("radius"));

    // envelopes undefined below R = e
    write(&config, "potential_ref = q.pot\nR_list = 2\nout_dir = .\n");
    let out = run(&["bound", "--config", cfg]);
    assert_eq!(code(&out), 3);
}

#[test]
fn forward_needs_a_radius_and_empty_sweep_is_fine() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("q.pot"), "");
    let config = dir.path().join("empty.cfg");
    write(&config, "potential_ref = q.pot\nout_dir = .\n");
    let cfg = config.to_str().unwrap();

    let out = run(&["forward", "--config", cfg]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("R_list is empty"));

    // empty R_list still produces a header-only report
    let out = run(&["sweep", "--config", cfg]);
    assert_eq!(code(&out), 0, "sweep failed: {}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.ends_with("R,eps,sup_error,envelope,fitted_C,status\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1);
}

#[test]
fn out_flag_overrides_the_configured_directory() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("q.pot"), "piece 0 1 const 0.5 0\n");
    let config = dir.path().join("lab.cfg");
    write(
        &config,
        "potential_ref = q.pot\nR_list = 30\nout_dir = unused\n",
    );
    let other = tempfile::tempdir().unwrap();
    let out = run(&[
        "forward",
        "--config",
        config.to_str().unwrap(),
        "--out",
        other.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "forward failed: {}", stderr(&out));
    assert!(other.path().join("zeros_true.txt").exists());
    assert!(!dir.path().join("unused").exists());
}
