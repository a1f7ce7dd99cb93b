use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use polystream_bench::harness::Validation;
use polystream_bench::report::parse_jsonl;
use polystream_cli::main_with;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn pattern(name: &str) -> String {
    root().join("patterns").join(name).display().to_string()
}

fn r2() -> String {
    root().join("machines/r2.machine").display().to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("polystream").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn have_compiler() -> bool {
    Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn codegen_prints_the_tiled_nest() {
    let (code, out, _) = run(&["codegen", &pattern("jacobi3d-tiled/run.pset")]);
    assert_eq!(code, 0);
    assert!(out.contains("for (int c3 = max(1, 32 * c0); c3 <= min(n, 32 * c0 + 31); c3 += 1)"));
    assert!(out.trim_end().ends_with("STM_3DS_run(c3, c4, c5);"));
}

#[test]
fn codegen_trace_lists_instances() {
    let (code, out, _) = run(&["codegen", &pattern("jacobi1d/run.pset"), "--trace", "n=5"]);
    assert_eq!(code, 0);
    assert_eq!(out, "J1D_run(1)\nJ1D_run(2)\nJ1D_run(3)\n");
}

#[test]
fn empty_set_prints_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.pset");
    fs::write(&script, "codegen([n] -> { S[i] : 0 <= i < n and i >= n });").unwrap();
    let (code, out, err) = run(&["codegen", script.to_str().unwrap()]);
    assert_eq!((code, out.as_str()), (0, ""), "{err}");
}

#[test]
fn free_existential_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("ex.pset");
    fs::write(&script, "codegen({ S[i] : exists e : i = 2e and 0 <= i < 8 });").unwrap();
    let (code, out, err) = run(&["codegen", script.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("cannot be eliminated"), "{err}");
}

#[test]
fn dry_run_writes_sources_without_compiling() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("w");
    let (code, out, err) = run(&[
        "--toolchain",
        "no-such-compiler",
        "bench",
        &pattern("triad"),
        "--template",
        "independent",
        "--dry-run",
        "--work-dir",
        work.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), work.display().to_string());
    for f in ["driver.c", "kernel.h", "init.c", "run.c", "val.c", "count.c", "driver_common.h"] {
        assert!(work.join(f).is_file(), "{f}");
    }
    assert!(!work.join("driver").exists());
    if have_compiler() {
        let st = Command::new("cc")
            .args(["-O1", "-fopenmp", "-std=c99", "driver.c", "-o", "driver", "-lm"])
            .current_dir(&work)
            .status()
            .unwrap();
        assert!(st.success());
    }
}

#[test]
fn missing_compiler_is_a_build_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "--toolchain",
        "no-such-compiler -O2",
        "build",
        &pattern("triad"),
        "--work-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("build: compiler `no-such-compiler` not found"), "{err}");
}

#[test]
fn sweep_is_deterministic() {
    let a = run(&["--machine", &r2(), "--format", "jsonl", "sweep", &pattern("triad")]);
    let b = run(&["--machine", &r2(), "--format", "jsonl", "sweep", &pattern("triad")]);
    assert_eq!(a, b);
    assert_eq!(a.1.lines().count(), 16);
}

#[test]
fn interleave_sweeps_use_multiples() {
    let (code, out, _) = run(&["--machine", &r2(), "--format", "csv", "sweep", &pattern("triad"), "--transform", "interleave=4"]);
    assert_eq!(code, 0);
    for line in out.lines().skip(1) {
        let n: u64 = line.split(',').next().unwrap().parse().unwrap();
        assert_eq!(n % 4, 0);
    }
}

#[test]
fn inspect_reports_bytes_and_diagnostics() {
    let (code, out, _) = run(&["--machine", &r2(), "inspect", &pattern("hexad")]);
    assert_eq!(code, 0);
    assert!(out.contains("bytes_per_instance 48"));
    assert!(out.contains("no diagnostics"));
}

#[test]
fn bad_pattern_is_stage_tagged() {
    let (code, _, err) = run(&["inspect", "/nonexistent/pattern"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error: pattern: missing file"), "{err}");
}

#[test]
fn run_and_report_round_trip() {
    if !have_compiler() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.jsonl");
    let (code, _, err) = run(&[
        "--machine",
        &r2(),
        "--out",
        report.to_str().unwrap(),
        "run",
        &pattern("triad"),
        "--template",
        "independent",
        "--n",
        "4096,1000",
        "--threads",
        "2",
        "--ntimes",
        "10",
        "--bytes-per-instance",
        "32",
        "--work-dir",
        dir.path().join("w").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let records = parse_jsonl(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(records.iter().map(|r| r.config.n).collect::<Vec<_>>(), vec![1000, 4096]);
    for r in &records {
        assert_eq!(r.validation, Validation::Pass);
        assert_eq!(r.instances_executed, r.config.n * 10 * 2);
        assert_eq!(r.bytes_per_instance, 32);
        assert_eq!(r.metadata.config_sources["bytes_per_instance"], "cli");
        assert_eq!(r.metadata.config_sources["ntimes"], "cli");
        assert_eq!(r.metadata.config_sources["warmup"], "default");
        assert!(r.metadata.machine_detected);
        r.check_invariants().unwrap();
    }
    let csv = dir.path().join("r.csv");
    let (code, _, _) = run(&["--format", "csv", "--out", csv.to_str().unwrap(), "report", report.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 3);
}

#[test]
fn odd_sizes_are_rejected_for_interleave() {
    if !have_compiler() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "run",
        &pattern("triad"),
        "--transform",
        "interleave=2",
        "--n",
        "1001",
        "--ntimes",
        "1",
        "--work-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("multiple of 2"), "{err}");
}

#[test]
fn pattern_transform_applies_unless_overridden() {
    let (code, out, _) = run(&["--machine", &r2(), "--format", "csv", "sweep", &pattern("triad-interleaved")]);
    assert_eq!(code, 0);
    assert!(out.lines().skip(1).all(|l| l.split(',').next().unwrap().parse::<u64>().unwrap() % 2 == 0));
    if !have_compiler() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run(&[
        "run",
        &pattern("triad-interleaved"),
        "--n",
        "2048",
        "--ntimes",
        "2",
        "--work-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let r = &parse_jsonl(&out).unwrap()[0];
    assert_eq!(r.config.transforms.len(), 1);
    assert_eq!(r.config.transforms[0].to_string(), "interleave=2");
    assert_eq!(r.metadata.config_sources["transforms"], "pattern");
}
