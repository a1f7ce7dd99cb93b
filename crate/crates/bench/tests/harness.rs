use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use polystream_bench::driver::TemplateKind;
use polystream_bench::harness::{execute, CounterValue, RunConfig, RunContext, Validation};
use polystream_bench::Error;

fn fake_driver(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("driver");
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn cfg() -> RunConfig {
    RunConfig {
        pattern: "triad".into(),
        template: TemplateKind::Unified,
        transforms: vec![],
        n: 1000,
        threads: 2,
        ntimes: 1000,
        counters: vec!["L1D_MISS".into()],
        warmup: 1,
    }
}

fn ctx() -> RunContext {
    RunContext {
        bytes_per_instance: 24,
        working_set_bytes: 24_000,
        band: "L1".into(),
        ..RunContext::default()
    }
}

#[test]
fn thousand_sweeps_count_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let exe = fake_driver(
        dir.path(),
        "echo elapsed_seconds=0.5\necho instances_executed=$(($1 * $3))\necho validation=pass\necho threads=$OMP_NUM_THREADS\necho counter.L1D_MISS=unsupported",
    );
    let r = execute(&exe, &cfg(), &ctx(), 1).unwrap();
    assert_eq!(r.instances_executed, 1_000_000);
    assert_eq!(r.bytes_counted, 24 * 1_000_000);
    assert_eq!(r.bandwidth_bytes_per_second, 48e6);
    assert_eq!(r.bandwidth_gbps, 0.048);
    assert_eq!(r.threads_reported, 2);
    assert_eq!(r.counters["L1D_MISS"], CounterValue::Unsupported);
    assert!(r.valid());
    r.check_invariants().unwrap();
}

#[test]
fn argv_follows_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("argv");
    let exe = fake_driver(
        dir.path(),
        &format!("echo \"$@\" > {}\necho elapsed_seconds=1\necho instances_executed=1\necho validation=pass\necho threads=2", log.display()),
    );
    execute(&exe, &cfg(), &ctx(), 1).unwrap();
    assert_eq!(fs::read_to_string(log).unwrap().trim(), "1000 2 1000 --counters L1D_MISS --warmup 1");
}

#[test]
fn failed_validation_is_kept() {
    let dir = tempfile::tempdir().unwrap();
    let exe = fake_driver(
        dir.path(),
        "echo elapsed_seconds=0.1\necho instances_executed=10\necho validation=fail\necho threads=2\nexit 1",
    );
    let r = execute(&exe, &cfg(), &ctx(), 1).unwrap();
    assert_eq!(r.validation, Validation::Fail);
    assert!(!r.valid());
}

#[test]
fn garbage_is_a_protocol_error() {
    let dir = tempfile::tempdir().unwrap();
    let exe = fake_driver(dir.path(), "echo hello world");
    match execute(&exe, &cfg(), &ctx(), 1) {
        Err(Error::ProtocolParseError { raw, .. }) => assert_eq!(raw, "hello world\n"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn silent_failure_is_a_crash() {
    let dir = tempfile::tempdir().unwrap();
    let exe = fake_driver(dir.path(), "echo boom >&2\nexit 3");
    match execute(&exe, &cfg(), &ctx(), 1) {
        Err(Error::DriverCrashed { stderr, .. }) => assert_eq!(stderr, "boom\n"),
        other => panic!("{other:?}"),
    }
    let exe = fake_driver(dir.path(), "kill -SEGV $$");
    assert!(matches!(execute(&exe, &cfg(), &ctx(), 1), Err(Error::DriverCrashed { .. })));
}

#[test]
fn exit_status_must_agree_with_validation() {
    let dir = tempfile::tempdir().unwrap();
    let exe = fake_driver(
        dir.path(),
        "echo elapsed_seconds=0.1\necho instances_executed=10\necho validation=pass\necho threads=2\nexit 1",
    );
    assert!(matches!(execute(&exe, &cfg(), &ctx(), 1), Err(Error::ProtocolParseError { .. })));
}

#[test]
fn repeats_report_the_spread() {
    let dir = tempfile::tempdir().unwrap();
    let counter = dir.path().join("count");
    fs::write(&counter, "0").unwrap();
    let c = counter.display();
    let exe = fake_driver(
        dir.path(),
        &format!("k=$(($(cat {c}) + 1)); echo $k > {c}\necho elapsed_seconds=$k\necho instances_executed=100\necho validation=pass\necho threads=2"),
    );
    let r = execute(&exe, &cfg(), &ctx(), 3).unwrap();
    let s = r.repeats.clone().unwrap();
    assert_eq!((s.count, s.min, s.median, s.max), (3, 1.0, 2.0, 3.0));
    assert_eq!(r.elapsed_seconds, 2.0);
    r.check_invariants().unwrap();
}

#[test]
fn missing_executable_is_an_io_error() {
    assert!(matches!(
        execute(Path::new("/nonexistent/driver"), &cfg(), &ctx(), 1),
        Err(Error::Io { .. })
    ));
}
