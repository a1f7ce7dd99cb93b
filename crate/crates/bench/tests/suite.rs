use std::path::{Path, PathBuf};

use polystream_bench::driver::{build, instantiate, Base, TemplateKind, Templates, Toolchain};
use polystream_bench::generate::{generate_kernels, Transform};
use polystream_bench::harness::{execute, RunConfig, RunContext, Validation};
use polystream_bench::pattern::{load_pattern, save_pattern, validate_pattern, PatternSpec};

const SUITE: [&str; 10] = [
    "triad",
    "triad-interleaved",
    "triad-raw",
    "triad-nowait",
    "hexad",
    "jacobi1d",
    "jacobi1d-padded",
    "jacobi2d",
    "jacobi3d",
    "jacobi3d-tiled",
];

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn pattern(name: &str) -> PatternSpec {
    load_pattern(&root().join("patterns").join(name)).unwrap()
}

fn have_compiler() -> bool {
    std::process::Command::new(Toolchain::default().compiler)
        .arg("--version")
        .output()
        .is_ok_and(|o| o.status.success())
}

#[test]
fn suite_loads_without_diagnostics() {
    for name in SUITE {
        let p = pattern(name);
        assert_eq!(p.name, name);
        assert!(validate_pattern(&p).is_empty(), "{name}: {:?}", validate_pattern(&p));
    }
}

#[test]
fn suite_survives_save_and_reload() {
    for name in SUITE {
        let p = pattern(name);
        let dir = tempfile::tempdir().unwrap();
        save_pattern(&p, dir.path()).unwrap();
        assert_eq!(load_pattern(dir.path()).unwrap(), p, "{name}");
    }
}

#[test]
fn byte_counts() {
    assert_eq!(pattern("triad").run_bytes_per_instance(), 24);
    assert_eq!(pattern("hexad").run_bytes_per_instance(), 48);
    assert_eq!(pattern("jacobi1d").run_bytes_per_instance(), 16);
    assert_eq!(pattern("jacobi3d").run_bytes_per_instance(), 16);
}

#[test]
fn every_pattern_instantiates_for_both_templates() {
    let templates = Templates::builtin();
    for name in SUITE {
        let p = pattern(name);
        let k = generate_kernels(&p, p.transform.as_slice()).unwrap();
        for kind in [TemplateKind::Unified, TemplateKind::Independent, TemplateKind::Counters(Base::Unified)] {
            let b = instantiate(&p, kind, &k, &templates).unwrap();
            assert!(!b.main_source.contains("@RUN@"));
            assert!(b.fragments.contains_key("count.c"));
        }
    }
}

#[test]
fn unified_triad_matches_the_template_shape() {
    let p = pattern("triad");
    let b = instantiate(&p, TemplateKind::Unified, &generate_kernels(&p, &[]).unwrap(), &Templates::builtin()).unwrap();
    assert!(b.fragments["run.c"].starts_with("#pragma omp parallel for CLAUSE\nfor (int c0 = 0; c0 < n; c0 += 1)")
        || b.fragments["run.c"].starts_with("#pragma omp parallel for CLAUSE\nfor (int c0 = 0; c0 <= n - 1; c0 += 1)"),
        "{}", b.fragments["run.c"]);
    assert!(b.header.contains("#define A_map(i) A[(i)]"));
    assert!(b.header.contains("#define CLAUSE schedule(static)"));
}

#[test]
fn independent_mappings_index_the_thread_copy() {
    let p = pattern("triad");
    let b = instantiate(&p, TemplateKind::Independent, &generate_kernels(&p, &[]).unwrap(), &Templates::builtin()).unwrap();
    assert!(b.header.contains("#define A_map(i) A[t_id][(i)]"), "{}", b.header);
    let p = pattern("jacobi1d-padded");
    let b = instantiate(&p, TemplateKind::Independent, &generate_kernels(&p, &[]).unwrap(), &Templates::builtin()).unwrap();
    assert!(b.header.contains("#define A_map(i) A[t_id * 8][(i)]"), "{}", b.header);
    assert!(b.header.contains("% DRIVER_LINE != 0"));
}

#[test]
fn nowait_uses_the_split_construct() {
    let p = pattern("triad-nowait");
    let b = instantiate(&p, TemplateKind::Unified, &generate_kernels(&p, &[]).unwrap(), &Templates::builtin()).unwrap();
    assert!(b.fragments["run.c"].starts_with("#pragma omp for CLAUSE\n"));
    assert!(b.main_source.contains("#pragma omp parallel\n    {\n#include \"run.c\""));
}

#[test]
fn interleave_binds_the_block_length() {
    let p = pattern("triad");
    let k = generate_kernels(&p, &[Transform::Interleave(2)]).unwrap();
    let b = instantiate(&p, TemplateKind::Unified, &k, &Templates::builtin()).unwrap();
    assert!(b.header.contains("const int h = n / 2;"));
}

#[test]
fn pattern_level_transform() {
    let p = pattern("triad-interleaved");
    assert_eq!(p.transform, Some(Transform::Interleave(2)));
    let k = generate_kernels(&p, p.transform.as_slice()).unwrap();
    let b = instantiate(&p, TemplateKind::Unified, &k, &Templates::builtin()).unwrap();
    assert!(b.fragments["run.c"].contains("Triad_run(c0);\n    Triad_run(c0 + h);"), "{}", b.fragments["run.c"]);
}

fn run(name: &str, kind: TemplateKind, transforms: &[Transform], n: u64) -> Validation {
    let p = pattern(name);
    let transforms = if transforms.is_empty() { p.transform.as_slice() } else { transforms };
    let k = generate_kernels(&p, transforms).unwrap();
    let bundle = instantiate(&p, kind, &k, &Templates::builtin()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let built = build(&bundle, &Toolchain::default(), dir.path()).unwrap_or_else(|e| panic!("{name}: {e}"));
    let cfg = RunConfig {
        pattern: name.into(),
        template: kind,
        transforms: transforms.to_vec(),
        n,
        threads: 2,
        ntimes: 3,
        counters: vec!["L1D_MISS".into()],
        warmup: 1,
    };
    let ctx = RunContext {
        bytes_per_instance: p.run_bytes_per_instance(),
        ..RunContext::default()
    };
    let r = execute(&built.exe, &cfg, &ctx, 1).unwrap_or_else(|e| panic!("{name}: {e}"));
    r.check_invariants().unwrap();
    assert!(r.bandwidth_bytes_per_second > 0.0);
    assert!(r.counters.contains_key("L1D_MISS"));
    r.validation
}

#[test]
fn compiled_drivers_validate() {
    if !have_compiler() {
        eprintln!("no C compiler; skipping");
        return;
    }
    for name in SUITE {
        let n = if name.starts_with("jacobi3d") { 20 } else if name == "jacobi2d" { 64 } else { 4096 };
        for kind in [TemplateKind::Unified, TemplateKind::Independent] {
            assert_eq!(run(name, kind, &[], n), Validation::Pass, "{name} {kind}");
        }
    }
    assert_eq!(run("triad", TemplateKind::Unified, &[Transform::Interleave(2)], 4096), Validation::Pass);
    assert_eq!(run("jacobi3d", TemplateKind::Unified, &["tile=0:8,1:4,2:16".parse().unwrap()], 20), Validation::Pass);
    assert_eq!(run("jacobi2d", TemplateKind::Independent, &[Transform::Interchange(vec![1, 0])], 30), Validation::Pass);
    assert_eq!(run("triad", TemplateKind::Counters(Base::Unified), &[], 4096), Validation::Pass);
}
