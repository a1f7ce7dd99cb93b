//! Acceptance checks, one line of output per criterion.
//!
//! Runs without a C compiler: loop nests are executed by the interpreter and
//! compared against brute-force oracles written here or in the shared test
//! helpers of the core crate.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polystream_bench::driver::TemplateKind;
use polystream_bench::harness::{CounterValue, DriverOutput, Metadata, RunConfig, RunContext, RunRecord, Validation};
use polystream_bench::machine::{CacheLevel, MachineDesc, Scope};
use polystream_bench::report::{parse_jsonl, render_jsonl};
use polystream_bench::sweep::{plan_sweep, Footprint, SweepOptions};
use polystream_cli::{codegen_script, script_nest};
use polystream_core::codegen::{codegen_map, codegen_set};
use polystream_core::iset::{bindings, enumerate};
use polystream_core::script::parse_set;
use polystream_core::transforms::{interchange, interleave, tile};
use polystream_core::{Map, Set};

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cube_points(lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut v = Vec::new();
    for k in lo..=hi {
        for j in lo..=hi {
            for i in lo..=hi {
                v.push(vec![k, j, i]);
            }
        }
    }
    v
}

fn sorted(mut v: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    v.sort();
    v
}

fn codegen_oracle_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce97);
    let mut points = 0;
    for case_no in 0..500 {
        let case = common::bounded_case(&mut rng, 20_000);
        let set: Set = parse_set(&case.text()).map_err(|e| format!("{}: {e}", case.text()))?;
        let b = bindings(&case.bindings());
        let got: Vec<Vec<i64>> = codegen_set(&set)
            .and_then(|n| n.trace(&b))
            .map_err(|e| format!("case {case_no} {}: {e}", case.text()))?
            .into_iter()
            .map(|(_, a)| a)
            .collect();
        let want = case.oracle();
        points += want.len();
        ensure(got == want, || format!("case {case_no} {} {:?}: mismatch", case.text(), case.bindings()))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("500 sets, {points} points, 0 mismatches, {:.2}s", took.as_secs_f64()))
}

const TILED_SCRIPT: &str = "Domain_run := [n] -> {
    STM_3DS_run[k,j,i] : i <= n and i >= 1 and j<=n and j >= 1 and k<=n and k >= 1;
};
Tiling := [n] -> {
    STM_3DS_run[k,j,i] -> STM_3DS_run[tk,tj,ti,k,j,i]:exists rk,rj,ri:
                    0<=rk<32 and k=tk*32+rk
                and 0<=rj<64 and j=tj*64+rj
                and 0<=ri<16 and i=ti*16+ri;
};
codegen (Tiling * Domain_run);
";

fn tiled_jacobi_structure() -> Result<String, String> {
    let nest = script_nest(TILED_SCRIPT).map_err(|e| e.to_string())?;
    ensure(nest.root.depth() == 6, || format!("depth {}", nest.root.depth()))?;
    let text = codegen_script(TILED_SCRIPT).map_err(|e| e.to_string())?;
    for needle in ["c0 <= floord(n, 32)", "max(1, 32 * c0)", "min(n, 32 * c0 + 31)", "STM_3DS_run(c3, c4, c5);"] {
        ensure(text.contains(needle), || format!("missing `{needle}` in\n{text}"))?;
    }
    let got: Vec<Vec<i64>> = nest
        .trace(&bindings(&[("n", 70)]))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(_, a)| a)
        .collect();
    let count = got.len();
    ensure(sorted(got) == cube_points(1, 70), || "executed multiset differs from the untiled domain".into())?;
    Ok(format!("6-deep nest, {count} points at n=70 match the untiled domain"))
}

fn interchange_check() -> Result<String, String> {
    let dom: Set = parse_set("[n] -> { S[i, j] : 1 <= i < n - 1 and 1 <= j < n - 1 }").map_err(|e| e.to_string())?;
    let m: Map = Map::from(interchange("S", &[1, 0]).map_err(|e| e.to_string())?)
        .restrict_domain(&dom)
        .map_err(|e| e.to_string())?;
    let got: Vec<(i64, i64)> = codegen_map(&m)
        .and_then(|n| n.trace(&bindings(&[("n", 7)])))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(_, a)| (a[0], a[1]))
        .collect();
    let mut want = Vec::new();
    for j in 1..=5 {
        for i in 1..=5 {
            want.push((i, j));
        }
    }
    ensure(got == want, || format!("order {got:?}"))?;
    Ok("25 points of the 5x5 interior visited in (j, i) order".into())
}

fn tiled_points(dims: &[usize], sizes: &[i64], n: i64) -> Result<Vec<Vec<i64>>, String> {
    let dom: Set = parse_set("[n] -> { S[k, j, i] : 1 <= k <= n and 1 <= j <= n and 1 <= i <= n }").map_err(|e| e.to_string())?;
    let m: Map = Map::from(tile("S", 3, dims, sizes).map_err(|e| e.to_string())?)
        .restrict_domain(&dom)
        .map_err(|e| e.to_string())?;
    Ok(codegen_map(&m)
        .and_then(|nest| nest.trace(&bindings(&[("n", n)])))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|(_, a)| a)
        .collect())
}

fn transform_bijection() -> Result<String, String> {
    let mut checked = 0;
    let full = cube_points(1, 70);
    for s in [16i64, 32, 64] {
        for dims in [vec![0, 1, 2], vec![0, 1], vec![2], vec![1]] {
            let sizes = vec![s; dims.len()];
            let got = tiled_points(&dims, &sizes, 70)?;
            ensure(sorted(got) == full, || format!("tile {dims:?} by {s} at n=70 lost or duplicated points"))?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    for _ in 0..12 {
        let n = rng.gen_range(1..=70);
        let dims: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.6)).collect();
        let dims = if dims.is_empty() { vec![rng.gen_range(0..3)] } else { dims };
        let sizes: Vec<i64> = dims.iter().map(|_| [16, 32, 64][rng.gen_range(0..3)]).collect();
        let got = tiled_points(&dims, &sizes, n)?;
        ensure(sorted(got) == cube_points(1, n), || format!("tile {dims:?} by {sizes:?} at n={n}"))?;
        checked += 1;
    }
    let dom: Set = parse_set("[n] -> { S[i] : 0 <= i < n }").map_err(|e| e.to_string())?;
    for f in [2usize, 4] {
        let m = interleave::<i64>("S", 1, f, "n", "h")
            .and_then(|m| m.restrict_domain(&dom))
            .map_err(|e| e.to_string())?;
        let nest = codegen_map(&m).map_err(|e| e.to_string())?;
        for n in (f as i64..=70).step_by(f) {
            let got: Vec<Vec<i64>> = nest
                .trace(&bindings(&[("n", n), ("h", n / f as i64)]))
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|(_, a)| a)
                .collect();
            let want: Vec<Vec<i64>> = (0..n).map(|i| vec![i]).collect();
            ensure(sorted(got) == want, || format!("interleave {f} at n={n}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} tilings and interleavings, no loss or duplication"))
}

fn normalization_soundness() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5011d);
    for k in 0..200 {
        let case = common::random_exists_case(&mut rng);
        let set: Set = parse_set(&case.text).map_err(|e| format!("{}: {e}", case.text))?;
        let norm = set.normalize().map_err(|e| format!("{}: {e}", case.text))?;
        ensure(norm.pieces().iter().all(|p| p.exists.is_empty()), || format!("{} kept existentials", case.text))?;
        let got = enumerate(&norm, &bindings(&[])).map_err(|e| e.to_string())?;
        ensure(got == case.oracle(), || format!("instance {k}: {}", case.text))?;
    }
    Ok("200 eliminable instances keep their point sets".into())
}

fn random_record(rng: &mut ChaCha8Rng, i: usize) -> RunRecord {
    let counters: BTreeMap<String, CounterValue> = [
        ("L1D_MISS".to_string(), CounterValue::Count(rng.gen())),
        ("CA_SHR".to_string(), CounterValue::Unsupported),
    ]
    .into_iter()
    .collect();
    let cfg = RunConfig {
        pattern: ["triad", "jacobi1d", "hexad"][i % 3].into(),
        template: if rng.gen_bool(0.5) { TemplateKind::Unified } else { TemplateKind::Independent },
        transforms: vec![],
        n: rng.gen_range(1..50_000_000),
        threads: rng.gen_range(1..=56),
        ntimes: rng.gen_range(1..=1000),
        counters: counters.keys().cloned().collect(),
        warmup: 1,
    };
    let out = DriverOutput {
        elapsed_seconds: rng.gen_range(1e-7..100.0),
        instances_executed: rng.gen_range(0..1u64 << 45),
        validation: if rng.gen_bool(0.9) { Validation::Pass } else { Validation::Fail },
        threads: cfg.threads,
        counters,
    };
    let ctx = RunContext {
        bytes_per_instance: [16, 24, 48][i % 3],
        working_set_bytes: rng.gen(),
        band: ["L1", "L2", "L3", "DRAM"][rng.gen_range(0..4)].into(),
        toolchain_command: "cc -O3 -fopenmp -std=c99 driver.c -o driver -lm".into(),
        template_hash: format!("{:016x}", rng.gen::<u64>()),
        pattern_hash: format!("{:016x}", rng.gen::<u64>()),
        machine_detected: rng.gen(),
        config_sources: BTreeMap::new(),
    };
    let meta = Metadata::collect(&ctx);
    RunRecord::from_output(cfg, &out, &ctx, meta)
}

fn report_round_trip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e907);
    let records: Vec<RunRecord> = (0..300).map(|i| random_record(&mut rng, i)).collect();
    let text = render_jsonl(&records).map_err(|e| e.to_string())?;
    let back = parse_jsonl(&text).map_err(|e| e.to_string())?;
    let again = render_jsonl(&back).map_err(|e| e.to_string())?;
    ensure(again == text, || "second serialization differs".into())?;
    for r in &back {
        let bytes = r.bytes_per_instance * r.instances_executed;
        ensure(r.bytes_counted == bytes, || format!("bytes {} != {bytes}", r.bytes_counted))?;
        let bw = bytes as f64 / r.elapsed_seconds;
        ensure(r.bandwidth_bytes_per_second == bw, || format!("bandwidth {} != {bw}", r.bandwidth_bytes_per_second))?;
        ensure(r.bandwidth_gbps == bw / 1e9, || "GB/s not bytes/s / 1e9".into())?;
    }
    Ok(format!("{} records, {} bytes, byte-identical", back.len(), text.len()))
}

fn r2_band(n: u64) -> &'static str {
    match 24 * n {
        b if b <= 32 * 1024 => "L1",
        b if b <= 256 * 1024 => "L2",
        b if b <= 35 * 1024 * 1024 => "L3",
        _ => "DRAM",
    }
}

fn sweep_planner() -> Result<String, String> {
    let level = |name: &str, capacity: u64, scope| CacheLevel {
        name: name.into(),
        capacity,
        line_size: 64,
        scope,
    };
    let m = MachineDesc {
        levels: vec![
            level("L1", 32_768, Scope::Core),
            level("L2", 262_144, Scope::Core),
            level("L3", 36_700_160, Scope::Domain),
        ],
        cores_per_domain: 14,
        domains: 2,
        detected: true,
    };
    let plan = plan_sweep(&m, &Footprint::linear(24), &SweepOptions::default()).map_err(|e| e.to_string())?;
    ensure(plan.windows(2).all(|w| w[0].n < w[1].n), || "sizes not increasing".into())?;
    for p in &plan {
        ensure(p.band == r2_band(p.n), || format!("n={} planned in {} but 24n puts it in {}", p.n, p.band, r2_band(p.n)))?;
        ensure(p.working_set_bytes == 24 * p.n, || format!("n={} working set {}", p.n, p.working_set_bytes))?;
        ensure(2 * 24 * p.n >= 32_768 && 24 * p.n <= 4 * 36_700_160, || format!("n={} outside the ladder range", p.n))?;
    }
    let mut counts = Vec::new();
    for b in ["L1", "L2", "L3", "DRAM"] {
        let c = plan.iter().filter(|p| p.band == b).count();
        ensure(c >= 4, || format!("{b} has {c} sizes"))?;
        counts.push(format!("{b}:{c}"));
    }
    Ok(format!("{} sizes ({}), bands match 24n arithmetic", plan.len(), counts.join(" ")))
}

fn main() {
    let checks: [(&str, Check); 7] = [
        ("codegen oracle equivalence", codegen_oracle_equivalence),
        ("tiled Jacobi 3D structure", tiled_jacobi_structure),
        ("interchange order", interchange_check),
        ("transform bijection", transform_bijection),
        ("normalization soundness", normalization_soundness),
        ("report round trip", report_round_trip),
        ("sweep planner", sweep_planner),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
