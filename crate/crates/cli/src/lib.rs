//! The `polystream` command line.
//!
//! Every subcommand is a function of its arguments, the pattern files and the
//! `--machine` file, so two runs with the same inputs print the same output
//! (records differ only in their timings, timestamp and host).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use polystream_bench::driver::{build, instantiate, DriverBundle, TemplateKind, Templates, Toolchain};
use polystream_bench::generate::{generate_kernels, Transform};
use polystream_bench::harness::{execute, RunConfig, RunContext, RunRecord};
use polystream_bench::machine::{resolve_machine, MachineDesc};
use polystream_bench::pattern::{load_pattern, validate_for_template, PatternSpec, Role, Severity};
use polystream_bench::report::{parse_jsonl, render_report, ReportFormat};
use polystream_bench::sweep::{band, plan_sweep, Footprint, PlannedSize, SweepOptions};
use polystream_core::codegen::{codegen_value, emit_kernel_c, EmitOptions};
use polystream_core::iset::Bindings;
use polystream_core::script::parse_script;
use polystream_core::{Ast, Nest};

#[derive(Debug, Parser)]
#[command(name = "polystream", version, about = "Polyhedral loop generation and memory-bandwidth benchmarks")]
pub struct Cli {
    /// Machine description file; detected from sysfs when omitted.
    #[arg(long, global = true)]
    pub machine: Option<PathBuf>,
    /// Compiler and flags, e.g. "gcc -O3 -fopenmp".
    #[arg(long, global = true)]
    pub toolchain: Option<String>,
    /// Directory holding replacement template files.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    /// Output file (or directory for gen/build); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// jsonl, csv or table.
    #[arg(long, global = true)]
    pub format: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate C loops from a set/map script.
    Codegen {
        script: PathBuf,
        /// Print the executed statement instances for these parameter values
        /// (e.g. n=70) instead of C code.
        #[arg(long, value_delimiter = ',')]
        trace: Option<Vec<String>>,
    },
    /// Summarize a pattern and lint it.
    Inspect {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
    },
    /// Write the driver sources for a pattern.
    Gen {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
    },
    /// Write and compile a driver.
    Build {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
    },
    /// Build a driver and run it once per size.
    Run {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
        #[command(flatten)]
        run: RunOpts,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u64>,
    },
    /// Plan working-set sizes across the cache hierarchy.
    Sweep {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
        #[command(flatten)]
        sweep: SweepOpts,
    },
    /// Merge and convert jsonl reports.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Generate, build, run a sweep and write the report.
    Bench {
        pattern: PathBuf,
        #[command(flatten)]
        variant: Variant,
        #[command(flatten)]
        run: RunOpts,
        #[command(flatten)]
        sweep: SweepOpts,
        /// Stop after writing the driver sources.
        #[arg(long)]
        dry_run: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Variant {
    /// unified, independent, counters-unified or counters-independent.
    #[arg(long, default_value = "unified")]
    pub template: String,
    /// interchange=1,0 | tile=0:32,1:64 | interleave=2
    #[arg(long = "transform")]
    pub transforms: Vec<String>,
    /// Where sources and the executable go.
    #[arg(long)]
    pub work_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunOpts {
    #[arg(long)]
    pub threads: Option<u64>,
    #[arg(long)]
    pub ntimes: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub counters: Option<Vec<String>>,
    #[arg(long)]
    pub bytes_per_instance: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub repeats: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepOpts {
    /// `auto` for a planned ladder, or a comma-separated list of sizes.
    #[arg(long, default_value = "auto")]
    pub sweep: String,
    #[arg(long, default_value_t = 4)]
    pub points_per_level: usize,
    /// Threads the footprint is planned for (bench uses --threads).
    #[arg(long = "plan-threads")]
    pub plan_threads: Option<u64>,
}

pub const DEFAULT_NTIMES: u64 = 1000;
pub const DEFAULT_THREADS: u64 = 1;
pub const DEFAULT_WARMUP: u64 = 1;

/// An error tagged with the pipeline stage that raised it.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for CliError {}

fn stage<E: fmt::Display>(stage: &'static str) -> impl FnOnce(E) -> CliError {
    move |e| CliError {
        stage,
        message: e.to_string(),
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses and runs one command line, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<i32> {
    match &cli.command {
        Command::Codegen { script, trace } => {
            let text = fs::read_to_string(script).map_err(stage("codegen"))?;
            let result = match trace {
                Some(b) => trace_script(&text, &parse_bindings(b)?)?,
                None => codegen_script(&text)?,
            };
            emit(cli, out, &result).map(|_| 0)
        }
        Command::Inspect { pattern, variant } => {
            let p = load(pattern)?;
            let kind = template(variant)?;
            let m = machine(cli)?;
            emit(cli, out, &inspect(&p, kind, &m)).map(|_| 0)
        }
        Command::Gen { pattern, variant } => {
            let (p, kind, transforms) = prepare(pattern, variant)?;
            let bundle = bundle(cli, &p, kind, &transforms)?;
            let dir = cli.out.clone().unwrap_or_else(|| work_dir(variant, &p, kind, &transforms));
            bundle.write_to(&dir).map_err(stage("gen"))?;
            writeln!(out, "{}", dir.display()).map_err(stage("output"))?;
            Ok(0)
        }
        Command::Build { pattern, variant } => {
            let (p, kind, transforms) = prepare(pattern, variant)?;
            let bundle = bundle(cli, &p, kind, &transforms)?;
            let dir = cli.out.clone().unwrap_or_else(|| work_dir(variant, &p, kind, &transforms));
            let built = build(&bundle, &toolchain(cli)?, &dir).map_err(stage("build"))?;
            writeln!(out, "{}\n{}", built.exe.display(), built.command_line).map_err(stage("output"))?;
            Ok(0)
        }
        Command::Run { pattern, variant, run, n } => {
            let sizes: Vec<PlannedSize> = {
                let (p, kind, _) = prepare(pattern, variant)?;
                let m = machine(cli)?;
                let fp = Footprint::of_pattern(&p, kind.independent());
                let t = run.threads.unwrap_or(DEFAULT_THREADS);
                n.iter()
                    .map(|&n| PlannedSize {
                        n,
                        band: band(&m, &fp, n, t),
                        working_set_bytes: fp.total(n, t),
                    })
                    .collect()
            };
            pipeline(cli, pattern, variant, run, Some(sizes), false, out, err)
        }
        Command::Sweep { pattern, variant, sweep } => {
            let (p, kind, transforms) = prepare(pattern, variant)?;
            let m = machine(cli)?;
            let t = sweep.plan_threads.unwrap_or(DEFAULT_THREADS);
            let plan = plan(&p, kind, &transforms, &m, sweep, t)?;
            let text = match format(cli, ReportFormat::Table)? {
                ReportFormat::Jsonl => plan.iter().map(|s| serde_json::to_string(s).map(|l| l + "\n")).collect::<Result<String, _>>().map_err(stage("sweep"))?,
                ReportFormat::Csv => {
                    let mut s = String::from("n,band,working_set_bytes\n");
                    for p in &plan {
                        s.push_str(&format!("{},{},{}\n", p.n, p.band, p.working_set_bytes));
                    }
                    s
                }
                ReportFormat::Table => plan_table(&plan),
            };
            emit(cli, out, &text).map(|_| 0)
        }
        Command::Report { inputs } => {
            let mut records = Vec::new();
            for path in inputs {
                let text = fs::read_to_string(path).map_err(stage("report"))?;
                records.extend(parse_jsonl(&text).map_err(|e| CliError {
                    stage: "report",
                    message: format!("{}: {e}", path.display()),
                })?);
            }
            let text = render_report(&records, format(cli, ReportFormat::Table)?).map_err(stage("report"))?;
            emit(cli, out, &text).map(|_| 0)
        }
        Command::Bench { pattern, variant, run, sweep, dry_run } => {
            let sizes = if *dry_run {
                None
            } else {
                let (p, kind, transforms) = prepare(pattern, variant)?;
                let m = machine(cli)?;
                Some(plan(&p, kind, &transforms, &m, sweep, run.threads.unwrap_or(DEFAULT_THREADS))?)
            };
            pipeline(cli, pattern, variant, run, sizes, *dry_run, out, err)
        }
    }
}

fn emit(cli: &Cli, out: &mut dyn Write, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError {
            stage: "output",
            message: format!("{}: {e}", path.display()),
        }),
        None => out.write_all(text.as_bytes()).map_err(stage("output")),
    }
}

fn format(cli: &Cli, default: ReportFormat) -> CliResult<ReportFormat> {
    cli.format.as_deref().map_or(Ok(default), |f| f.parse().map_err(stage("arguments")))
}

fn machine(cli: &Cli) -> CliResult<MachineDesc> {
    resolve_machine(cli.machine.as_deref()).map_err(stage("machine"))
}

fn toolchain(cli: &Cli) -> CliResult<Toolchain> {
    cli.toolchain.as_deref().map_or(Ok(Toolchain::default()), |t| Toolchain::parse(t).map_err(stage("arguments")))
}

fn load(dir: &Path) -> CliResult<PatternSpec> {
    load_pattern(dir).map_err(stage("pattern"))
}

fn template(v: &Variant) -> CliResult<TemplateKind> {
    v.template.parse().map_err(stage("arguments"))
}

fn prepare(dir: &Path, v: &Variant) -> CliResult<(PatternSpec, TemplateKind, Vec<Transform>)> {
    let p = load(dir)?;
    let kind = template(v)?;
    let mut transforms = v
        .transforms
        .iter()
        .map(|t| t.parse::<Transform>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(stage("arguments"))?;
    if transforms.is_empty() {
        transforms.extend(p.transform.clone());
    }
    Ok((p, kind, transforms))
}

fn bundle(cli: &Cli, p: &PatternSpec, kind: TemplateKind, transforms: &[Transform]) -> CliResult<DriverBundle> {
    let kernels = generate_kernels(p, transforms).map_err(stage("generate"))?;
    let templates = Templates::resolve(cli.templates.as_deref()).map_err(stage("templates"))?;
    instantiate(p, kind, &kernels, &templates).map_err(stage("instantiate"))
}

fn work_dir(v: &Variant, p: &PatternSpec, kind: TemplateKind, transforms: &[Transform]) -> PathBuf {
    if let Some(d) = &v.work_dir {
        return d.clone();
    }
    let mut name = format!("{}-{kind}", p.name);
    for t in transforms {
        name.push('-');
        name.extend(t.to_string().chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }));
    }
    Path::new("polystream-work").join(name)
}

fn multiple_of(transforms: &[Transform]) -> u64 {
    transforms.iter().map(Transform::size_multiple).fold(1, |a, b| a * b / gcd(a, b))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn plan(
    p: &PatternSpec,
    kind: TemplateKind,
    transforms: &[Transform],
    m: &MachineDesc,
    opts: &SweepOpts,
    threads: u64,
) -> CliResult<Vec<PlannedSize>> {
    let explicit = if opts.sweep == "auto" {
        None
    } else {
        Some(
            opts.sweep
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError {
                    stage: "arguments",
                    message: format!("--sweep takes `auto` or a list of sizes, not `{}`", opts.sweep),
                })?,
        )
    };
    let sweep = SweepOptions {
        threads,
        points_per_level: opts.points_per_level,
        explicit,
        multiple_of: multiple_of(transforms),
        min_n: p.min_n,
    };
    plan_sweep(m, &Footprint::of_pattern(p, kind.independent()), &sweep).map_err(stage("sweep"))
}

fn plan_table(plan: &[PlannedSize]) -> String {
    let mut s = format!("{:>12}  {:<5}  {:>16}\n", "n", "band", "working set");
    for p in plan {
        s.push_str(&format!("{:>12}  {:<5}  {:>16}\n", p.n, p.band, p.working_set_bytes));
    }
    s
}

/// Settings with their source: the command line, the pattern, or defaults.
fn effective(run: &RunOpts, variant: &Variant, p: &PatternSpec) -> (u64, u64, u64, Vec<String>, BTreeMap<String, String>) {
    let mut sources = BTreeMap::new();
    let mut pick = |key: &str, cli: Option<u64>, default: u64| {
        sources.insert(key.to_string(), if cli.is_some() { "cli" } else { "default" }.to_string());
        cli.unwrap_or(default)
    };
    let threads = pick("threads", run.threads, DEFAULT_THREADS);
    let ntimes = pick("ntimes", run.ntimes, DEFAULT_NTIMES);
    let warmup = pick("warmup", run.warmup, DEFAULT_WARMUP);
    let (counters, src) = match (&run.counters, p.counters.is_empty()) {
        (Some(c), _) => (c.clone(), "cli"),
        (None, false) => (p.counters.clone(), "pattern"),
        (None, true) => (Vec::new(), "default"),
    };
    sources.insert("counters".into(), src.into());
    let bytes_src = match (run.bytes_per_instance, p.bytes_per_instance) {
        (Some(_), _) => "cli",
        (None, Some(_)) => "pattern",
        (None, None) => "default",
    };
    sources.insert("bytes_per_instance".into(), bytes_src.into());
    let transform_src = match (variant.transforms.is_empty(), &p.transform) {
        (false, _) => "cli",
        (true, Some(_)) => "pattern",
        (true, None) => "default",
    };
    sources.insert("transforms".into(), transform_src.into());
    (threads, ntimes, warmup, counters, sources)
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    cli: &Cli,
    pattern: &Path,
    variant: &Variant,
    run: &RunOpts,
    sizes: Option<Vec<PlannedSize>>,
    dry_run: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<i32> {
    let (p, kind, transforms) = prepare(pattern, variant)?;
    let bundle = bundle(cli, &p, kind, &transforms)?;
    let dir = work_dir(variant, &p, kind, &transforms);
    if dry_run {
        bundle.write_to(&dir).map_err(stage("gen"))?;
        writeln!(out, "{}", dir.display()).map_err(stage("output"))?;
        return Ok(0);
    }
    let m = machine(cli)?;
    let tc = toolchain(cli)?;
    let built = build(&bundle, &tc, &dir).map_err(stage("build"))?;
    let (threads, ntimes, warmup, counters, config_sources) = effective(run, variant, &p);
    let bytes_per_instance = run.bytes_per_instance.unwrap_or_else(|| p.run_bytes_per_instance());
    let mut records: Vec<RunRecord> = Vec::new();
    for size in sizes.unwrap_or_default() {
        let cfg = RunConfig {
            pattern: p.name.clone(),
            template: kind,
            transforms: transforms.clone(),
            n: size.n,
            threads,
            ntimes,
            counters: counters.clone(),
            warmup,
        };
        cfg.check(p.min_n).map_err(stage("run"))?;
        let ctx = RunContext {
            bytes_per_instance,
            working_set_bytes: size.working_set_bytes,
            band: size.band.clone(),
            toolchain_command: built.command_line.clone(),
            template_hash: bundle.template_hash.clone(),
            pattern_hash: p.hash(),
            machine_detected: m.detected,
            config_sources: config_sources.clone(),
        };
        let r = execute(&built.exe, &cfg, &ctx, run.repeats).map_err(stage("run"))?;
        let _ = writeln!(
            err,
            "{} n={} {} {:.3} GB/s validation={}",
            p.name, r.config.n, r.band, r.bandwidth_gbps, r.validation
        );
        records.push(r);
    }
    let text = render_report(&records, format(cli, ReportFormat::Jsonl)?).map_err(stage("report"))?;
    emit(cli, out, &text)?;
    Ok(if records.iter().all(RunRecord::valid) { 0 } else { 1 })
}

fn parse_bindings(pairs: &[String]) -> CliResult<Bindings<i64>> {
    pairs
        .iter()
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or(())?;
            Ok((k.trim().to_string(), v.trim().parse::<i64>().map_err(|_| ())?))
        })
        .collect::<Result<_, ()>>()
        .map_err(|_| CliError {
            stage: "arguments",
            message: "--trace takes name=value pairs".into(),
        })
}

/// The loop nest a script's final `codegen` evaluates to.
pub fn script_nest(text: &str) -> CliResult<Nest> {
    if text.trim().is_empty() {
        return Ok(Nest {
            root: Ast::empty(),
            params: Vec::new(),
        });
    }
    let script = parse_script::<i64>(text).map_err(stage("parse"))?;
    let value = script.evaluate().map_err(stage("normalize"))?;
    codegen_value(&value).map_err(stage("codegen"))
}

/// C text for a script; empty for an empty script or an empty set.
pub fn codegen_script(text: &str) -> CliResult<String> {
    let nest = script_nest(text)?;
    emit_kernel_c(&nest, &nest.statements(), &EmitOptions::default()).map_err(stage("emit"))
}

/// One `Name(args)` line per executed statement instance.
pub fn trace_script(text: &str, bindings: &Bindings<i64>) -> CliResult<String> {
    let nest = script_nest(text)?;
    let mut s = String::new();
    for (name, args) in nest.trace(bindings).map_err(stage("execute"))? {
        let args: Vec<String> = args.iter().map(|a| a.to_string()).collect();
        s.push_str(&format!("{name}({})\n", args.join(", ")));
    }
    Ok(s)
}

/// Human-readable summary of a pattern for `kind` on machine `m`.
pub fn inspect(p: &PatternSpec, kind: TemplateKind, m: &MachineDesc) -> String {
    let mut s = format!("pattern {}\n", p.name);
    s.push_str(&format!("hash {}\n", p.hash()));
    s.push_str(&format!("min_n {}\n", p.min_n));
    s.push_str("spaces\n");
    for d in &p.spaces {
        let dims: String = d.extents.iter().map(|e| format!("[{e}]")).collect();
        s.push_str(&format!("  {} {}{dims} pad {}\n", d.name, d.element.c_type(), d.padding));
    }
    for role in [Role::Init, Role::Run, Role::Val] {
        let names: Vec<&str> = p.statements_with(role).map(|x| x.name.as_str()).collect();
        s.push_str(&format!("{} {} ({})\n", role.file_stem(), names.join(" "), p.schedules.get(role).file()));
    }
    s.push_str(&format!("clause {}\n", p.clause));
    s.push_str(&format!("bytes_per_instance {}\n", p.run_bytes_per_instance()));
    let fp = Footprint::of_pattern(p, kind.independent());
    s.push_str(&format!("template {kind}\n"));
    s.push_str(&format!("footprint n=1000 t=1: {} bytes ({})\n", fp.total(1000, 1), band(m, &fp, 1000, 1)));
    let diags = validate_for_template(p, kind.independent());
    if diags.is_empty() {
        s.push_str("no diagnostics\n");
    }
    for d in &diags {
        s.push_str(&format!("{d}\n"));
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        s.push_str("errors found\n");
    }
    s
}
