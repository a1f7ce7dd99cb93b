//! Driver instantiation from the C templates, and compilation.
//!
//! A driver is invoked as `driver <n> <threads> <ntimes> [--counters E1,E2]
//! [--warmup R]` and prints only `key=value` lines on stdout (see
//! [`PROTOCOL_KEYS`]). It exits 0 exactly when validation passes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::generate::Kernels;
use crate::pattern::{identifiers, validate_for_template, Layout, PatternSpec, Role, Severity};

/// Keys every driver prints, in order; `counter.<NAME>` lines follow.
pub const PROTOCOL_KEYS: [&str; 4] = ["elapsed_seconds", "instances_executed", "validation", "threads"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Base {
    Unified,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TemplateKind {
    Unified,
    Independent,
    Counters(Base),
}

impl TemplateKind {
    pub fn base(self) -> Base {
        match self {
            TemplateKind::Unified => Base::Unified,
            TemplateKind::Independent => Base::Independent,
            TemplateKind::Counters(b) => b,
        }
    }

    pub fn counters(self) -> bool {
        matches!(self, TemplateKind::Counters(_))
    }

    pub fn independent(self) -> bool {
        self.base() == Base::Independent
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TemplateKind::Unified => "unified",
            TemplateKind::Independent => "independent",
            TemplateKind::Counters(Base::Unified) => "counters-unified",
            TemplateKind::Counters(Base::Independent) => "counters-independent",
        })
    }
}

impl From<TemplateKind> for String {
    fn from(k: TemplateKind) -> String {
        k.to_string()
    }
}

impl TryFrom<String> for TemplateKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for TemplateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unified" => TemplateKind::Unified,
            "independent" => TemplateKind::Independent,
            "counters" | "counters-unified" => TemplateKind::Counters(Base::Unified),
            "counters-independent" => TemplateKind::Counters(Base::Independent),
            _ => {
                return Err(Error::BadConfig(format!(
                    "unknown template `{s}` (unified, independent, counters-unified, counters-independent)"
                )))
            }
        })
    }
}

/// The skeleton files, built in or read from a directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub unified: String,
    pub independent: String,
    pub common: String,
    pub perf_header: String,
    pub perf_source: String,
}

impl Templates {
    pub fn builtin() -> Self {
        Templates {
            unified: include_str!("../../../templates/unified.c").into(),
            independent: include_str!("../../../templates/independent.c").into(),
            common: include_str!("../../../templates/driver_common.h").into(),
            perf_header: include_str!("../../../templates/perf_shim.h").into(),
            perf_source: include_str!("../../../templates/perf_shim.c").into(),
        }
    }

    /// Reads the five skeleton files from `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(Error::MissingFile(path));
            }
            fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        Ok(Templates {
            unified: read("unified.c")?,
            independent: read("independent.c")?,
            common: read("driver_common.h")?,
            perf_header: read("perf_shim.h")?,
            perf_source: read("perf_shim.c")?,
        })
    }

    pub fn resolve(dir: Option<&Path>) -> Result<Self> {
        dir.map_or_else(|| Ok(Self::builtin()), Self::load)
    }
}

/// Everything needed to compile one driver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DriverBundle {
    pub kind: TemplateKind,
    pub main_source: String,
    pub header: String,
    /// `init.c`, `run.c`, `val.c` and `count.c`.
    pub fragments: BTreeMap<String, String>,
    /// Template support files copied next to the driver.
    pub support: BTreeMap<String, String>,
    pub template_hash: String,
}

impl DriverBundle {
    pub fn files(&self) -> Vec<(&str, &str)> {
        let mut out = vec![("driver.c", self.main_source.as_str()), ("kernel.h", self.header.as_str())];
        out.extend(self.fragments.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        out.extend(self.support.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        out
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, text) in self.files() {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn sources(&self) -> Vec<&'static str> {
        if self.kind.counters() {
            vec!["driver.c", "perf_shim.c"]
        } else {
            vec!["driver.c"]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Toolchain {
    pub compiler: String,
    pub flags: Vec<String>,
}

impl Default for Toolchain {
    /// `$CC` (or `cc`) with `-O3 -fopenmp -std=c99`.
    fn default() -> Self {
        Toolchain {
            compiler: std::env::var("CC").ok().filter(|c| !c.is_empty()).unwrap_or_else(|| "cc".into()),
            flags: ["-O3", "-fopenmp", "-std=c99"].map(String::from).to_vec(),
        }
    }
}

impl Toolchain {
    /// `gcc -O2 -fopenmp`: the first word is the compiler, the rest replace
    /// the default flags. A bare compiler keeps them.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words = text.split_whitespace().map(String::from);
        let compiler = words.next().ok_or_else(|| Error::BadConfig("empty toolchain".into()))?;
        let flags: Vec<String> = words.collect();
        Ok(Toolchain {
            compiler,
            flags: if flags.is_empty() { Toolchain::default().flags } else { flags },
        })
    }

    /// The compile command, run inside the bundle directory.
    pub fn command(&self, bundle: &DriverBundle, exe_name: &str) -> Vec<String> {
        let mut cmd = vec![self.compiler.clone()];
        cmd.extend(self.flags.iter().cloned());
        if bundle.kind.counters() {
            cmd.push("-DWITH_COUNTERS".into());
        }
        cmd.extend(bundle.sources().into_iter().map(String::from));
        cmd.push("-o".into());
        cmd.push(exe_name.to_string());
        cmd.push("-lm".into());
        cmd
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Built {
    pub exe: PathBuf,
    pub command_line: String,
}

/// Writes the bundle into `dir` and compiles it there.
pub fn build(bundle: &DriverBundle, toolchain: &Toolchain, dir: &Path) -> Result<Built> {
    bundle.write_to(dir)?;
    let exe = dir.join("driver");
    let cmd = toolchain.command(bundle, "driver");
    let output = Command::new(&cmd[0]).args(&cmd[1..]).current_dir(dir).output();
    let command_line = cmd.join(" ");
    match output {
        Err(e) if e.kind() == ErrorKind::NotFound => Err(Error::CompilerNotFound(toolchain.compiler.clone())),
        Err(e) => Err(Error::io(&toolchain.compiler, e)),
        Ok(o) if !o.status.success() => Err(Error::CompileFailed {
            command: command_line,
            stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
        }),
        Ok(_) => Ok(Built { exe, command_line }),
    }
}

/// Rewrites identifiers in C text; `f` gets each identifier and the
/// character after it.
fn rewrite_idents(text: &str, f: impl Fn(&str, Option<char>) -> Option<String>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (id, next) in identifiers(text) {
        let start = id.as_ptr() as usize - text.as_ptr() as usize;
        if let Some(r) = f(id, next) {
            out.push_str(&text[last..start]);
            out.push_str(&r);
            last = start + id.len();
        }
    }
    out.push_str(&text[last..]);
    out
}

fn parenthesize(body: &str, params: &[String]) -> String {
    rewrite_idents(body, |id, _| params.iter().any(|p| p == id).then(|| format!("({id})")))
}

fn row_index(pad: u64) -> String {
    if pad == 1 {
        "[t_id]".into()
    } else {
        format!("[t_id * {pad}]")
    }
}

fn continued(lines: &[String]) -> String {
    if lines.is_empty() {
        return String::new();
    }
    lines.iter().map(|l| format!(" \\\n  {l}")).collect()
}

/// The generated `kernel.h`: allocation, mappings, statements and clause.
pub fn render_header(p: &PatternSpec, kind: TemplateKind, kernels: &Kernels) -> String {
    let private = kind.independent();
    let mut h = format!("/* {} kernel header, {} template */\n#ifndef KERNEL_H\n#define KERNEL_H\n\n", p.name, kind);

    let mut params = Vec::new();
    for (name, value) in &p.params {
        params.push(format!("const double {name} = {value};"));
    }
    for d in &kernels.derived {
        params.push(format!(
            "if (n % {0} != 0) {{ fprintf(stderr, \"n must be a multiple of {0}\\n\"); return 2; }}",
            d.divisor
        ));
        params.push(format!("const int {} = n / {};", d.name, d.divisor));
    }
    h.push_str(&format!("#define KERNEL_PARAMS{}\n\n", continued(&params)));

    h.push_str("//Allocation\n");
    let mut alloc = Vec::new();
    let mut free = Vec::new();
    let mut check = Vec::new();
    for s in &p.spaces {
        let ty = s.element.c_type();
        let exts: Vec<String> = s.extents.iter().map(|e| e.to_c()).collect();
        let elems = exts.iter().map(|e| format!(" * {e}")).collect::<String>();
        if private {
            let dims: String = exts.iter().map(|e| format!("[{e}]")).collect();
            alloc.push(format!(
                "{ty} (*{0}){dims} = driver_alloc(sizeof({ty}) * (size_t)t * {1}{elems});",
                s.name, s.padding
            ));
            if s.padding > 1 {
                check.push(format!(
                    "if (((char *){0}{1} - (char *){0}[0]) % DRIVER_LINE != 0) val_fail++;",
                    s.name,
                    row_index(s.padding)
                ));
            }
        } else if exts.len() == 1 {
            alloc.push(format!("{ty} *{} = driver_alloc(sizeof({ty}){elems});", s.name));
        } else {
            let dims: String = exts[1..].iter().map(|e| format!("[{e}]")).collect();
            alloc.push(format!("{ty} (*{}){dims} = driver_alloc(sizeof({ty}){elems});", s.name));
        }
        free.push(format!("free({});", s.name));
    }
    h.push_str(&format!("#define KERNEL_ALLOC{}\n", continued(&alloc)));
    h.push_str(&format!("#define KERNEL_FREE {}\n", free.join(" ")));
    h.push_str(&format!("#define KERNEL_LAYOUT_CHECK{}\n\n", continued(&check)));

    h.push_str("//Memory Mapping\n");
    for m in &p.mappings {
        let mut body = parenthesize(&m.body, &m.params);
        if private {
            body = rewrite_idents(&body, |id, next| {
                let s = p.space(id).filter(|_| next == Some('['))?;
                Some(format!("{id}{}", row_index(s.padding)))
            });
        }
        h.push_str(&format!("#define {}({}) {body}\n", m.name, m.params.join(", ")));
    }

    for (role, title) in [(Role::Init, "Initialization"), (Role::Run, "Statement Definition"), (Role::Val, "Validation")] {
        h.push_str(&format!("\n//{title}\n"));
        for s in p.statements_with(role) {
            let body = parenthesize(&s.body, &s.params);
            h.push_str(&format!("#define {}({}) do {{ {body} }} while (0)\n", s.name, s.params.join(", ")));
        }
    }

    h.push_str(&format!("\n//OpenMP clause\n#define CLAUSE {}\n\n#endif\n", p.clause));
    h
}

fn clause_has_nowait(clause: &str) -> bool {
    identifiers(clause).iter().any(|(id, _)| *id == "nowait")
}

fn count_fragment(p: &PatternSpec, kernels: &Kernels) -> Result<String> {
    let mut out = String::new();
    let run: Vec<_> = p.statements_with(Role::Run).collect();
    for s in &run {
        out.push_str(&format!(
            "#pragma push_macro(\"{0}\")\n#undef {0}\n#define {0}({1}) instances++\n",
            s.name,
            s.params.join(", ")
        ));
    }
    out.push_str(&kernels.run.render_plain()?);
    for s in &run {
        out.push_str(&format!("#pragma pop_macro(\"{}\")\n", s.name));
    }
    Ok(out)
}

fn sha256_hex(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    format!("{:x}", h.finalize())
}

/// Splices the kernels and the pattern declarations into a template.
pub fn instantiate(p: &PatternSpec, kind: TemplateKind, kernels: &Kernels, templates: &Templates) -> Result<DriverBundle> {
    let independent = kind.independent();
    if !independent {
        if let Some(s) = p.spaces.iter().find(|s| s.layout == Layout::PerThread) {
            return Err(Error::TemplateLayoutMismatch(format!(
                "space `{}` is per_thread; use the independent template",
                s.name
            )));
        }
    }
    let errors: Vec<String> = validate_for_template(p, independent)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| d.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(Error::BadConfig(errors.join("\n")));
    }

    let nowait = clause_has_nowait(&p.clause);
    let mut fragments = BTreeMap::new();
    let (skeleton, run_block) = if independent {
        fragments.insert("init.c".to_string(), kernels.init.render(None)?);
        fragments.insert("run.c".to_string(), kernels.run.render(None)?);
        (&templates.independent, String::new())
    } else {
        let init = kernels.init.render(Some("#pragma omp parallel for schedule(static)"))?;
        fragments.insert("init.c".to_string(), init);
        let (pragma, block) = if nowait {
            // the combined construct does not accept nowait
            ("#pragma omp for CLAUSE", "    #pragma omp parallel\n    {\n#include \"run.c\"\n    }")
        } else {
            ("#pragma omp parallel for CLAUSE", "#include \"run.c\"")
        };
        fragments.insert("run.c".to_string(), kernels.run.render(Some(pragma))?);
        (&templates.unified, block.to_string())
    };
    fragments.insert("val.c".to_string(), kernels.val.render(None)?);
    fragments.insert("count.c".to_string(), count_fragment(p, kernels)?);

    let main_source = skeleton.replace("@RUN@", &run_block);
    let mut support = BTreeMap::new();
    support.insert("driver_common.h".to_string(), templates.common.clone());
    if kind.counters() {
        support.insert("perf_shim.h".to_string(), templates.perf_header.clone());
        support.insert("perf_shim.c".to_string(), templates.perf_source.clone());
    }
    let mut hashed = vec![skeleton.as_str(), templates.common.as_str()];
    if kind.counters() {
        hashed.extend([templates.perf_header.as_str(), templates.perf_source.as_str()]);
    }
    Ok(DriverBundle {
        kind,
        header: render_header(p, kind, kernels),
        main_source,
        fragments,
        support,
        template_hash: sha256_hex(&hashed),
    })
}
